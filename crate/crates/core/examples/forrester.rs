//! The Forrester source pairs and their location-dependent costs.

use amsbq::benchmarks::costs::{forrester_classic_costs, forrester_wiggly_costs};
use amsbq::benchmarks::{benchmark, forrester_eval, BenchmarkOptions, ForresterVariant};

fn main() -> amsbq::Result<()> {
    let classic = forrester_classic_costs()?;
    let wiggly = forrester_wiggly_costs()?;
    println!("   x   classic f1  f2        c1     c2      | wiggly f1   f2        c1     c2");
    for i in 0..=10 {
        let x = i as f64 / 10.0;
        println!(
            "{x:4.1} {:10.4} {:9.4} {:6.3} {:7.4} | {:10.4} {:9.4} {:6.3} {:7.4}",
            forrester_eval(ForresterVariant::Classic, 0, x)?,
            forrester_eval(ForresterVariant::Classic, 1, x)?,
            classic.cost(0, &[x])?,
            classic.cost(1, &[x])?,
            forrester_eval(ForresterVariant::Wiggly, 0, x)?,
            forrester_eval(ForresterVariant::Wiggly, 1, x)?,
            wiggly.cost(0, &[x])?,
            wiggly.cost(1, &[x])?,
        );
    }
    for id in ["forrester-classic", "forrester-wiggly"] {
        let b = benchmark(id, &BenchmarkOptions::default())?;
        println!("{id}: integral of f1 = {:.15}", b.ground_truth());
    }
    Ok(())
}
