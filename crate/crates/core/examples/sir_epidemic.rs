//! Stochastic SEIR outbreaks against the deterministic SEIR and SIR models,
//! and the two SIR integrand sources.

use amsbq::benchmarks::sir::{gillespie_seir_seeded, sir_ode_peak, I};
use amsbq::benchmarks::{ode_seir, sir_integrand, SirParams, SirQoi};

fn main() -> amsbq::Result<()> {
    let p = SirParams::from_ratio(10.0, 1.0)?;
    let grid: Vec<f64> = (0..=12).map(|i| 0.25 * i as f64).collect();
    let ode = ode_seir(&p, &grid)?;
    let runs: Vec<_> = (0..200).map(|s| gillespie_seir_seeded(&p, s)).collect();
    let outbreaks: Vec<_> = runs.iter().filter(|t| t.is_outbreak()).collect();
    println!("a/b = 10: {} of {} runs are outbreaks", outbreaks.len(), runs.len());

    println!("\n  t     SEIR ODE I   mean I (outbreaks)");
    for (k, &t) in grid.iter().enumerate() {
        let mean = outbreaks.iter().map(|tr| tr.state_at(t)[I] as f64).sum::<f64>() / outbreaks.len() as f64;
        println!("{t:5.2} {:12.3} {mean:14.3}", ode[k][I]);
    }

    let (peak, when) = sir_ode_peak(&p)?;
    let mean_peak = outbreaks.iter().map(|t| t.peak().0).sum::<f64>() / outbreaks.len() as f64;
    println!("\nSIR ODE peak {peak:.3} at t = {when:.3}; mean stochastic SEIR peak {mean_peak:.3}");

    println!("\n a/b    f1 (Gillespie)  f2 (SIR ODE)   [weighted by the a/b prior]");
    for u in [2.0, 5.0, 10.0, 20.0, 40.0] {
        println!(
            "{u:4.0} {:15.4} {:13.4}",
            sir_integrand(0, u, SirQoi::MaxInfected, 100, 1)?,
            sir_integrand(1, u, SirQoi::MaxInfected, 100, 1)?
        );
    }
    Ok(())
}
