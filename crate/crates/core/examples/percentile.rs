//! Equal-mass (right Riemann) estimates of the Forrester integral and their
//! first-order convergence.

use amsbq::benchmarks::{forrester_eval, percentile_estimate, ForresterVariant, FORRESTER_CLASSIC_INTEGRAL};

fn main() -> amsbq::Result<()> {
    let f = |x: &[f64]| forrester_eval(ForresterVariant::Classic, 0, x[0]).expect("x in [0, 1]");
    let leading = (f(&[1.0]) - f(&[0.0])) / 2.0;
    println!("    n   estimate        error       n * error (-> {leading:.4})");
    for k in 2..=12 {
        let n = 1usize << k;
        let est = percentile_estimate(f, &[(0.0, 1.0)], n)?;
        let err = est - FORRESTER_CLASSIC_INTEGRAL;
        println!("{n:5} {est:14.10} {err:+12.4e} {:10.4}", n as f64 * err);
    }
    Ok(())
}
