//! The Gaussian belief over the primary integral and the correlation
//! `rho^2` between it and a prospective observation.

use amsbq::kernels::IntegrationMeasure;
use amsbq::msgp::{Dataset, GpState, Hyperparams, Observation};
use amsbq::quadrature::{integral_posterior, rho_squared, variance_reduction, CandidateBatch};
use nalgebra::DMatrix;

fn main() -> amsbq::Result<()> {
    let measure = IntegrationMeasure::uniform_box(vec![(0.0, 1.0)])?;
    // strongly correlated secondary source
    let hyper = Hyperparams {
        lengthscale: 0.15,
        w: DMatrix::from_row_slice(2, 1, &[1.0, 0.95]),
        eta: vec![1e-3, 0.05],
        noise: vec![0.0, 0.0],
    };
    let data = Dataset::from_observations(
        1,
        vec![Observation::new(0, vec![0.2], 0.4), Observation::new(1, vec![0.7], -0.1)],
    )?;
    let state = GpState::new(hyper, data)?;
    let z = integral_posterior(&state, &measure)?;
    println!("E[Z] = {:.6}, V[Z] = {:.6e}", z.mean, z.variance);

    println!("\n   x    rho2(f1)  rho2(f2)");
    for i in 0..=10 {
        let x = i as f64 / 10.0;
        let r1 = rho_squared(&state, &CandidateBatch::single(0, vec![x]), &measure, &z)?;
        let r2 = rho_squared(&state, &CandidateBatch::single(1, vec![x]), &measure, &z)?;
        println!("{x:5.2} {r1:9.5} {r2:9.5}");
    }

    let pair = CandidateBatch::new(vec![0, 1], vec![vec![0.5], vec![0.9]])?;
    println!("\nbatch {{f1(0.5), f2(0.9)}}: expected variance drop {:.6e}", variance_reduction(&state, &pair, &measure)?);
    Ok(())
}
