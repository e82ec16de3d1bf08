//! Two-source GP regression: a handful of primary observations plus dense
//! secondary ones, with hyperparameters fitted by MAP.

use amsbq::kernels::IntegrationMeasure;
use amsbq::msgp::{fit, Dataset, FitOptions, GpState, NoiseSetting, Observation, PriorSpec};

fn primary(x: f64) -> f64 {
    (6.0 * x).sin() + 0.5 * x
}

fn secondary(x: f64) -> f64 {
    0.8 * primary(x) + 0.2
}

fn main() -> amsbq::Result<()> {
    let measure = IntegrationMeasure::uniform_box(vec![(0.0, 1.0)])?;
    let mut obs = Vec::new();
    for x in [0.1, 0.55, 0.9] {
        obs.push(Observation::new(0, vec![x], primary(x)));
    }
    for i in 0..12 {
        let x = i as f64 / 11.0;
        obs.push(Observation::new(1, vec![x], secondary(x)));
    }
    let data = Dataset::from_observations(1, obs)?;

    let priors = PriorSpec::weak(&measure, &data, vec![NoiseSetting::Fixed(0.0); 2])?;
    let report = fit(&data, &priors, &FitOptions::default(), None)?;
    let h = &report.hyper;
    println!("lengthscale {:.4}, correlation(f1, f2) {:.4}", h.lengthscale, h.correlation(0, 1));
    println!("log MAP objective {:.4} ({} starts succeeded)", report.objective, report.successful_starts);

    let state = GpState::new(report.hyper, data)?;
    println!("\n   x     truth     mean      sd");
    for i in 0..=10 {
        let x = i as f64 / 10.0;
        let (m, v) = state.posterior(0, &[x])?;
        println!("{x:5.2} {:9.4} {m:9.4} {:7.4}", primary(x), v.sqrt());
    }
    Ok(())
}
