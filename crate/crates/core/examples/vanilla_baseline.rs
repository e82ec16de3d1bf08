//! Multi-source quadrature against single-source vanilla BQ on the wiggly
//! Forrester pair.

use amsbq::acquisition::{run_loop, AcquisitionKind, LoopConfig, LoopOutcome};
use amsbq::benchmarks::{benchmark, vanilla_bq_baseline, BenchmarkOptions, DesignKind};

fn cost_to(outcome: &LoopOutcome, truth: f64, tol: f64) -> Option<f64> {
    outcome.records.iter().find(|r| ((r.ez - truth) / truth).abs() < tol).map(|r| r.cum_cost)
}

fn main() -> amsbq::Result<()> {
    let b = benchmark("forrester-wiggly", &BenchmarkOptions::default())?;
    let truth = b.ground_truth();
    let config = LoopConfig {
        budget: 25.0,
        acquisition: AcquisitionKind::Mi,
        seed: 3,
        noise: Some(b.noise.clone()),
        ..LoopConfig::default()
    };

    let multi = run_loop(&b.source_refs(), &b.measure, &b.cost, &config, &b.initial_design(DesignKind::MultiSource, 3)?)?;
    let vanilla = vanilla_bq_baseline(
        b.sources[0].as_ref(),
        &b.measure,
        &b.primary_cost()?,
        &config,
        &b.initial_design(DesignKind::PrimaryOnly, 3)?,
    )?;

    for (name, o) in [("multi-source", &multi), ("vanilla", &vanilla)] {
        let last = o.records.last().expect("records");
        println!(
            "{name:>12}: final rel err {:+.3e}, cost to 1%: {:?}, primary/secondary queries {}/{}",
            (last.ez - truth) / truth,
            cost_to(o, truth, 0.01),
            o.count_source(0),
            o.count_source(1)
        );
    }
    Ok(())
}
