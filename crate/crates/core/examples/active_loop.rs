//! Active multi-source quadrature on user-supplied sources: an expensive
//! primary, a cheap correlated secondary and constant costs.

use amsbq::acquisition::{run_loop, AcquisitionKind, BlackBox, CostModel, LoopConfig, RecordKind};
use amsbq::kernels::IntegrationMeasure;
use amsbq::msgp::{Dataset, Observation};

fn main() -> amsbq::Result<()> {
    let f1 = |x: &[f64]| (3.0 * x[0]).sin() + x[0] * x[0];
    let f2 = |x: &[f64]| 0.9 * ((3.0 * x[0]).sin() + x[0] * x[0]) + 0.1 * (9.0 * x[0]).cos();
    // integral of f1 over [0, 1]
    let truth = (1.0 - 3f64.cos()) / 3.0 + 1.0 / 3.0;

    let measure = IntegrationMeasure::uniform_box(vec![(0.0, 1.0)])?;
    let cost = CostModel::constant(&[1.0, 0.1])?;
    let mut initial = Dataset::new(1);
    for x in [0.15, 0.5, 0.85] {
        initial.push(Observation::new(0, vec![x], f1(&[x])))?;
        initial.push(Observation::new(1, vec![x], f2(&[x])))?;
    }

    let config = LoopConfig { budget: 8.0, acquisition: AcquisitionKind::Mi, seed: 7, ..LoopConfig::default() };
    let sources: [&dyn BlackBox; 2] = [&f1, &f2];
    let outcome = run_loop(&sources, &measure, &cost, &config, &initial)?;

    println!("iter source   x        cost   cum     E[Z]       rel err");
    for r in outcome.records.iter().filter(|r| r.kind == RecordKind::Query) {
        println!(
            "{:4} {:6} {:8.4} {:6.3} {:6.3} {:10.6} {:+.2e}",
            r.iteration,
            r.source + 1,
            r.x[0],
            r.cost,
            r.cum_cost,
            r.ez,
            (r.ez - truth) / truth
        );
    }
    println!(
        "\n{:?} after cost {:.2}: {} primary and {} secondary queries",
        outcome.termination,
        outcome.final_cost(),
        outcome.count_source(0),
        outcome.count_source(1)
    );
    Ok(())
}
