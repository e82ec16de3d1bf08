use amsbq::acquisition::{run_loop, AcquisitionKind, BlackBox, CostModel, LoopConfig, RecordKind, Termination};
use amsbq::kernels::IntegrationMeasure;
use amsbq::msgp::{Dataset, Observation};
use amsbq::Error;

fn f1(x: &[f64]) -> f64 {
    (4.0 * x[0]).sin() + 0.3 * x[0]
}

fn f2(x: &[f64]) -> f64 {
    0.9 * f1(x) + 0.05
}

fn setup() -> (IntegrationMeasure, CostModel, Dataset) {
    let measure = IntegrationMeasure::uniform_box(vec![(0.0, 1.0)]).unwrap();
    let cost = CostModel::constant(&[1.0, 0.2]).unwrap();
    let mut initial = Dataset::new(1);
    for x in [0.2, 0.6] {
        initial.push(Observation::new(0, vec![x], f1(&[x]))).unwrap();
        initial.push(Observation::new(1, vec![x], f2(&[x]))).unwrap();
    }
    (measure, cost, initial)
}

fn config(budget: f64, seed: u64) -> LoopConfig {
    LoopConfig { budget, seed, restarts: 4, prescan: 32, ..LoopConfig::default() }
}

const SOURCES: [&dyn BlackBox; 2] = [&f1, &f2];

#[test]
fn spend_stays_within_budget_plus_last_query() {
    let (m, c, init) = setup();
    let out = run_loop(&SOURCES, &m, &c, &config(4.0, 1), &init).unwrap();
    assert_eq!(out.termination, Termination::Budget);
    let recs = &out.records;
    assert!(recs[..4].iter().all(|r| r.kind == RecordKind::Initial && r.iteration == 0));
    assert!(recs.windows(2).all(|w| w[1].cum_cost > w[0].cum_cost));
    let last = recs.last().unwrap();
    assert!(last.cum_cost >= 4.0 && last.cum_cost - last.cost < 4.0);
    for (i, r) in recs[4..].iter().enumerate() {
        assert_eq!(r.iteration, i + 1);
        assert!(r.vz > 0.0 && r.rho2 >= 0.0 && r.rho2 <= 1.0);
    }
}

#[test]
fn same_seed_same_records() {
    let (m, c, init) = setup();
    let a = run_loop(&SOURCES, &m, &c, &config(3.0, 5), &init).unwrap();
    let b = run_loop(&SOURCES, &m, &c, &config(3.0, 5), &init).unwrap();
    assert_eq!(a.records.len(), b.records.len());
    for (x, y) in a.records.iter().zip(&b.records) {
        assert_eq!((x.source, &x.x, x.ez.to_bits(), x.vz.to_bits()), (y.source, &y.x, y.ez.to_bits(), y.vz.to_bits()));
    }
}

#[test]
fn estimate_approaches_truth() {
    let (m, c, init) = setup();
    let truth = (1.0 - 4f64.cos()) / 4.0 + 0.15;
    let out = run_loop(&SOURCES, &m, &c, &config(6.0, 2), &init).unwrap();
    let last = out.records.last().unwrap();
    assert!(((last.ez - truth) / truth).abs() < 0.01, "E[Z] {} vs {truth}", last.ez);
    let first = &out.records[3];
    assert!(last.vz < first.vz);
}

#[test]
fn pathological_rate_refused_by_default() {
    let (m, c, init) = setup();
    let cfg = LoopConfig { acquisition: AcquisitionKind::Ip, ..config(3.0, 0) };
    assert!(matches!(run_loop(&SOURCES, &m, &c, &cfg, &init), Err(Error::Config(_))));
}

#[test]
fn zero_budget_does_nothing() {
    let (m, c, init) = setup();
    let out = run_loop(&SOURCES, &m, &c, &config(0.0, 0), &init).unwrap();
    assert!(out.records.is_empty());
}

#[test]
fn budget_below_initial_cost_is_an_error() {
    let (m, c, init) = setup();
    assert!(run_loop(&SOURCES, &m, &c, &config(2.0, 0), &init).is_err());
}

#[test]
fn failing_source_keeps_partial_records() {
    struct Broken;
    impl BlackBox for Broken {
        fn evaluate(&self, _: &[f64]) -> amsbq::Result<f64> {
            Err(Error::QueryFailed { source_index: 0, reason: "simulator crashed".into() })
        }
    }
    let (m, c, init) = setup();
    let sources: [&dyn BlackBox; 2] = [&Broken, &Broken];
    let out = run_loop(&sources, &m, &c, &config(5.0, 0), &init).unwrap();
    assert_eq!(out.termination, Termination::Failed);
    assert!(out.error.is_some());
    assert_eq!(out.records.len(), 4);
}

#[test]
fn max_iterations_stops_the_loop() {
    let (m, c, init) = setup();
    let cfg = LoopConfig { max_iterations: 3, ..config(100.0, 0) };
    let out = run_loop(&SOURCES, &m, &c, &cfg, &init).unwrap();
    assert_eq!(out.termination, Termination::MaxIterations);
    assert_eq!(out.records.len(), 7);
}
