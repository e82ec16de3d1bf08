use amsbq::acquisition::{AcquisitionKind, LoopConfig};
use amsbq::benchmarks::{benchmark, vanilla_bq_baseline, BenchmarkOptions, DesignKind, BENCHMARK_IDS};

fn opts() -> BenchmarkOptions {
    BenchmarkOptions { sir_reps: 20, ..BenchmarkOptions::default() }
}

#[test]
fn registry_entries_are_consistent() {
    for id in BENCHMARK_IDS.iter().filter(|id| !id.starts_with("sir")) {
        let b = benchmark(id, &opts()).unwrap();
        assert_eq!(b.id, *id);
        assert_eq!(b.sources.len(), b.n_sources());
        assert_eq!(b.noise.len(), b.n_sources());
        assert!(b.ground_truth().is_finite() && b.ground_truth() != 0.0);
        let centre: Vec<f64> = b.measure.bounds().iter().map(|(lo, hi)| 0.5 * (lo + hi)).collect();
        for l in 0..b.n_sources() {
            let c = b.cost.cost(l, &centre).unwrap();
            assert!(c > 0.0 && c <= 1.0);
            assert!(b.sources[l].evaluate(&centre).unwrap().is_finite());
        }
    }
    assert!(benchmark("nope", &opts()).is_err());
}

#[test]
fn initial_designs_cost_what_they_should() {
    let cost_of = |id: &str, kind| {
        let b = benchmark(id, &opts()).unwrap();
        let d = b.initial_design(kind, 0).unwrap();
        d.iter().map(|o| b.cost.cost(o.source, &o.x).unwrap()).sum::<f64>()
    };
    assert!((cost_of("gauss2d", DesignKind::MultiSource) - 1.2).abs() < 1e-12);
    assert!((cost_of("gauss2d", DesignKind::PrimaryOnly) - 3.0).abs() < 1e-12);
    assert!((cost_of("sir-max", DesignKind::PrimaryOnly) - 1.0).abs() < 1e-12);
    assert!((cost_of("sir-max", DesignKind::MultiSource) - 1.002).abs() < 1e-12);
}

#[test]
fn designs_are_seeded() {
    let b = benchmark("forrester-wiggly", &opts()).unwrap();
    assert_eq!(b.initial_points(DesignKind::MultiSource, 4), b.initial_points(DesignKind::MultiSource, 4));
    assert_ne!(b.initial_points(DesignKind::MultiSource, 4), b.initial_points(DesignKind::MultiSource, 5));
    assert!(b.initial_points(DesignKind::PrimaryOnly, 4).iter().all(|(l, _)| *l == 0));
}

#[test]
fn vanilla_baseline_queries_only_the_primary() {
    let b = benchmark("forrester-classic", &opts()).unwrap();
    let config = LoopConfig { budget: 12.0, acquisition: AcquisitionKind::Mi, restarts: 4, ..LoopConfig::default() };
    let out = vanilla_bq_baseline(
        b.sources[0].as_ref(),
        &b.measure,
        &b.primary_cost().unwrap(),
        &config,
        &b.initial_design(DesignKind::PrimaryOnly, 0).unwrap(),
    )
    .unwrap();
    assert!(out.records.iter().all(|r| r.source == 0));
    assert!(out.records.len() > 3);
    let truth = b.ground_truth();
    let last = out.records.last().unwrap();
    assert!(((last.ez - truth) / truth).abs() < 0.05, "{} {truth} {}", last.ez, out.records.len());
}

#[test]
fn sir_sources_are_reproducible() {
    let b = benchmark("sir-max", &opts()).unwrap();
    for l in 0..2 {
        let a = b.sources[l].evaluate(&[8.0]).unwrap();
        assert_eq!(a, b.sources[l].evaluate(&[8.0]).unwrap());
        assert!(a > 0.0);
    }
    assert!(b.sources[0].evaluate(&[0.5]).is_err());
}
