use rand::Rng;
use rayon::prelude::*;

use super::{AcquisitionKind, CostModel, PERFECT_STEP};
use crate::error::{Error, Result};
use crate::kernels::IntegrationMeasure;
use crate::msgp::GpState;
use crate::optim::{minimize, numerical_gradient, Bounds, QuasiNewtonOptions};
use crate::quadrature::{CorrelationSurface, IntegralModel, VARIANCE_FLOOR};
use crate::rng;

#[derive(Debug, Clone, Copy)]
pub struct AcquisitionOptions {
    /// Local optimisations per source.
    pub restarts: usize,
    /// Random points scored per source before choosing local starts.
    pub prescan: usize,
    pub seed: u64,
    pub max_iter: usize,
}

impl Default for AcquisitionOptions {
    fn default() -> Self {
        AcquisitionOptions { restarts: 10, prescan: 64, seed: 0, max_iter: 100 }
    }
}

/// Chosen `(source, location)` with its rate, `rho^2` and cost.
#[derive(Debug, Clone, PartialEq)]
pub struct Selection {
    pub source: usize,
    pub x: Vec<f64>,
    pub rate: f64,
    pub rho2: f64,
    pub cost: f64,
}

impl Selection {
    fn is_perfect(&self) -> bool {
        self.rho2 >= 1.0 - PERFECT_STEP
    }
}

fn corners(bounds: &[(f64, f64)]) -> Vec<Vec<f64>> {
    let d = bounds.len();
    let mut out = Vec::new();
    if d <= 3 {
        for mask in 0..(1usize << d) {
            out.push(bounds.iter().enumerate().map(|(i, (lo, hi))| if mask >> i & 1 == 1 { *hi } else { *lo }).collect());
        }
    } else {
        out.push(bounds.iter().map(|b| b.0).collect());
        out.push(bounds.iter().map(|b| b.1).collect());
    }
    out.push(bounds.iter().map(|(lo, hi)| 0.5 * (lo + hi)).collect());
    out
}

fn evaluate<S: CorrelationSurface + ?Sized>(
    surface: &S,
    cost: &CostModel,
    kind: AcquisitionKind,
    l: usize,
    x: &[f64],
) -> Result<(f64, f64, f64)> {
    let rho2 = surface.rho_squared(l, x)?;
    let c = cost.cost(l, x)?;
    // cost-free rates are monotone in rho^2, so all of them search the same
    // surface and pick the same points
    let s = if kind.uses_cost() { kind.score(rho2, c) } else { rho2 };
    Ok((rho2, c, s))
}

fn select(surface: &(impl CorrelationSurface + ?Sized), cost: &CostModel, kind: AcquisitionKind, l: usize, x: Vec<f64>) -> Result<Selection> {
    let (rho2, c, _) = evaluate(surface, cost, kind, l, &x)?;
    Ok(Selection { source: l, rate: kind.rate(rho2, c)?, rho2, cost: c, x })
}

fn optimize_source<S: CorrelationSurface + ?Sized>(
    surface: &S,
    cost: &CostModel,
    kind: AcquisitionKind,
    l: usize,
    opts: &AcquisitionOptions,
) -> Result<Selection> {
    let bounds = surface.bounds();
    // every source sees the same random starts
    let mut rng = rng::substream(opts.seed, rng::streams::ACQUISITION, 0);
    let mut pool = corners(bounds);
    for _ in 0..opts.prescan.max(opts.restarts) {
        pool.push(bounds.iter().map(|(lo, hi)| lo + (hi - lo) * rng.random::<f64>()).collect());
    }
    let mut scored = Vec::with_capacity(pool.len());
    for x in pool {
        let (rho2, c, s) = evaluate(surface, cost, kind, l, &x)?;
        scored.push((x, rho2, c, s));
    }

    if kind.diverges() {
        if let Some((x, ..)) = scored
            .iter()
            .filter(|p| p.1 >= 1.0 - PERFECT_STEP)
            .min_by(|a, b| a.2.total_cmp(&b.2))
        {
            return select(surface, cost, kind, l, x.clone());
        }
    }

    let mut order: Vec<usize> = (0..scored.len()).collect();
    order.sort_by(|&a, &b| scored[b].3.total_cmp(&scored[a].3).then(a.cmp(&b)));
    let scale = scored[order[0]].3;
    if !(scale > 0.0) {
        return select(surface, cost, kind, l, scored[order[0]].0.clone());
    }

    let box_ = Bounds::new(bounds.iter().map(|b| b.0).collect(), bounds.iter().map(|b| b.1).collect());
    let qn = QuasiNewtonOptions { max_iter: opts.max_iter, grad_tol: 1e-9, f_tol: 1e-13, initial_step: 0.05 };
    let mut best = (scored[order[0]].0.clone(), scale);
    let mut first_err: Option<Error> = None;
    for &i in order.iter().take(opts.restarts.max(1)) {
        let mut objective = |x: &[f64]| match evaluate(surface, cost, kind, l, x) {
            Ok((_, _, s)) => -s / scale,
            Err(e) => {
                first_err.get_or_insert(e);
                f64::INFINITY
            }
        };
        let res = minimize(
            |x| {
                let v = objective(x);
                let g = numerical_gradient(&mut objective, x, &box_, 1e-7);
                (v, g)
            },
            &scored[i].0,
            &box_,
            &qn,
        );
        let s = -res.value * scale;
        if s > best.1 {
            best = (res.x, s);
        }
    }
    if let Some(e) = first_err {
        if !best.1.is_finite() {
            return Err(e);
        }
    }
    select(surface, cost, kind, l, best.0)
}

/// Maximises the acquisition rate over every source and location of a
/// correlation surface.
///
/// Each source gets `restarts` bounded quasi-Newton runs started from the
/// best points of a shared random prescan (plus the box corners and centre).
/// Perfect steps (`rho^2 >= 1 - 1e-12` under MI or IP) win immediately,
/// cheapest first. Otherwise the highest rate wins, ties going to the
/// cheaper query and then to the lower source index. Returns `None` when
/// every rate is zero, i.e. the model has nothing left to learn.
pub fn optimize_rate<S: CorrelationSurface + ?Sized>(
    surface: &S,
    cost: &CostModel,
    kind: AcquisitionKind,
    opts: &AcquisitionOptions,
) -> Result<Option<Selection>> {
    let n = surface.n_sources();
    if cost.n_sources() != n {
        return Err(Error::DimensionMismatch { expected: n, got: cost.n_sources() });
    }
    let per_source: Vec<Selection> = (0..n)
        .into_par_iter()
        .map(|l| optimize_source(surface, cost, kind, l, opts))
        .collect::<Result<_>>()?;

    if kind.diverges() {
        if let Some(s) = per_source
            .iter()
            .filter(|s| s.is_perfect())
            .min_by(|a, b| a.cost.total_cmp(&b.cost).then(a.source.cmp(&b.source)))
        {
            return Ok(Some(s.clone()));
        }
    }
    let best = per_source
        .into_iter()
        .reduce(|a, b| {
            let tie = (a.rate - b.rate).abs() <= 1e-12 * a.rate.abs().max(b.rate.abs());
            let b_wins = if tie { b.cost < a.cost } else { b.rate > a.rate };
            if b_wins {
                b
            } else {
                a
            }
        })
        .expect("at least one source");
    Ok(if best.rate > 0.0 { Some(best) } else { None })
}

/// [`optimize_rate`] on the integral model of `state`. Returns `None` when
/// the integral variance has reached the floor or no query has a positive
/// rate.
pub fn optimize_myopic(
    state: &GpState,
    measure: &IntegrationMeasure,
    cost: &CostModel,
    kind: AcquisitionKind,
    opts: &AcquisitionOptions,
) -> Result<Option<Selection>> {
    let model = IntegralModel::new(state, measure)?;
    if model.posterior().variance <= VARIANCE_FLOOR {
        return Ok(None);
    }
    optimize_rate(&model, cost, kind, opts)
}

/// Index and value of the largest rate of source `l` over `grid`; the
/// first maximiser wins ties.
pub fn grid_argmax<S: CorrelationSurface + ?Sized>(
    surface: &S,
    cost: &CostModel,
    kind: AcquisitionKind,
    l: usize,
    grid: &[Vec<f64>],
) -> Result<(usize, f64)> {
    let mut best = (0, f64::NEG_INFINITY);
    for (i, x) in grid.iter().enumerate() {
        let rho2 = surface.rho_squared(l, x)?;
        let r = kind.rate(rho2, cost.cost(l, x)?)?;
        if r > best.1 {
            best = (i, r);
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;
    use std::sync::Arc;

    use super::*;
    use crate::quadrature::FnSurface;

    fn sine_surface() -> FnSurface<impl Fn(usize, &[f64]) -> f64 + Sync> {
        FnSurface::new(vec![(0.0, 0.2)], 1, |_, x: &[f64]| 0.95 * (10.0 * x[0]).sin().powi(2))
    }

    fn rising_cost() -> CostModel {
        CostModel::new(vec![Arc::new(|x: &[f64]| 0.05 + 4.0 * x[0])], 0.05).unwrap()
    }

    #[test]
    fn synthetic_profile_constant_cost() {
        let s = sine_surface();
        let c = CostModel::constant(&[0.5]).unwrap();
        for kind in [AcquisitionKind::Mi, AcquisitionKind::Ivr, AcquisitionKind::Ip] {
            let sel = optimize_rate(&s, &c, kind, &AcquisitionOptions::default()).unwrap().unwrap();
            assert!((sel.x[0] - PI / 20.0).abs() < 1e-4, "{kind}: {}", sel.x[0]);
        }
    }

    #[test]
    fn mi_leans_towards_correlation() {
        let s = sine_surface();
        let c = rising_cost();
        let opts = AcquisitionOptions::default();
        let mi = optimize_rate(&s, &c, AcquisitionKind::Mi, &opts).unwrap().unwrap();
        let ivr = optimize_rate(&s, &c, AcquisitionKind::Ivr, &opts).unwrap().unwrap();
        let peak = PI / 20.0;
        assert!((mi.x[0] - peak).abs() <= (ivr.x[0] - peak).abs());
        assert!((mi.x[0] - ivr.x[0]).abs() > 1e-3);
    }

    #[test]
    fn zero_surface_signals_termination() {
        let s = FnSurface::new(vec![(0.0, 1.0)], 2, |_, _: &[f64]| 0.0);
        let c = CostModel::constant(&[1.0, 0.1]).unwrap();
        let opts = AcquisitionOptions::default();
        assert!(optimize_rate(&s, &c, AcquisitionKind::Mi, &opts).unwrap().is_none());
        assert!(optimize_rate(&s, &c, AcquisitionKind::Ivr, &opts).unwrap().is_none());
        // IP never sees a zero rate and heads for the cheap source
        let ip = optimize_rate(&s, &c, AcquisitionKind::Ip, &opts).unwrap().unwrap();
        assert_eq!(ip.source, 1);
    }

    #[test]
    fn perfect_step_prefers_cheapest() {
        let s = FnSurface::new(vec![(0.0, 1.0)], 2, |_, x: &[f64]| if x[0] > 0.5 { 1.0 } else { 0.2 });
        let c = CostModel::new(vec![Arc::new(|_: &[f64]| 0.5), Arc::new(|x: &[f64]| 0.1 + 0.5 * x[0])], 0.1).unwrap();
        let sel = optimize_rate(&s, &c, AcquisitionKind::Mi, &AcquisitionOptions::default()).unwrap().unwrap();
        assert_eq!(sel.rate, f64::INFINITY);
        assert_eq!(sel.source, 1);
        assert!(sel.cost <= 0.5);
    }

    #[test]
    fn ties_go_to_cheaper_then_lower_source() {
        let s = FnSurface::new(vec![(0.0, 1.0)], 3, |_, x: &[f64]| 0.5 * (1.0 - (x[0] - 0.3).powi(2)));
        let c = CostModel::constant(&[0.5, 0.5, 0.5]).unwrap();
        let sel = optimize_rate(&s, &c, AcquisitionKind::Ivr, &AcquisitionOptions::default()).unwrap().unwrap();
        assert_eq!(sel.source, 0);
        let c = CostModel::constant(&[0.5, 0.2, 0.2]).unwrap();
        let sel = optimize_rate(&s, &c, AcquisitionKind::Ivr, &AcquisitionOptions::default()).unwrap().unwrap();
        assert_eq!(sel.source, 1);
    }

    #[test]
    fn deterministic_given_seed() {
        let s = FnSurface::new(vec![(0.0, 1.0), (0.0, 1.0)], 2, |l, x: &[f64]| {
            0.4 * (1.0 + (7.0 * x[0] + l as f64).sin() * (5.0 * x[1]).cos()) / 2.0
        });
        let c = CostModel::constant(&[1.0, 0.3]).unwrap();
        let opts = AcquisitionOptions { seed: 17, ..AcquisitionOptions::default() };
        let a = optimize_rate(&s, &c, AcquisitionKind::Mi, &opts).unwrap();
        let b = optimize_rate(&s, &c, AcquisitionKind::Mi, &opts).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn grid_argmax_on_profile() {
        let s = sine_surface();
        let c = CostModel::constant(&[1.0]).unwrap();
        let grid: Vec<Vec<f64>> = (0..=2000).map(|i| vec![0.2 * i as f64 / 2000.0]).collect();
        let (i, _) = grid_argmax(&s, &c, AcquisitionKind::IvrNoCost, 0, &grid).unwrap();
        assert!((grid[i][0] - PI / 20.0).abs() <= 1e-4);
    }
}
