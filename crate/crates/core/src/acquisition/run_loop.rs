use log::{debug, info, warn};

use super::{optimize_myopic, AcquisitionKind, AcquisitionOptions, CostModel};
use crate::error::{Error, Result};
use crate::kernels::IntegrationMeasure;
use crate::msgp::{
    empirical_bayes_b_prior, fit, Dataset, FitOptions, GammaPrior, GpState, Hyperparams, NoiseSetting, Observation,
    PriorSpec,
};
use crate::quadrature::integral_posterior;
use crate::rng;

/// An expensive function that can be queried at a point.
pub trait BlackBox: Send + Sync {
    fn evaluate(&self, x: &[f64]) -> Result<f64>;
}

impl<F> BlackBox for F
where
    F: Fn(&[f64]) -> f64 + Send + Sync,
{
    fn evaluate(&self, x: &[f64]) -> Result<f64> {
        Ok(self(x))
    }
}

#[derive(Debug, Clone)]
pub struct LoopConfig {
    /// Total cost allowed, including the initial design.
    pub budget: f64,
    pub acquisition: AcquisitionKind,
    /// Must be set to run [`AcquisitionKind::Ip`].
    pub allow_pathological: bool,
    /// Local acquisition optimisations per source.
    pub restarts: usize,
    pub prescan: usize,
    pub seed: u64,
    /// Refit hyperparameters after every query.
    pub refit: bool,
    /// Starts per refit; the first is the current hyperparameters.
    pub fit_restarts: usize,
    /// Refits between ones that use all `fit_restarts` starts; the others
    /// only polish the current hyperparameters. 1 restarts every refit.
    pub fit_restart_interval: usize,
    /// Starts for the fit to the initial design.
    pub initial_fit_restarts: usize,
    pub fit_max_iter: usize,
    pub max_iterations: usize,
    /// Per-source noise; defaults to noiseless observations.
    pub noise: Option<Vec<NoiseSetting>>,
    pub lengthscale_prior: Option<GammaPrior>,
    /// Centre the `B` prior on a fit to the initial design.
    pub empirical_bayes: bool,
}

impl Default for LoopConfig {
    fn default() -> Self {
        LoopConfig {
            budget: 10.0,
            acquisition: AcquisitionKind::Mi,
            allow_pathological: false,
            restarts: 10,
            prescan: 64,
            seed: 0,
            refit: true,
            fit_restarts: 2,
            fit_restart_interval: 10,
            initial_fit_restarts: 5,
            fit_max_iter: 100,
            max_iterations: 500,
            noise: None,
            lengthscale_prior: None,
            empirical_bayes: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RecordKind {
    /// A point of the initial design.
    Initial,
    /// A point chosen by the acquisition.
    Query,
}

/// One observation accepted by the loop, with the model state after it.
#[derive(Debug, Clone)]
pub struct LoopRecord {
    pub kind: RecordKind,
    /// Zero for the initial design, then 1, 2, ...
    pub iteration: usize,
    pub source: usize,
    pub x: Vec<f64>,
    pub y: f64,
    pub cost: f64,
    pub cum_cost: f64,
    pub ez: f64,
    pub vz: f64,
    /// Rate at the chosen point (NaN for initial points).
    pub acq_value: f64,
    pub rho2: f64,
    pub hyper: Hyperparams,
    pub warning: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    Budget,
    MaxIterations,
    /// No query has a positive rate.
    Exhausted,
    Failed,
}

#[derive(Debug)]
pub struct LoopOutcome {
    pub records: Vec<LoopRecord>,
    pub termination: Termination,
    /// The error that stopped the loop, if any. Records up to that point
    /// are kept.
    pub error: Option<Error>,
    pub warnings: Vec<String>,
    pub state: Option<GpState>,
}

impl LoopOutcome {
    fn empty() -> Self {
        LoopOutcome { records: Vec::new(), termination: Termination::Budget, error: None, warnings: Vec::new(), state: None }
    }

    pub fn final_cost(&self) -> f64 {
        self.records.last().map_or(0.0, |r| r.cum_cost)
    }

    pub fn count_source(&self, l: usize) -> usize {
        self.records.iter().filter(|r| r.kind == RecordKind::Query && r.source == l).count()
    }
}

fn stage_seed(seed: u64, stage: u64, index: u64) -> u64 {
    rng::mix(rng::mix(seed ^ stage.wrapping_mul(0x9e37_79b9_7f4a_7c15)).wrapping_add(index))
}

/// Active multi-source quadrature.
///
/// Fits the model to `initial` (whose points are charged to the budget and
/// reported as [`RecordKind::Initial`] records), then repeatedly picks the
/// query with the best acquisition rate, evaluates it, and updates the
/// model until the budget is spent. The query that crosses the budget is
/// still accepted.
pub fn run_loop(
    sources: &[&dyn BlackBox],
    measure: &IntegrationMeasure,
    cost: &CostModel,
    config: &LoopConfig,
    initial: &Dataset,
) -> Result<LoopOutcome> {
    let n_sources = sources.len();
    if cost.n_sources() != n_sources {
        return Err(Error::DimensionMismatch { expected: n_sources, got: cost.n_sources() });
    }
    if config.acquisition.is_pathological() && !config.allow_pathological {
        return Err(Error::Config(
            "the integral-precision rate is pathological under non-constant cost; enable it explicitly".into(),
        ));
    }
    if initial.dim() != measure.dim() {
        return Err(Error::DimensionMismatch { expected: measure.dim(), got: initial.dim() });
    }
    if !(config.budget > 0.0) {
        return Ok(LoopOutcome::empty());
    }
    if initial.is_empty() {
        return Err(Error::InvalidParameter { name: "initial", reason: "the initial design is empty".into() });
    }
    if let Some(l) = initial.max_source() {
        if l >= n_sources {
            return Err(Error::SourceOutOfRange { index: l, n_sources });
        }
    }
    let initial_costs: Vec<f64> = initial.iter().map(|o| cost.cost(o.source, &o.x)).collect::<Result<_>>()?;
    let initial_total: f64 = initial_costs.iter().sum();
    if initial_total >= config.budget {
        return Err(Error::InvalidParameter {
            name: "budget",
            reason: format!("budget {} does not exceed the initial design cost {initial_total}", config.budget),
        });
    }

    let noise = config.noise.clone().unwrap_or_else(|| vec![NoiseSetting::Fixed(0.0); n_sources]);
    if noise.len() != n_sources {
        return Err(Error::DimensionMismatch { expected: n_sources, got: noise.len() });
    }
    let mut warnings = Vec::new();
    let mut base = PriorSpec::weak(measure, initial, noise)?;
    if let Some(p) = config.lengthscale_prior {
        base = base.with_lengthscale_prior(p);
    }
    let init_opts = FitOptions {
        restarts: config.initial_fit_restarts,
        seed: stage_seed(config.seed, 1, 0),
        max_iter: config.fit_max_iter.max(200),
    };
    let (priors, hyper) = if config.empirical_bayes {
        let eb = empirical_bayes_b_prior(initial, &base, init_opts.seed)?;
        if let Some(w) = &eb.fallback {
            warn!("{w}");
            warnings.push(w.clone());
        }
        let report = fit(initial, &eb.prior, &init_opts, eb.fitted.as_ref())?;
        (eb.prior, report.hyper)
    } else {
        let report = fit(initial, &base, &init_opts, None)?;
        if let Some(w) = &report.warning {
            warnings.push(w.clone());
        }
        (base, report.hyper)
    };
    info!("initial fit: lengthscale {:.4}, B {:?}", hyper.lengthscale, hyper.b_flat());

    let mut state = GpState::new(hyper, Dataset::new(measure.dim()))?;
    let mut records = Vec::new();
    let mut cum = 0.0;
    for (o, c) in initial.iter().zip(&initial_costs) {
        state.observe(o.clone())?;
        cum += c;
        let z = integral_posterior(&state, measure)?;
        records.push(LoopRecord {
            kind: RecordKind::Initial,
            iteration: 0,
            source: o.source,
            x: o.x.clone(),
            y: o.y,
            cost: *c,
            cum_cost: cum,
            ez: z.mean,
            vz: z.variance,
            acq_value: f64::NAN,
            rho2: f64::NAN,
            hyper: state.hyperparams().clone(),
            warning: None,
        });
    }

    let mut termination = Termination::Budget;
    let mut error = None;
    let mut iteration = 0;
    while cum < config.budget {
        if iteration >= config.max_iterations {
            termination = Termination::MaxIterations;
            break;
        }
        iteration += 1;
        let opts = AcquisitionOptions {
            restarts: config.restarts,
            prescan: config.prescan,
            seed: stage_seed(config.seed, 2, iteration as u64),
            max_iter: 100,
        };
        let sel = match optimize_myopic(&state, measure, cost, config.acquisition, &opts) {
            Ok(Some(s)) => s,
            Ok(None) => {
                termination = Termination::Exhausted;
                break;
            }
            Err(e) => {
                termination = Termination::Failed;
                error = Some(e);
                break;
            }
        };
        let y = match sources[sel.source].evaluate(&sel.x) {
            Ok(y) if y.is_finite() => y,
            Ok(y) => {
                termination = Termination::Failed;
                error = Some(Error::QueryFailed { source_index: sel.source, reason: format!("non-finite value {y}") });
                break;
            }
            Err(e) => {
                termination = Termination::Failed;
                error = Some(Error::QueryFailed { source_index: sel.source, reason: e.to_string() });
                break;
            }
        };
        if let Err(e) = state.observe(Observation::new(sel.source, sel.x.clone(), y)) {
            termination = Termination::Failed;
            error = Some(e);
            break;
        }
        cum += sel.cost;

        let mut warning = None;
        if config.refit {
            let full = iteration % config.fit_restart_interval.max(1) == 0;
            let fo = FitOptions {
                restarts: if full { config.fit_restarts } else { 1 },
                seed: stage_seed(config.seed, 3, iteration as u64),
                max_iter: config.fit_max_iter,
            };
            match fit(state.data(), &priors, &fo, Some(state.hyperparams())) {
                Ok(report) => {
                    warning = report.warning;
                    if let Err(e) = state.set_hyperparams(report.hyper) {
                        warning = Some(format!("refit rejected ({e}); keeping previous hyperparameters"));
                    }
                }
                Err(e) => warning = Some(format!("refit failed ({e}); keeping previous hyperparameters")),
            }
        }
        if let Some(w) = &warning {
            warn!("iteration {iteration}: {w}");
            warnings.push(format!("iteration {iteration}: {w}"));
        }
        let z = match integral_posterior(&state, measure) {
            Ok(z) => z,
            Err(e) => {
                termination = Termination::Failed;
                error = Some(e);
                break;
            }
        };
        debug!(
            "iteration {iteration}: source {} x {:?} rate {:.4e} rho2 {:.4} cost {:.4} E[Z] {:.6} V[Z] {:.3e}",
            sel.source + 1,
            sel.x,
            sel.rate,
            sel.rho2,
            sel.cost,
            z.mean,
            z.variance
        );
        records.push(LoopRecord {
            kind: RecordKind::Query,
            iteration,
            source: sel.source,
            x: sel.x,
            y,
            cost: sel.cost,
            cum_cost: cum,
            ez: z.mean,
            vz: z.variance,
            acq_value: sel.rate,
            rho2: sel.rho2,
            hyper: state.hyperparams().clone(),
            warning,
        });
    }
    Ok(LoopOutcome { records, termination, error, warnings, state: Some(state) })
}
