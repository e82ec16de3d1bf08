//! Named benchmark problems.

use std::sync::Arc;

use rand::Rng;

use super::costs::{forrester_classic_costs, forrester_wiggly_costs};
use super::forrester::{forrester_eval, ForresterVariant};
use super::gauss_mixture::{gauss_mixture_generate, GaussMixtureSources, GAUSS_DOMAIN};
use super::sir::{sir_ground_truth, SirQoi, SirSource, DEFAULT_REPS, RATIO_DOMAIN};
use super::{FORRESTER_CLASSIC_INTEGRAL, FORRESTER_WIGGLY_INTEGRAL};
use crate::acquisition::{BlackBox, CostFn, CostModel};
use crate::error::{Error, Result};
use crate::kernels::IntegrationMeasure;
use crate::msgp::{Dataset, NoiseSetting, Observation};
use crate::rng::{self, streams};

pub const BENCHMARK_IDS: [&str; 5] = ["forrester-classic", "forrester-wiggly", "sir-max", "sir-argmax", "gauss2d"];

/// Instance seed of the Gaussian-mixture sources.
pub const GAUSS2D_INSTANCE: u64 = 4;
/// Per-query costs of the Gaussian-mixture sources.
pub const GAUSS2D_COSTS: [f64; 3] = [1.0, 0.05, 0.05];
/// Per-query costs of the Gillespie primary and the ODE secondary.
pub const SIR_COSTS: [f64; 2] = [1.0, 1e-3];

#[derive(Debug, Clone, Copy)]
pub struct BenchmarkOptions {
    /// Seeds the stochastic sources.
    pub seed: u64,
    /// Gillespie repetitions per primary SIR query.
    pub sir_reps: usize,
}

impl Default for BenchmarkOptions {
    fn default() -> Self {
        BenchmarkOptions { seed: 0, sir_reps: DEFAULT_REPS }
    }
}

struct Forrester(ForresterVariant, usize);

impl BlackBox for Forrester {
    fn evaluate(&self, x: &[f64]) -> Result<f64> {
        forrester_eval(self.0, self.1, x[0])
    }
}

struct Mixture(Arc<GaussMixtureSources>, usize);

impl BlackBox for Mixture {
    fn evaluate(&self, x: &[f64]) -> Result<f64> {
        self.0.eval(self.1, x)
    }
}

#[derive(Debug, Clone, Copy)]
enum Design {
    /// Every source at the same `n` random points.
    Colocated(usize),
    /// Every source at one random point, then one more random point per
    /// secondary, or `primary_only` primary points in total.
    Anchored { primary_only: usize },
}

#[derive(Debug, Clone, Copy)]
enum Truth {
    Value(f64),
    Sir(SirQoi),
}

/// Where the initial design puts its points.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DesignKind {
    /// Primary and secondary sources.
    MultiSource,
    /// Primary only.
    PrimaryOnly,
}

/// A registered problem: sources, measure, costs and the reference value of
/// `<f_1>`.
pub struct Benchmark {
    pub id: &'static str,
    pub measure: IntegrationMeasure,
    pub cost: CostModel,
    pub sources: Vec<Box<dyn BlackBox>>,
    /// Observation noise assumed by the model.
    pub noise: Vec<NoiseSetting>,
    truth: Truth,
    design: Design,
}

impl std::fmt::Debug for Benchmark {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Benchmark").field("id", &self.id).field("n_sources", &self.sources.len()).finish()
    }
}

fn design_rng(seed: u64) -> rand_chacha::ChaCha8Rng {
    rng::stream(seed, streams::INITIAL_DESIGN)
}

impl Benchmark {
    pub fn n_sources(&self) -> usize {
        self.sources.len()
    }

    pub fn dim(&self) -> usize {
        self.measure.dim()
    }

    pub fn source_refs(&self) -> Vec<&dyn BlackBox> {
        self.sources.iter().map(|s| s.as_ref()).collect()
    }

    /// Reference `<f_1>`; computed on first use for the stochastic SIR
    /// primary.
    pub fn ground_truth(&self) -> f64 {
        match self.truth {
            Truth::Value(v) => v,
            Truth::Sir(q) => sir_ground_truth(q),
        }
    }

    /// Cost model of the primary alone.
    pub fn primary_cost(&self) -> Result<CostModel> {
        let c = self.cost.clone();
        let f: CostFn = Arc::new(move |x: &[f64]| c.cost(0, x).unwrap_or(f64::NAN));
        CostModel::new(vec![f], self.cost.delta())
    }

    /// `(source, x)` pairs of the initial design.
    ///
    /// Forrester problems observe both sources at three random points (the
    /// primary-only design keeps the primary values). SIR observes the
    /// primary at one random point; the multi-source design adds the
    /// secondary there and at one more random point. The Gaussian mixture
    /// does the same with both secondaries, while its primary-only design
    /// uses three primary points.
    pub fn initial_points(&self, kind: DesignKind, seed: u64) -> Vec<(usize, Vec<f64>)> {
        let mut g = design_rng(seed);
        let bounds = self.measure.bounds().to_vec();
        let mut draw = move || -> Vec<f64> { bounds.iter().map(|(lo, hi)| lo + (hi - lo) * g.random::<f64>()).collect() };
        let sources = match kind {
            DesignKind::MultiSource => self.n_sources(),
            DesignKind::PrimaryOnly => 1,
        };
        match self.design {
            Design::Colocated(n) => {
                let xs: Vec<Vec<f64>> = (0..n).map(|_| draw()).collect();
                xs.iter().flat_map(|x| (0..sources).map(move |l| (l, x.clone()))).collect()
            }
            Design::Anchored { primary_only } => {
                let x0 = draw();
                let mut pts: Vec<(usize, Vec<f64>)> = (0..sources).map(|l| (l, x0.clone())).collect();
                match kind {
                    DesignKind::MultiSource => pts.extend((1..sources).map(|l| (l, draw()))),
                    DesignKind::PrimaryOnly => pts.extend((1..primary_only).map(|_| (0, draw()))),
                }
                pts
            }
        }
    }

    /// Evaluates [`Benchmark::initial_points`].
    pub fn initial_design(&self, kind: DesignKind, seed: u64) -> Result<Dataset> {
        let obs = self
            .initial_points(kind, seed)
            .into_iter()
            .map(|(l, x)| {
                let y = self.sources[l].evaluate(&x)?;
                Ok(Observation::new(l, x, y))
            })
            .collect::<Result<Vec<_>>>()?;
        Dataset::from_observations(self.dim(), obs)
    }
}

/// Looks up a benchmark by id.
pub fn benchmark(id: &str, opts: &BenchmarkOptions) -> Result<Benchmark> {
    let unit = || IntegrationMeasure::uniform_box(vec![(0.0, 1.0)]);
    match id {
        "forrester-classic" | "forrester-wiggly" => {
            let (variant, cost, truth, name) = if id == "forrester-classic" {
                (ForresterVariant::Classic, forrester_classic_costs()?, FORRESTER_CLASSIC_INTEGRAL, BENCHMARK_IDS[0])
            } else {
                (ForresterVariant::Wiggly, forrester_wiggly_costs()?, FORRESTER_WIGGLY_INTEGRAL, BENCHMARK_IDS[1])
            };
            Ok(Benchmark {
                id: name,
                measure: unit()?,
                cost,
                sources: vec![Box::new(Forrester(variant, 0)), Box::new(Forrester(variant, 1))],
                noise: vec![NoiseSetting::Fixed(0.0); 2],
                truth: Truth::Value(truth),
                design: Design::Colocated(3),
            })
        }
        "sir-max" | "sir-argmax" => {
            let (qoi, name) =
                if id == "sir-max" { (SirQoi::MaxInfected, BENCHMARK_IDS[2]) } else { (SirQoi::TimeOfMax, BENCHMARK_IDS[3]) };
            if opts.sir_reps == 0 {
                return Err(Error::Config("sir_reps must be positive".into()));
            }
            let src = |source| SirSource { source, qoi, reps: opts.sir_reps, seed: opts.seed };
            Ok(Benchmark {
                id: name,
                measure: IntegrationMeasure::uniform_box(vec![RATIO_DOMAIN])?,
                cost: CostModel::constant(&SIR_COSTS)?,
                sources: vec![Box::new(src(0)), Box::new(src(1))],
                noise: vec![NoiseSetting::Fixed(0.0); 2],
                truth: Truth::Sir(qoi),
                design: Design::Anchored { primary_only: 1 },
            })
        }
        "gauss2d" => {
            let g = Arc::new(gauss_mixture_generate(GAUSS2D_INSTANCE, 3));
            let truth = g.mean(0);
            Ok(Benchmark {
                id: BENCHMARK_IDS[4],
                measure: IntegrationMeasure::uniform_box(vec![GAUSS_DOMAIN, GAUSS_DOMAIN])?,
                cost: CostModel::constant(&GAUSS2D_COSTS)?,
                sources: (0..3).map(|l| Box::new(Mixture(g.clone(), l)) as Box<dyn BlackBox>).collect(),
                noise: vec![NoiseSetting::Fixed(0.0); 3],
                truth: Truth::Value(truth),
                design: Design::Anchored { primary_only: 3 },
            })
        }
        other => Err(Error::Config(format!("unknown benchmark '{other}'; expected one of {}", BENCHMARK_IDS.join(", ")))),
    }
}
