//! Test integrands, cost models, simulators and baselines.

pub mod baseline;
pub mod costs;
pub mod forrester;
pub mod gauss_mixture;
pub mod ode;
pub mod percentile;
pub mod registry;
pub mod sir;

pub use baseline::{cost_free, vanilla_bq_baseline};
pub use costs::{logistic, LogisticCost, LogisticValley};
pub use forrester::{forrester_eval, ForresterVariant};
pub use ode::{dopri5, DenseStep, OdeOptions, OdeSolution};
pub use gauss_mixture::{gauss_mixture_generate, GaussMixtureSources};
pub use percentile::{percentile_estimate, percentile_nodes};
pub use registry::{benchmark, Benchmark, BenchmarkOptions, DesignKind, BENCHMARK_IDS};
pub use sir::{gillespie_seir, ode_seir, ode_sir, sir_integrand, SirParams, SirQoi, Trajectory};

/// `<f_1>` of the classic Forrester function over `[0, 1]`.
pub const FORRESTER_CLASSIC_INTEGRAL: f64 = 0.453211319010021;
/// `<f_1>` of the wiggly Forrester function over `[0, 1]`.
pub const FORRESTER_WIGGLY_INTEGRAL: f64 = 0.33706349039578576;
