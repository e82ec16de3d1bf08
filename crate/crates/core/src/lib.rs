//! Active multi-source Bayesian quadrature.
//!
//! Estimates the integral of an expensive primary function `f_1` against a
//! probability measure while drawing on cheaper, correlated secondary
//! sources `f_2 .. f_L`. The model is a multi-output Gaussian process with an
//! intrinsic coregionalization (ICM) kernel whose base kernel is the
//! squared exponential, so kernel means and the initial error are available
//! in closed form. Queries are chosen one `(source, location)` pair at a time
//! by maximising a cost-sensitive acquisition *rate*.
//!
//! Module map:
//!
//! - [`kernels`]: RBF and ICM kernels, their integrals against a uniform box.
//! - [`msgp`]: datasets, Gram matrices, posterior inference, MAP fitting.
//! - [`quadrature`]: the Gaussian belief over the integral and the scalar
//!   correlation `rho^2` that every acquisition is built on.
//! - [`acquisition`]: cost models, MI / IVR / IP rates, myopic optimisation
//!   and the active-learning loop.
//! - [`benchmarks`]: Forrester pairs, the SIR/SEIR epidemic sources, the
//!   bivariate Gaussian-mixture sources and the percentile estimator.
//! - [`experiment`]: run configurations, CSV logs and method comparison
//!   used by the `amsbq` binary.
//!
//! Runnable walkthroughs for each capability live in `examples/`.

pub mod acquisition;
pub mod benchmarks;
pub mod error;
pub mod experiment;
pub mod kernels;
pub mod msgp;
pub mod numerics;
pub mod optim;
pub mod quadrature;
pub mod rng;

pub use error::{Error, Result};
