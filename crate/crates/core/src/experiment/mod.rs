//! Configuration-driven experiments on the registered benchmarks, with
//! CSV convergence logs and multi-seed comparisons.

mod config;
pub mod csv;
mod runner;

pub use config::{Method, RunConfig};
pub use runner::{compare, execute, run, summarize, Comparison, RunResult, Summary};
