use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::quadrature::CandidateBatch;

pub type CostFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// Per-source query cost `c_l(x)` with values in `[delta, 1]`.
#[derive(Clone)]
pub struct CostModel {
    sources: Vec<CostFn>,
    delta: f64,
}

impl fmt::Debug for CostModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CostModel").field("n_sources", &self.sources.len()).field("delta", &self.delta).finish()
    }
}

impl CostModel {
    pub fn new(sources: Vec<CostFn>, delta: f64) -> Result<Self> {
        if !(delta > 0.0 && delta <= 1.0) {
            return Err(Error::InvalidParameter { name: "delta", reason: format!("must lie in (0, 1], got {delta}") });
        }
        if sources.is_empty() {
            return Err(Error::InvalidParameter { name: "cost model", reason: "no sources".into() });
        }
        Ok(CostModel { sources, delta })
    }

    /// Location-independent costs; `delta` is the smallest of them.
    pub fn constant(costs: &[f64]) -> Result<Self> {
        let delta = costs.iter().copied().fold(f64::INFINITY, f64::min);
        if let Some(c) = costs.iter().find(|c| !(**c > 0.0 && **c <= 1.0)) {
            return Err(Error::InvalidParameter { name: "cost", reason: format!("must lie in (0, 1], got {c}") });
        }
        let sources = costs
            .iter()
            .map(|&c| Arc::new(move |_: &[f64]| c) as CostFn)
            .collect();
        CostModel::new(sources, delta)
    }

    pub fn n_sources(&self) -> usize {
        self.sources.len()
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// `c_l(x)`; values outside `[delta, 1]` are an error.
    pub fn cost(&self, l: usize, x: &[f64]) -> Result<f64> {
        let f = self
            .sources
            .get(l)
            .ok_or(Error::SourceOutOfRange { index: l, n_sources: self.sources.len() })?;
        let c = f(x);
        if !(c >= self.delta * (1.0 - 1e-12) && c <= 1.0 + 1e-12) {
            return Err(Error::InvalidParameter {
                name: "cost",
                reason: format!("c_{}({x:?}) = {c} outside [{}, 1]", l + 1, self.delta),
            });
        }
        Ok(c)
    }

    /// Additive cost of a batch.
    pub fn batch_cost(&self, cand: &CandidateBatch) -> Result<f64> {
        cand.sources().iter().zip(cand.locations()).map(|(l, x)| self.cost(*l, x)).sum()
    }
}
