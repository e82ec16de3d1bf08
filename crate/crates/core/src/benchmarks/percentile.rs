//! Percentile (equal-mass) estimator under a uniform measure.

use crate::error::{Error, Result};

/// Right Riemann sum `(1/n) sum_i f(low + i (high - low) / n)` in one
/// dimension, and its tensor product with `n` nodes per axis in several.
pub fn percentile_estimate<F: FnMut(&[f64]) -> f64>(mut f: F, bounds: &[(f64, f64)], n: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidParameter { name: "n", reason: "need at least one node".into() });
    }
    if bounds.is_empty() {
        return Err(Error::InvalidParameter { name: "bounds", reason: "empty".into() });
    }
    let total = n.checked_pow(bounds.len() as u32).ok_or(Error::InvalidParameter {
        name: "n",
        reason: "too many nodes".into(),
    })?;
    let mut x = vec![0.0; bounds.len()];
    let mut sum = 0.0;
    for k in 0..total {
        let mut r = k;
        for (d, (lo, hi)) in bounds.iter().enumerate() {
            let i = r % n + 1;
            r /= n;
            x[d] = lo + i as f64 * (hi - lo) / n as f64;
        }
        sum += f(&x);
    }
    Ok(sum / total as f64)
}

/// Node locations used by [`percentile_estimate`] in one dimension.
pub fn percentile_nodes(low: f64, high: f64, n: usize) -> Vec<f64> {
    (1..=n).map(|i| low + i as f64 * (high - low) / n as f64).collect()
}
