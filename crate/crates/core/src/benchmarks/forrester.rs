//! Two-source Forrester functions on `[0, 1]`.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ForresterVariant {
    Classic,
    /// Adds a short-lengthscale sinusoid to the classic primary.
    Wiggly,
}

/// `f_l(x)` for `l = 0` (primary) or `l = 1` (secondary).
pub fn forrester_eval(variant: ForresterVariant, l: usize, x: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::OutOfDomain { point: vec![x] });
    }
    let classic = (6.0 * x - 2.0).powi(2) * (12.0 * x - 4.0).sin();
    let f1 = match variant {
        ForresterVariant::Classic => classic,
        ForresterVariant::Wiggly => classic - (2.0 - x).powi(2) * (36.0 * x).sin(),
    };
    match (variant, l) {
        (_, 0) => Ok(f1),
        (ForresterVariant::Classic, 1) => Ok(0.5 * f1 + 10.0 * x),
        (ForresterVariant::Wiggly, 1) => Ok(0.75 * f1 + 16.0 * (x - 0.5) + 10.0),
        _ => Err(Error::SourceOutOfRange { index: l, n_sources: 2 }),
    }
}
