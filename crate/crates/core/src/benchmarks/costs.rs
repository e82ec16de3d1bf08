//! Location-dependent query costs built from logistic functions.

use std::sync::Arc;

use crate::acquisition::{CostFn, CostModel};
use crate::error::Result;

/// Standard logistic function.
pub fn logistic(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `offset + scale * logistic(steepness * (x - centre))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogisticCost {
    pub offset: f64,
    pub scale: f64,
    pub steepness: f64,
    pub centre: f64,
}

impl LogisticCost {
    pub fn eval(&self, x: f64) -> f64 {
        self.offset + self.scale * logistic(self.steepness * (x - self.centre))
    }
}

/// A valley made of two logistic walls at `minimum ± half_width`, shifted
/// so that the cost at `minimum` is exactly `floor` and rescaled so the far
/// plateaus approach `ceiling`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogisticValley {
    pub floor: f64,
    pub ceiling: f64,
    pub steepness: f64,
    pub minimum: f64,
    pub half_width: f64,
}

impl LogisticValley {
    fn raw(&self, x: f64) -> f64 {
        logistic(self.steepness * (x - self.minimum - self.half_width))
            + logistic(-self.steepness * (x - self.minimum + self.half_width))
    }

    pub fn eval(&self, x: f64) -> f64 {
        let lo = self.raw(self.minimum);
        self.floor + (self.ceiling - self.floor) * ((self.raw(x) - lo) / (1.0 - lo)).clamp(0.0, 1.0)
    }
}

/// Primary cost of the classic Forrester pair.
pub const CLASSIC_C1: LogisticCost = LogisticCost { offset: 0.8, scale: 0.2, steepness: 10.0, centre: 0.5 };
/// Secondary cost of the classic pair: close to `c_1` near zero, about
/// `0.005` beyond `x = 0.5`.
pub const CLASSIC_C2: LogisticCost = LogisticCost { offset: 0.005, scale: 0.795, steepness: -25.0, centre: 0.25 };

/// Primary cost of the wiggly pair.
pub const WIGGLY_C1: LogisticCost = LogisticCost { offset: 0.9, scale: 0.1, steepness: 10.0, centre: 0.5 };
/// Valley part of the wiggly secondary cost, with a sharp minimum at
/// `x = 0.7`.
pub const WIGGLY_C2_VALLEY: LogisticValley =
    LogisticValley { floor: 0.005, ceiling: 0.05, steepness: 50.0, minimum: 0.7, half_width: 0.02 };
/// Shoulder that lifts the wiggly secondary cost to about `c_1` near zero.
pub const WIGGLY_C2_SHOULDER: LogisticCost = LogisticCost { offset: 0.0, scale: 0.85, steepness: -30.0, centre: 0.15 };

/// Secondary cost of the wiggly pair.
pub fn wiggly_c2(x: f64) -> f64 {
    WIGGLY_C2_VALLEY.eval(x) + WIGGLY_C2_SHOULDER.eval(x)
}

pub fn forrester_classic_costs() -> Result<CostModel> {
    let c1: CostFn = Arc::new(|x: &[f64]| CLASSIC_C1.eval(x[0]));
    let c2: CostFn = Arc::new(|x: &[f64]| CLASSIC_C2.eval(x[0]));
    CostModel::new(vec![c1, c2], CLASSIC_C2.offset)
}

pub fn forrester_wiggly_costs() -> Result<CostModel> {
    let c1: CostFn = Arc::new(|x: &[f64]| WIGGLY_C1.eval(x[0]));
    let c2: CostFn = Arc::new(|x: &[f64]| wiggly_c2(x[0]));
    CostModel::new(vec![c1, c2], WIGGLY_C2_VALLEY.floor)
}
