use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// `rho^2` at or above `1 - PERFECT_STEP` counts as a perfect step.
pub const PERFECT_STEP: f64 = 1e-12;

/// Acquisition rates. `Ip` is shipped to reproduce its failure under
/// non-constant cost and must be enabled explicitly by callers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AcquisitionKind {
    Mi,
    Ivr,
    Ip,
    MiNoCost,
    IvrNoCost,
}

impl AcquisitionKind {
    pub const ALL: [AcquisitionKind; 5] =
        [AcquisitionKind::Mi, AcquisitionKind::Ivr, AcquisitionKind::Ip, AcquisitionKind::MiNoCost, AcquisitionKind::IvrNoCost];

    pub fn name(self) -> &'static str {
        match self {
            AcquisitionKind::Mi => "mi",
            AcquisitionKind::Ivr => "ivr",
            AcquisitionKind::Ip => "ip",
            AcquisitionKind::MiNoCost => "mi-nocost",
            AcquisitionKind::IvrNoCost => "ivr-nocost",
        }
    }

    /// True for the integral-precision rate, which does not exclude
    /// zero-correlation queries and gets stuck at cheap locations.
    pub fn is_pathological(self) -> bool {
        self == AcquisitionKind::Ip
    }

    pub fn uses_cost(self) -> bool {
        matches!(self, AcquisitionKind::Mi | AcquisitionKind::Ivr | AcquisitionKind::Ip)
    }

    /// Rate at `(rho2, cost)`. Infinite for perfect steps under MI and IP.
    pub fn rate(self, rho2: f64, cost: f64) -> Result<f64> {
        match self {
            AcquisitionKind::Mi => rate_mi(rho2, cost),
            AcquisitionKind::Ivr => rate_ivr(rho2, cost),
            AcquisitionKind::Ip => rate_ip(rho2, cost),
            AcquisitionKind::MiNoCost => rate_mi(rho2, 1.0),
            AcquisitionKind::IvrNoCost => rate_ivr(rho2, 1.0),
        }
    }

    /// Finite stand-in for [`AcquisitionKind::rate`] that orders points the
    /// same way, with `rho^2` capped just below one. Used as the optimiser
    /// objective.
    pub(crate) fn score(self, rho2: f64, cost: f64) -> f64 {
        let r = rho2.clamp(0.0, 1.0 - PERFECT_STEP);
        let c = if self.uses_cost() { cost } else { 1.0 };
        match self {
            AcquisitionKind::Mi | AcquisitionKind::MiNoCost => -(-r).ln_1p() / c,
            AcquisitionKind::Ivr | AcquisitionKind::IvrNoCost => r / c,
            AcquisitionKind::Ip => 1.0 / ((1.0 - r) * c),
        }
    }

    /// Whether a perfect step forces immediate selection of the cheapest
    /// perfect query. Cost-free kinds just maximise `rho^2`.
    pub(crate) fn diverges(self) -> bool {
        matches!(self, AcquisitionKind::Mi | AcquisitionKind::Ip)
    }
}

impl fmt::Display for AcquisitionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for AcquisitionKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        AcquisitionKind::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::Config(format!("unknown acquisition '{s}' (expected mi, ivr or ip)")))
    }
}

fn check(rho2: f64, cost: f64) -> Result<()> {
    if !(cost > 0.0 && cost.is_finite()) {
        return Err(Error::InvalidParameter { name: "cost", reason: format!("must be positive, got {cost}") });
    }
    if !(0.0..=1.0).contains(&rho2) {
        return Err(Error::InvalidParameter { name: "rho^2", reason: format!("must lie in [0, 1], got {rho2}") });
    }
    Ok(())
}

/// `-ln(1 - rho^2) / cost`, or `+inf` for a perfect step.
pub fn rate_mi(rho2: f64, cost: f64) -> Result<f64> {
    check(rho2, cost)?;
    if rho2 >= 1.0 - PERFECT_STEP {
        return Ok(f64::INFINITY);
    }
    Ok(-(-rho2).ln_1p() / cost)
}

/// `rho^2 / cost`.
pub fn rate_ivr(rho2: f64, cost: f64) -> Result<f64> {
    check(rho2, cost)?;
    Ok(rho2 / cost)
}

/// `(1 - rho^2)^{-1} / cost`, the integral-precision rate up to the constant
/// factor `1 / V[Z|D]`. Positive even at `rho^2 = 0`.
pub fn rate_ip(rho2: f64, cost: f64) -> Result<f64> {
    check(rho2, cost)?;
    if rho2 >= 1.0 - PERFECT_STEP {
        return Ok(f64::INFINITY);
    }
    Ok(1.0 / ((1.0 - rho2) * cost))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn mi_examples() {
        assert_eq!(rate_mi(0.0, 0.3).unwrap(), 0.0);
        assert!((rate_mi(1.0 - (-1f64).exp(), 1.0).unwrap() - 1.0).abs() < 1e-14);
        assert!((rate_mi(0.5, 0.5).unwrap() - 2.0 * 2f64.ln()).abs() < 1e-14);
        assert!((rate_mi(0.5, 0.5).unwrap() - 1.386294).abs() < 1e-6);
        assert_eq!(rate_mi(1.0, 1.0).unwrap(), f64::INFINITY);
        assert_eq!(rate_mi(1.0 - 1e-13, 1.0).unwrap(), f64::INFINITY);
    }

    #[test]
    fn ivr_examples() {
        assert_eq!(rate_ivr(0.0, 0.01).unwrap(), 0.0);
        assert_eq!(rate_ivr(1.0, 1.0).unwrap(), 1.0);
        assert_eq!(rate_ivr(0.5, 0.25).unwrap(), 2.0);
        assert!(rate_ivr(0.5, 0.0).is_err());
        assert!(rate_ivr(0.5, -1.0).is_err());
    }

    #[test]
    fn ip_examples() {
        assert_eq!(rate_ip(0.0, 0.01).unwrap(), 100.0);
        assert_eq!(rate_ip(0.5, 1.0).unwrap(), 2.0);
        assert_eq!(rate_ip(0.0, 1.0).unwrap(), 1.0);
        assert!(AcquisitionKind::Ip.is_pathological());
        assert!(!AcquisitionKind::Mi.is_pathological());
    }

    #[test]
    fn sanity_condition_asymmetry() {
        for c in [1e-3, 0.1, 0.5, 1.0] {
            assert_eq!(rate_mi(0.0, c).unwrap(), 0.0);
            assert_eq!(rate_ivr(0.0, c).unwrap(), 0.0);
            assert!(rate_ip(0.0, c).unwrap() > 0.0);
        }
    }

    #[test]
    fn parses_names() {
        assert_eq!("MI".parse::<AcquisitionKind>().unwrap(), AcquisitionKind::Mi);
        assert_eq!("ivr-nocost".parse::<AcquisitionKind>().unwrap(), AcquisitionKind::IvrNoCost);
        assert!("ucb".parse::<AcquisitionKind>().is_err());
    }

    proptest! {
        #[test]
        fn rates_increase_in_rho(a in 0.0f64..0.99, b in 0.0f64..0.99, c in 0.01f64..1.0) {
            prop_assume!((a - b).abs() > 1e-9);
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            prop_assert!(rate_mi(lo, c).unwrap() < rate_mi(hi, c).unwrap());
            prop_assert!(rate_ivr(lo, c).unwrap() < rate_ivr(hi, c).unwrap());
            prop_assert!(rate_ip(lo, c).unwrap() < rate_ip(hi, c).unwrap());
        }

        #[test]
        fn rates_decrease_in_cost(r in 1e-6f64..0.99, a in 0.01f64..1.0, b in 0.01f64..1.0) {
            prop_assume!((a - b).abs() > 1e-9);
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            prop_assert!(rate_mi(r, lo).unwrap() > rate_mi(r, hi).unwrap());
            prop_assert!(rate_ivr(r, lo).unwrap() > rate_ivr(r, hi).unwrap());
            prop_assert!(rate_ip(r, lo).unwrap() > rate_ip(r, hi).unwrap());
        }

        #[test]
        fn score_orders_like_rate(a in 0.0f64..0.999, b in 0.0f64..0.999, ca in 0.01f64..1.0, cb in 0.01f64..1.0) {
            for k in AcquisitionKind::ALL {
                let ra = k.rate(a, ca).unwrap();
                let rb = k.rate(b, cb).unwrap();
                let sa = k.score(a, ca);
                let sb = k.score(b, cb);
                prop_assert_eq!(ra < rb, sa < sb);
            }
        }
    }
}
