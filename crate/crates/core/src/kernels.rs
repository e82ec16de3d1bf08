//! Squared-exponential and ICM kernels, and their closed-form integrals
//! against a uniform probability measure on a box.
//!
//! Source indices are zero-based throughout the library: source `0` is the
//! primary source whose integral is being estimated.

use std::f64::consts::{PI, SQRT_2};
use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::numerics::erf_diff;

/// Index of the primary source.
pub const PRIMARY: usize = 0;

/// Unit-amplitude squared-exponential kernel
/// `kappa(x, x') = exp(-|x - x'|^2 / (2 lambda^2))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RbfKernel {
    lengthscale: f64,
}

impl RbfKernel {
    pub fn new(lengthscale: f64) -> Result<Self> {
        if !(lengthscale > 0.0 && lengthscale.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "lengthscale",
                reason: format!("must be positive and finite, got {lengthscale}"),
            });
        }
        Ok(RbfKernel { lengthscale })
    }

    pub fn lengthscale(&self) -> f64 {
        self.lengthscale
    }

    pub fn eval(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        if x.len() != y.len() {
            return Err(Error::DimensionMismatch { expected: x.len(), got: y.len() });
        }
        Ok(self.eval_unchecked(x, y))
    }

    /// Kernel value without the dimension check.
    #[inline]
    pub fn eval_unchecked(&self, x: &[f64], y: &[f64]) -> f64 {
        (-sq_dist(x, y) / (2.0 * self.lengthscale * self.lengthscale)).exp()
    }

    /// `∫ kappa(x, y) dpi(x)` for a uniform box measure.
    pub fn mean(&self, y: &[f64], bounds: &[(f64, f64)]) -> f64 {
        let l = self.lengthscale;
        let s = SQRT_2 * l;
        y.iter()
            .zip(bounds)
            .map(|(&c, &(lo, hi))| {
                l * (PI / 2.0).sqrt() * erf_diff((hi - c) / s, (lo - c) / s) / (hi - lo)
            })
            .product()
    }

    /// `∬ kappa dpi dpi` for a uniform box measure.
    pub fn double_mean(&self, bounds: &[(f64, f64)]) -> f64 {
        let l = self.lengthscale;
        bounds
            .iter()
            .map(|&(lo, hi)| {
                let w = hi - lo;
                let u = w / (SQRT_2 * l);
                // 2 [ l sqrt(pi/2) w erf(u) + l^2 (exp(-u^2) - 1) ] / w^2
                let a = l * (PI / 2.0).sqrt() * w * statrs::function::erf::erf(u);
                let b = l * l * (-u * u).exp_m1();
                2.0 * (a + b) / (w * w)
            })
            .product()
    }
}

#[inline]
pub(crate) fn sq_dist(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum()
}

/// Squared-exponential kernel value; see [`RbfKernel`].
pub fn rbf_eval(x: &[f64], y: &[f64], lengthscale: f64) -> Result<f64> {
    RbfKernel::new(lengthscale)?.eval(x, y)
}

/// Intrinsic coregionalization kernel `k_{ll'}(x, x') = B_{ll'} kappa(x, x')`.
#[derive(Debug, Clone, PartialEq)]
pub struct IcmKernel {
    base: RbfKernel,
    coregionalization: DMatrix<f64>,
}

impl IcmKernel {
    /// Builds the kernel from a coregionalization matrix, which must be
    /// square, symmetric and positive definite.
    pub fn new(base: RbfKernel, b: DMatrix<f64>) -> Result<Self> {
        if b.nrows() != b.ncols() || b.nrows() == 0 {
            return Err(Error::InvalidParameter {
                name: "B",
                reason: format!("must be square and non-empty, got {}x{}", b.nrows(), b.ncols()),
            });
        }
        let scale = b.diagonal().amax().max(f64::MIN_POSITIVE);
        for i in 0..b.nrows() {
            for j in 0..i {
                if (b[(i, j)] - b[(j, i)]).abs() > 1e-12 * scale {
                    return Err(Error::InvalidParameter {
                        name: "B",
                        reason: "must be symmetric".into(),
                    });
                }
            }
        }
        if b.clone().cholesky().is_none() {
            return Err(Error::InvalidParameter {
                name: "B",
                reason: "must be positive definite".into(),
            });
        }
        Ok(IcmKernel { base, coregionalization: b })
    }

    /// `B = W W^T + diag(eta)`.
    pub fn from_factors(base: RbfKernel, w: &DMatrix<f64>, eta: &[f64]) -> Result<Self> {
        if w.nrows() != eta.len() {
            return Err(Error::DimensionMismatch { expected: w.nrows(), got: eta.len() });
        }
        if let Some(bad) = eta.iter().find(|e| !(**e > 0.0)) {
            return Err(Error::InvalidParameter {
                name: "eta",
                reason: format!("entries must be positive, got {bad}"),
            });
        }
        let mut b = w * w.transpose();
        for (i, e) in eta.iter().enumerate() {
            b[(i, i)] += e;
        }
        // Symmetrise exactly; W W^T can differ in the last bit.
        let b = (&b + b.transpose()) * 0.5;
        IcmKernel::new(base, b)
    }

    pub fn base(&self) -> &RbfKernel {
        &self.base
    }

    pub fn b(&self) -> &DMatrix<f64> {
        &self.coregionalization
    }

    pub fn n_sources(&self) -> usize {
        self.coregionalization.nrows()
    }

    pub fn check_source(&self, l: usize) -> Result<()> {
        if l >= self.n_sources() {
            return Err(Error::SourceOutOfRange { index: l, n_sources: self.n_sources() });
        }
        Ok(())
    }

    pub fn eval(&self, l: usize, lp: usize, x: &[f64], xp: &[f64]) -> Result<f64> {
        self.check_source(l)?;
        self.check_source(lp)?;
        Ok(self.coregionalization[(l, lp)] * self.base.eval(x, xp)?)
    }

    #[inline]
    pub(crate) fn eval_unchecked(&self, l: usize, lp: usize, x: &[f64], xp: &[f64]) -> f64 {
        self.coregionalization[(l, lp)] * self.base.eval_unchecked(x, xp)
    }
}

/// ICM kernel value; see [`IcmKernel::eval`].
pub fn icm_eval(l: usize, lp: usize, x: &[f64], xp: &[f64], kernel: &IcmKernel) -> Result<f64> {
    kernel.eval(l, lp, x, xp)
}

/// Density weight multiplying the integrand.
pub type WeightFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// Probability measure on a box. Only the plain uniform case has closed-form
/// kernel integrals; non-uniform densities are folded into the integrand
/// instead (see the SIR benchmark).
#[derive(Clone)]
pub struct IntegrationMeasure {
    bounds: Vec<(f64, f64)>,
    weight: Option<WeightFn>,
}

impl fmt::Debug for IntegrationMeasure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("IntegrationMeasure")
            .field("bounds", &self.bounds)
            .field("weighted", &self.weight.is_some())
            .finish()
    }
}

impl IntegrationMeasure {
    pub fn uniform_box(bounds: Vec<(f64, f64)>) -> Result<Self> {
        if bounds.is_empty() {
            return Err(Error::InvalidParameter { name: "bounds", reason: "empty".into() });
        }
        for &(lo, hi) in &bounds {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(Error::InvalidParameter {
                    name: "bounds",
                    reason: format!("need finite low < high, got ({lo}, {hi})"),
                });
            }
        }
        Ok(IntegrationMeasure { bounds, weight: None })
    }

    /// Uniform box measure with a non-negative weight on the integrand.
    pub fn with_weight(mut self, weight: WeightFn) -> Self {
        self.weight = Some(weight);
        self
    }

    pub fn dim(&self) -> usize {
        self.bounds.len()
    }

    pub fn bounds(&self) -> &[(f64, f64)] {
        &self.bounds
    }

    pub fn weight(&self) -> Option<&WeightFn> {
        self.weight.as_ref()
    }

    pub fn volume(&self) -> f64 {
        self.bounds.iter().map(|(lo, hi)| hi - lo).product()
    }

    pub fn mean_width(&self) -> f64 {
        self.bounds.iter().map(|(lo, hi)| hi - lo).sum::<f64>() / self.dim() as f64
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim() && x.iter().zip(&self.bounds).all(|(v, (lo, hi))| *v >= *lo && *v <= *hi)
    }

    fn require_closed_form(&self) -> Result<()> {
        if self.weight.is_some() {
            return Err(Error::UnsupportedMeasure(
                "weighted measures have no closed-form kernel mean; fold the weight into the integrand".into(),
            ));
        }
        Ok(())
    }
}

/// `⟨k_{ll'}(·, x')⟩ = B_{ll'} ∫ kappa(x, x') dpi(x)`.
pub fn kernel_mean(
    l: usize,
    lp: usize,
    xp: &[f64],
    kernel: &IcmKernel,
    measure: &IntegrationMeasure,
) -> Result<f64> {
    measure.require_closed_form()?;
    kernel.check_source(l)?;
    kernel.check_source(lp)?;
    if xp.len() != measure.dim() {
        return Err(Error::DimensionMismatch { expected: measure.dim(), got: xp.len() });
    }
    Ok(kernel.b()[(l, lp)] * kernel.base().mean(xp, measure.bounds()))
}

/// Prior variance of the primary integral, `⟨⟨k_11⟩⟩`.
pub fn initial_error(kernel: &IcmKernel, measure: &IntegrationMeasure) -> Result<f64> {
    measure.require_closed_form()?;
    Ok(kernel.b()[(PRIMARY, PRIMARY)] * kernel.base().double_mean(measure.bounds()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::integrate;
    use nalgebra::dmatrix;

    fn unit() -> IntegrationMeasure {
        IntegrationMeasure::uniform_box(vec![(0.0, 1.0)]).unwrap()
    }

    #[test]
    fn rbf_examples() {
        assert_eq!(rbf_eval(&[0.3], &[0.3], 0.1).unwrap(), 1.0);
        let l = 0.37;
        let half = rbf_eval(&[0.0], &[l * (2.0 * 2f64.ln()).sqrt()], l).unwrap();
        assert!((half - 0.5).abs() < 1e-15);
        let v = rbf_eval(&[0.0], &[0.2], 0.1).unwrap();
        assert!((v - (-2f64).exp()).abs() < 1e-15);
        assert!((v - 0.135335).abs() < 1e-6);
    }

    #[test]
    fn rbf_errors() {
        assert!(matches!(rbf_eval(&[0.0], &[0.0, 1.0], 0.1), Err(Error::DimensionMismatch { .. })));
        assert!(matches!(rbf_eval(&[0.0], &[0.0], 0.0), Err(Error::InvalidParameter { .. })));
        assert!(matches!(rbf_eval(&[0.0], &[0.0], -1.0), Err(Error::InvalidParameter { .. })));
    }

    #[test]
    fn icm_examples() {
        let base = RbfKernel::new(0.1).unwrap();
        let k = IcmKernel::new(base, dmatrix![2.5, 0.8; 0.8, 1.0]).unwrap();
        assert_eq!(icm_eval(0, 0, &[0.4], &[0.4], &k).unwrap(), 2.5);
        let v = icm_eval(0, 1, &[0.0], &[0.2], &k).unwrap();
        assert!((v - 0.8 * (-2f64).exp()).abs() < 1e-15);
        assert!((v - 0.108268).abs() < 1e-6);
        let diag = IcmKernel::new(base, dmatrix![1.0, 0.0; 0.0, 1.0]).unwrap();
        assert_eq!(icm_eval(0, 1, &[0.1], &[0.7], &diag).unwrap(), 0.0);
        assert!(matches!(icm_eval(0, 2, &[0.1], &[0.7], &k), Err(Error::SourceOutOfRange { .. })));
    }

    #[test]
    fn icm_rejects_bad_b() {
        let base = RbfKernel::new(0.1).unwrap();
        assert!(IcmKernel::new(base, dmatrix![1.0, 2.0; 2.0, 1.0]).is_err());
        assert!(IcmKernel::new(base, dmatrix![1.0, 0.5; 0.4, 1.0]).is_err());
        let w = dmatrix![1.0, 0.0; 1.0, 0.0];
        let k = IcmKernel::from_factors(base, &w, &[1e-3, 1e-3]).unwrap();
        assert!((k.b()[(0, 1)] - 1.0).abs() < 1e-15);
        assert!(IcmKernel::from_factors(base, &w, &[0.0, 1e-3]).is_err());
    }

    #[test]
    fn kernel_mean_examples() {
        let base = RbfKernel::new(0.1).unwrap();
        let k = IcmKernel::new(base, dmatrix![1.0, 0.0; 0.0, 2.0]).unwrap();
        let m = kernel_mean(0, 0, &[0.5], &k, &unit()).unwrap();
        // independent composite Gauss-Legendre value of ∫ exp(-(x-0.5)^2/0.02) dx
        let oracle = integrate(|x| (-(x - 0.5) * (x - 0.5) / 0.02).exp(), 0.0, 1.0, 1000, 10);
        assert!((m - oracle).abs() / oracle < 1e-10);
        assert!((m - 0.2506628).abs() < 5e-7);
        assert_eq!(kernel_mean(0, 1, &[0.3], &k, &unit()).unwrap(), 0.0);

        let wide = IcmKernel::new(RbfKernel::new(1e4).unwrap(), dmatrix![1.0]).unwrap();
        assert!((kernel_mean(0, 0, &[0.9], &wide, &unit()).unwrap() - 1.0).abs() < 1e-8);
    }

    #[test]
    fn initial_error_examples() {
        let k1 = IcmKernel::new(RbfKernel::new(0.1).unwrap(), dmatrix![1.0]).unwrap();
        let e1 = initial_error(&k1, &unit()).unwrap();
        assert!((e1 - 0.230662).abs() < 1e-6);
        let k3 = IcmKernel::new(RbfKernel::new(0.1).unwrap(), dmatrix![3.0]).unwrap();
        assert!((initial_error(&k3, &unit()).unwrap() - 3.0 * e1).abs() < 1e-15);
        let wide = IcmKernel::new(RbfKernel::new(1e6).unwrap(), dmatrix![1.0]).unwrap();
        assert!((initial_error(&wide, &unit()).unwrap() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn weighted_measure_is_rejected() {
        let k = IcmKernel::new(RbfKernel::new(0.1).unwrap(), dmatrix![1.0]).unwrap();
        let m = unit().with_weight(Arc::new(|_| 2.0));
        assert!(matches!(initial_error(&k, &m), Err(Error::UnsupportedMeasure(_))));
        assert!(matches!(kernel_mean(0, 0, &[0.2], &k, &m), Err(Error::UnsupportedMeasure(_))));
    }
}
