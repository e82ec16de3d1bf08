use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Distribution, Gamma, Normal};
use statrs::function::gamma::ln_gamma;

use super::{fit, Dataset, FitOptions, Hyperparams};
use crate::error::{Error, Result};
use crate::kernels::IntegrationMeasure;

/// Gamma density on the lengthscale.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaPrior {
    pub shape: f64,
    pub scale: f64,
}

impl GammaPrior {
    pub fn new(shape: f64, scale: f64) -> Result<Self> {
        if !(shape > 0.0 && scale > 0.0 && shape.is_finite() && scale.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "gamma prior",
                reason: format!("shape and scale must be positive, got ({shape}, {scale})"),
            });
        }
        Ok(GammaPrior { shape, scale })
    }

    /// Gamma prior with the given mode; `shape` must exceed one.
    pub fn with_mode(mode: f64, shape: f64) -> Result<Self> {
        if !(shape > 1.0) {
            return Err(Error::InvalidParameter {
                name: "gamma prior",
                reason: format!("a mode needs shape > 1, got {shape}"),
            });
        }
        GammaPrior::new(shape, mode / (shape - 1.0))
    }

    pub fn mode(&self) -> f64 {
        ((self.shape - 1.0) * self.scale).max(0.0)
    }

    pub fn log_density(&self, x: f64) -> f64 {
        if !(x > 0.0) {
            return f64::NEG_INFINITY;
        }
        (self.shape - 1.0) * x.ln() - x / self.scale - self.shape * self.scale.ln() - ln_gamma(self.shape)
    }

    /// Derivative of [`GammaPrior::log_density`] with respect to `ln x`.
    pub fn dlog_density_dlog(&self, x: f64) -> f64 {
        (self.shape - 1.0) - x / self.scale
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        Gamma::new(self.shape, self.scale).expect("validated parameters").sample(rng)
    }
}

/// Independent Gaussian priors on the entries of `W` and log-normal priors
/// on `eta`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoregionalizationPrior {
    pub w_mean: DMatrix<f64>,
    pub w_sd: DMatrix<f64>,
    pub log_eta_mean: Vec<f64>,
    pub log_eta_sd: Vec<f64>,
}

impl CoregionalizationPrior {
    /// Broad prior scaled to the data: `W ~ N(0, s^2)`, `ln eta ~ N(ln(1e-2 s^2), 2^2)`.
    pub fn weak(n_sources: usize, rank: usize, output_scale: f64) -> Self {
        let s2 = output_scale * output_scale;
        CoregionalizationPrior {
            w_mean: DMatrix::zeros(n_sources, rank),
            w_sd: DMatrix::from_element(n_sources, rank, output_scale),
            log_eta_mean: vec![(1e-2 * s2).ln(); n_sources],
            log_eta_sd: vec![2.0; n_sources],
        }
    }

    /// Prior centred at fitted factors: `W_ij ~ N(W0_ij, (0.5 sqrt(B0_ii))^2)`,
    /// `ln eta_i ~ N(ln eta0_i, 0.5^2)`.
    pub fn centred_at(hyper: &Hyperparams) -> Self {
        let b = hyper.b();
        let (n, r) = (hyper.w.nrows(), hyper.w.ncols());
        let w_sd = DMatrix::from_fn(n, r, |i, _| 0.5 * b[(i, i)].sqrt());
        CoregionalizationPrior {
            w_mean: hyper.w.clone(),
            w_sd,
            log_eta_mean: hyper.eta.iter().map(|e| e.ln()).collect(),
            log_eta_sd: vec![0.5; n],
        }
    }

    pub fn n_sources(&self) -> usize {
        self.log_eta_mean.len()
    }

    pub fn rank(&self) -> usize {
        self.w_mean.ncols()
    }

    /// Centre of the prior as `(W, eta)`.
    pub fn center(&self) -> (DMatrix<f64>, Vec<f64>) {
        (self.w_mean.clone(), self.log_eta_mean.iter().map(|m| m.exp()).collect())
    }

    pub fn log_density(&self, w: &DMatrix<f64>, eta: &[f64]) -> f64 {
        let mut lp = 0.0;
        for (wv, (m, s)) in w.iter().zip(self.w_mean.iter().zip(self.w_sd.iter())) {
            let z = (wv - m) / s;
            lp += -0.5 * z * z - s.ln() - 0.5 * (2.0 * std::f64::consts::PI).ln();
        }
        for ((e, m), s) in eta.iter().zip(&self.log_eta_mean).zip(&self.log_eta_sd) {
            if !(*e > 0.0) {
                return f64::NEG_INFINITY;
            }
            let z = (e.ln() - m) / s;
            lp += -0.5 * z * z - s.ln() - e.ln() - 0.5 * (2.0 * std::f64::consts::PI).ln();
        }
        lp
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> (DMatrix<f64>, Vec<f64>) {
        let std = Normal::new(0.0, 1.0).expect("unit normal");
        let w = DMatrix::from_fn(self.w_mean.nrows(), self.w_mean.ncols(), |i, j| {
            self.w_mean[(i, j)] + self.w_sd[(i, j)] * std.sample(rng)
        });
        let eta = self
            .log_eta_mean
            .iter()
            .zip(&self.log_eta_sd)
            .map(|(m, s)| (m + s * std.sample(rng)).exp())
            .collect();
        (w, eta)
    }
}

/// Per-source observation-noise handling.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NoiseSetting {
    /// Noise variance held at the given value.
    Fixed(f64),
    /// Noise variance learned (flat prior in log space) starting from `initial`.
    Learned { initial: f64 },
}

impl NoiseSetting {
    pub fn initial(&self) -> f64 {
        match *self {
            NoiseSetting::Fixed(v) => v,
            NoiseSetting::Learned { initial } => initial,
        }
    }
}

/// Everything the MAP objective needs besides the data.
#[derive(Debug, Clone, PartialEq)]
pub struct PriorSpec {
    pub lengthscale: GammaPrior,
    /// Hard box for the lengthscale optimiser.
    pub lengthscale_bounds: (f64, f64),
    pub coregionalization: CoregionalizationPrior,
    pub noise: Vec<NoiseSetting>,
    /// Typical magnitude of observed values, used to scale the optimiser's
    /// parameterisation.
    pub output_scale: f64,
}

/// Relative lengthscale-prior mode (fraction of the mean box width).
pub const LENGTHSCALE_MODE_FRACTION: f64 = 0.05;
/// Lengthscale-prior shape.
pub const LENGTHSCALE_SHAPE: f64 = 2.0;

impl PriorSpec {
    /// Weakly-informative prior for `noise.len()` sources: gamma lengthscale
    /// prior with mode `0.05 x` mean box width and shape 2, broad `B` prior
    /// scaled to the data.
    pub fn weak(measure: &IntegrationMeasure, data: &Dataset, noise: Vec<NoiseSetting>) -> Result<Self> {
        let width = measure.mean_width();
        let lengthscale = GammaPrior::with_mode(LENGTHSCALE_MODE_FRACTION * width, LENGTHSCALE_SHAPE)?;
        let output_scale = output_scale(data);
        let n = noise.len();
        Ok(PriorSpec {
            lengthscale,
            lengthscale_bounds: (1e-3 * width, 10.0 * width),
            coregionalization: CoregionalizationPrior::weak(n, n, output_scale),
            noise,
            output_scale,
        })
    }

    pub fn n_sources(&self) -> usize {
        self.noise.len()
    }

    pub fn with_lengthscale_prior(mut self, prior: GammaPrior) -> Self {
        self.lengthscale = prior;
        self
    }

    pub fn log_density(&self, hyper: &Hyperparams) -> f64 {
        self.lengthscale.log_density(hyper.lengthscale)
            + self.coregionalization.log_density(&hyper.w, &hyper.eta)
    }

    /// Hyperparameters at the prior centre (lengthscale at its mode).
    pub fn center(&self) -> Hyperparams {
        let (w, eta) = self.coregionalization.center();
        let lengthscale = self
            .lengthscale
            .mode()
            .clamp(self.lengthscale_bounds.0, self.lengthscale_bounds.1);
        Hyperparams { lengthscale, w, eta, noise: self.noise.iter().map(|n| n.initial()).collect() }
    }
}

/// Root-mean-square of the observed values, floored away from zero.
pub fn output_scale(data: &Dataset) -> f64 {
    if data.is_empty() {
        return 1.0;
    }
    let ms = data.iter().map(|o| o.y * o.y).sum::<f64>() / data.len() as f64;
    let s = ms.sqrt();
    if s > 1e-12 {
        s
    } else {
        1.0
    }
}

/// Outcome of the empirical-Bayes estimate of the `B` prior.
#[derive(Debug, Clone)]
pub struct EmpiricalBayesPrior {
    pub prior: PriorSpec,
    /// Hyperparameters fitted to the initial data, if the fit ran.
    pub fitted: Option<Hyperparams>,
    /// Set when the data were insufficient and the weak prior was kept.
    pub fallback: Option<String>,
}

/// Fits the model to the initial data under the weak prior and returns a
/// prior whose `B` component is centred at the fit.
///
/// Falls back to `base` unchanged (flagged) when some source has no
/// observation.
pub fn empirical_bayes_b_prior(initial: &Dataset, base: &PriorSpec, seed: u64) -> Result<EmpiricalBayesPrior> {
    let n = base.n_sources();
    if let Some(missing) = (0..n).find(|l| initial.count_source(*l) == 0) {
        return Ok(EmpiricalBayesPrior {
            prior: base.clone(),
            fitted: None,
            fallback: Some(format!("source {} has no initial observation; using the weak B prior", missing + 1)),
        });
    }
    let report = fit(initial, base, &FitOptions { restarts: 5, seed, ..FitOptions::default() }, None)?;
    let mut prior = base.clone();
    prior.coregionalization = CoregionalizationPrior::centred_at(&report.hyper);
    Ok(EmpiricalBayesPrior { prior, fitted: Some(report.hyper), fallback: report.warning })
}
