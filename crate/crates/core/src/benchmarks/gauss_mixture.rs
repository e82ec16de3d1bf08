//! Three-source bivariate Gaussian-mixture benchmark on `[-3, 3]^2`.

use rand::Rng;
use rand_distr::{Distribution, Normal, StandardNormal, Uniform};
use statrs::distribution::{ContinuousCDF, Normal as NormalDist};

use crate::error::{Error, Result};
use crate::numerics::composite_rule;
use crate::rng::{self, streams};

pub const GAUSS_DOMAIN: (f64, f64) = (-3.0, 3.0);
pub const N_BASIS: usize = 20;
/// Upper end of the uniform shift added to each mean coordinate.
pub const MEAN_SHIFT: f64 = 0.3;
/// Upper end of the uniform amount added to each covariance diagonal entry.
pub const DIAGONAL_SHIFT: f64 = 0.2;
/// Weight noise sd is `WEIGHT_NOISE_REL |z| + WEIGHT_NOISE_ABS`.
pub const WEIGHT_NOISE_REL: f64 = 0.1;
pub const WEIGHT_NOISE_ABS: f64 = 0.05;

/// Normalised bivariate Gaussian bump with weight `z`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Basis {
    pub mean: [f64; 2],
    /// Symmetric covariance `[[a, c], [c, d]]` stored as `[a, c, d]`.
    pub cov: [f64; 3],
    pub weight: f64,
}

impl Basis {
    pub fn det(&self) -> f64 {
        self.cov[0] * self.cov[2] - self.cov[1] * self.cov[1]
    }

    /// Normalised density at `x`.
    pub fn density(&self, x: &[f64]) -> f64 {
        let [a, c, d] = self.cov;
        let det = self.det();
        let (dx, dy) = (x[0] - self.mean[0], x[1] - self.mean[1]);
        let q = (d * dx * dx - 2.0 * c * dx * dy + a * dy * dy) / det;
        (-0.5 * q).exp() / (2.0 * std::f64::consts::PI * det.sqrt())
    }

    /// Probability mass of the density inside the square `[lo, hi]^2`,
    /// integrating the first coordinate numerically and the conditional of
    /// the second in closed form.
    pub fn mass_in_square(&self, lo: f64, hi: f64) -> f64 {
        let [a, c, d] = self.cov;
        let sx = a.sqrt();
        let cond_sd = (d - c * c / a).sqrt();
        let std = NormalDist::new(0.0, 1.0).expect("unit normal");
        // panels wide enough that each spans at most a fraction of sd
        let panels = (((hi - lo) / sx).ceil() as usize * 8).max(16);
        let (xs, ws) = composite_rule(lo, hi, panels, 10);
        xs.iter()
            .zip(&ws)
            .map(|(x, w)| {
                let dx = x - self.mean[0];
                let px = (-0.5 * dx * dx / a).exp() / (sx * (2.0 * std::f64::consts::PI).sqrt());
                let m = self.mean[1] + c / a * dx;
                let py = std.cdf((hi - m) / cond_sd) - std.cdf((lo - m) / cond_sd);
                w * px * py
            })
            .sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GaussMixtureSources {
    /// `sources[l]` is the basis of `f_l`.
    pub sources: Vec<Vec<Basis>>,
}

fn perturb<G: Rng + ?Sized>(prev: &[Basis], rng: &mut G) -> Vec<Basis> {
    let shift = Uniform::new(0.0, MEAN_SHIFT).expect("valid range");
    let diag = Uniform::new(0.0, DIAGONAL_SHIFT).expect("valid range");
    prev.iter()
        .map(|b| {
            let sd = WEIGHT_NOISE_REL * b.weight.abs() + WEIGHT_NOISE_ABS;
            let noise = Normal::new(0.0, sd).expect("positive sd");
            Basis {
                mean: [b.mean[0] + shift.sample(rng), b.mean[1] + shift.sample(rng)],
                cov: [b.cov[0] + diag.sample(rng), b.cov[1], b.cov[2] + diag.sample(rng)],
                weight: b.weight + noise.sample(rng),
            }
        })
        .collect()
}

/// Primary basis drawn at random; each further source perturbs the previous
/// one (shifted means, inflated diagonal, noisy weights).
pub fn gauss_mixture_generate(seed: u64, n_sources: usize) -> GaussMixtureSources {
    let mut g = rng::stream(seed, streams::BENCHMARK);
    let pos = Uniform::new(GAUSS_DOMAIN.0, GAUSS_DOMAIN.1).expect("valid range");
    let unit = Uniform::new(0.0, 1.0).expect("valid range");
    let primary: Vec<Basis> = (0..N_BASIS)
        .map(|_| {
            let mean = [pos.sample(&mut g), pos.sample(&mut g)];
            let u: [f64; 2] = [StandardNormal.sample(&mut g), StandardNormal.sample(&mut g)];
            let kappa = [unit.sample(&mut g), unit.sample(&mut g)];
            let weight: f64 = StandardNormal.sample(&mut g);
            Basis { mean, cov: [kappa[0] + u[0] * u[0], u[0] * u[1], kappa[1] + u[1] * u[1]], weight }
        })
        .collect();
    let mut sources = vec![primary];
    for _ in 1..n_sources {
        let next = perturb(sources.last().expect("non-empty"), &mut g);
        sources.push(next);
    }
    GaussMixtureSources { sources }
}

impl GaussMixtureSources {
    pub fn n_sources(&self) -> usize {
        self.sources.len()
    }

    pub fn eval(&self, l: usize, x: &[f64]) -> Result<f64> {
        let basis = self
            .sources
            .get(l)
            .ok_or(Error::SourceOutOfRange { index: l, n_sources: self.sources.len() })?;
        if x.len() != 2 {
            return Err(Error::DimensionMismatch { expected: 2, got: x.len() });
        }
        Ok(basis.iter().map(|b| b.weight * b.density(x)).sum())
    }

    /// `<f_l>` under the uniform measure on the domain square.
    pub fn mean(&self, l: usize) -> f64 {
        let (lo, hi) = GAUSS_DOMAIN;
        let area = (hi - lo) * (hi - lo);
        self.sources[l].iter().map(|b| b.weight * b.mass_in_square(lo, hi)).sum::<f64>() / area
    }
}
