//! Multi-source Gaussian process: data, Gram matrices, posterior inference
//! and MAP hyperparameter fitting.
//!
//! Observations are `(source, location, value)` triplets. With the ICM
//! kernel the Gram matrix of a dataset is
//! `G[i][j] = B[l_i][l_j] * kappa(x_i, x_j) + delta_ij * sigma^2[l_i]`,
//! and all posterior quantities follow from one Cholesky factor of `G`.

mod fit;
mod prior;

pub use fit::{fit, log_map_objective, log_marginal_likelihood, FitOptions, FitReport};
pub use prior::{
    empirical_bayes_b_prior, CoregionalizationPrior, EmpiricalBayesPrior, GammaPrior, NoiseSetting,
    PriorSpec,
};

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::kernels::{IcmKernel, RbfKernel};

/// A single `(source, location, value)` observation.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub source: usize,
    pub x: Vec<f64>,
    pub y: f64,
}

impl Observation {
    pub fn new(source: usize, x: Vec<f64>, y: f64) -> Self {
        Observation { source, x, y }
    }
}

/// Ordered, append-only collection of observations sharing one input
/// dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    dim: usize,
    observations: Vec<Observation>,
}

impl Dataset {
    pub fn new(dim: usize) -> Self {
        Dataset { dim, observations: Vec::new() }
    }

    pub fn from_observations(dim: usize, observations: Vec<Observation>) -> Result<Self> {
        let mut d = Dataset::new(dim);
        for o in observations {
            d.push(o)?;
        }
        Ok(d)
    }

    pub fn push(&mut self, obs: Observation) -> Result<()> {
        if obs.x.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: obs.x.len() });
        }
        if !obs.y.is_finite() || obs.x.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "observation",
                reason: format!("non-finite value in {obs:?}"),
            });
        }
        self.observations.push(obs);
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.observations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observations.is_empty()
    }

    pub fn observations(&self) -> &[Observation] {
        &self.observations
    }

    pub fn iter(&self) -> impl Iterator<Item = &Observation> {
        self.observations.iter()
    }

    pub fn values(&self) -> DVector<f64> {
        DVector::from_iterator(self.len(), self.observations.iter().map(|o| o.y))
    }

    pub fn count_source(&self, l: usize) -> usize {
        self.observations.iter().filter(|o| o.source == l).count()
    }

    pub fn max_source(&self) -> Option<usize> {
        self.observations.iter().map(|o| o.source).max()
    }
}

/// ICM hyperparameters: `B = W W^T + diag(eta)`, shared lengthscale and
/// per-source observation noise variances.
#[derive(Debug, Clone, PartialEq)]
pub struct Hyperparams {
    pub lengthscale: f64,
    pub w: DMatrix<f64>,
    pub eta: Vec<f64>,
    pub noise: Vec<f64>,
}

impl Hyperparams {
    /// Full-rank `W` (rank `L`) with identity coregionalization scaled by
    /// `variance` and no noise.
    pub fn isotropic(n_sources: usize, lengthscale: f64, variance: f64) -> Self {
        let w = DMatrix::from_diagonal_element(n_sources, n_sources, (0.5 * variance).sqrt());
        Hyperparams { lengthscale, w, eta: vec![0.5 * variance; n_sources], noise: vec![0.0; n_sources] }
    }

    pub fn n_sources(&self) -> usize {
        self.eta.len()
    }

    pub fn rank(&self) -> usize {
        self.w.ncols()
    }

    pub fn kernel(&self) -> Result<IcmKernel> {
        if self.noise.len() != self.eta.len() {
            return Err(Error::DimensionMismatch { expected: self.eta.len(), got: self.noise.len() });
        }
        if let Some(bad) = self.noise.iter().find(|s| !(**s >= 0.0 && s.is_finite())) {
            return Err(Error::InvalidParameter {
                name: "noise",
                reason: format!("variances must be non-negative, got {bad}"),
            });
        }
        IcmKernel::from_factors(RbfKernel::new(self.lengthscale)?, &self.w, &self.eta)
    }

    /// `B = W W^T + diag(eta)`.
    pub fn b(&self) -> DMatrix<f64> {
        let mut b = &self.w * self.w.transpose();
        for (i, e) in self.eta.iter().enumerate() {
            b[(i, i)] += e;
        }
        (&b + b.transpose()) * 0.5
    }

    /// Row-major upper triangle of `B`, for log records.
    pub fn b_flat(&self) -> Vec<f64> {
        let b = self.b();
        let n = b.nrows();
        let mut out = Vec::with_capacity(n * (n + 1) / 2);
        for i in 0..n {
            for j in i..n {
                out.push(b[(i, j)]);
            }
        }
        out
    }

    /// Correlation `B_{ij} / sqrt(B_ii B_jj)`.
    pub fn correlation(&self, i: usize, j: usize) -> f64 {
        let b = self.b();
        b[(i, j)] / (b[(i, i)] * b[(j, j)]).sqrt()
    }
}

/// Relative jitter added to the Gram diagonal before factorization.
pub const JITTER_START: f64 = 1e-10;
/// Largest relative jitter tried before giving up.
pub const JITTER_MAX: f64 = 1e-4;

/// Reference scale for jitter: mean over sources of `B_ll + sigma_l^2`.
///
/// Depending only on the hyperparameters (not on which sources happen to be
/// in the data) keeps the jitter identical for a dataset and any extension
/// of it.
pub fn jitter_reference(kernel: &IcmKernel, noise: &[f64]) -> f64 {
    let b = kernel.b();
    let n = b.nrows();
    (0..n).map(|l| b[(l, l)] + noise[l]).sum::<f64>() / n as f64
}

/// Gram matrix `K(X, X) + Sigma` of a dataset, without jitter.
pub fn gram(data: &Dataset, hyper: &Hyperparams) -> Result<DMatrix<f64>> {
    let kernel = hyper.kernel()?;
    gram_with(data, &kernel, &hyper.noise)
}

pub(crate) fn gram_with(data: &Dataset, kernel: &IcmKernel, noise: &[f64]) -> Result<DMatrix<f64>> {
    let obs = data.observations();
    for o in obs {
        kernel.check_source(o.source)?;
    }
    let n = obs.len();
    let mut g = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let v = kernel.eval_unchecked(obs[i].source, obs[j].source, &obs[i].x, &obs[j].x);
            g[(i, j)] = v;
            g[(j, i)] = v;
        }
        g[(i, i)] += noise[obs[i].source];
    }
    Ok(g)
}

/// Cholesky factor of `g + jitter I`, escalating the jitter tenfold from
/// `JITTER_START * reference` up to `JITTER_MAX * reference`.
pub fn factorize(g: &DMatrix<f64>, reference: f64) -> Result<(DMatrix<f64>, f64)> {
    factorize_from(g, reference, JITTER_START)
}

fn factorize_from(g: &DMatrix<f64>, reference: f64, start_rel: f64) -> Result<(DMatrix<f64>, f64)> {
    let mut rel = start_rel;
    if g.nrows() == 0 {
        return Ok((DMatrix::zeros(0, 0), rel * reference));
    }
    loop {
        let jitter = rel * reference;
        let mut m = g.clone();
        for i in 0..m.nrows() {
            m[(i, i)] += jitter;
        }
        if let Some(ch) = m.cholesky() {
            let l = ch.unpack();
            if l.iter().all(|v| v.is_finite()) {
                return Ok((l, jitter));
            }
        }
        if rel >= JITTER_MAX * (1.0 - 1e-9) {
            return Err(Error::IllConditioned { jitter });
        }
        rel *= 10.0;
    }
}

/// Posterior state of the multi-source GP.
///
/// Holds the data, the hyperparameters, and the Cholesky factor of the
/// jittered Gram matrix. Observations can be appended incrementally;
/// changing hyperparameters refactorizes from scratch.
#[derive(Debug, Clone)]
pub struct GpState {
    kernel: IcmKernel,
    hyper: Hyperparams,
    data: Dataset,
    prior_mean: Vec<f64>,
    chol: DMatrix<f64>,
    jitter: f64,
    alpha: DVector<f64>,
}

impl GpState {
    pub fn new(hyper: Hyperparams, data: Dataset) -> Result<Self> {
        let kernel = hyper.kernel()?;
        let prior_mean = vec![0.0; hyper.n_sources()];
        let mut s = GpState {
            kernel,
            hyper,
            data,
            prior_mean,
            chol: DMatrix::zeros(0, 0),
            jitter: 0.0,
            alpha: DVector::zeros(0),
        };
        s.refactor(JITTER_START)?;
        Ok(s)
    }

    /// Replaces the constant per-source prior means (default zero).
    pub fn with_prior_mean(mut self, means: Vec<f64>) -> Result<Self> {
        if means.len() != self.n_sources() {
            return Err(Error::DimensionMismatch { expected: self.n_sources(), got: means.len() });
        }
        self.prior_mean = means;
        self.update_alpha();
        Ok(self)
    }

    fn refactor(&mut self, start_rel: f64) -> Result<()> {
        let g = gram_with(&self.data, &self.kernel, &self.hyper.noise)?;
        let reference = jitter_reference(&self.kernel, &self.hyper.noise);
        let (l, jitter) = factorize_from(&g, reference, start_rel)?;
        self.chol = l;
        self.jitter = jitter;
        self.update_alpha();
        Ok(())
    }

    fn update_alpha(&mut self) {
        let r = self.residuals();
        self.alpha = self.solve(&r);
    }

    fn residuals(&self) -> DVector<f64> {
        DVector::from_iterator(
            self.data.len(),
            self.data.iter().map(|o| o.y - self.prior_mean[o.source]),
        )
    }

    /// Replaces the hyperparameters and refactorizes.
    pub fn set_hyperparams(&mut self, hyper: Hyperparams) -> Result<()> {
        if hyper.n_sources() != self.n_sources() {
            return Err(Error::DimensionMismatch { expected: self.n_sources(), got: hyper.n_sources() });
        }
        let kernel = hyper.kernel()?;
        let old = (self.kernel.clone(), self.hyper.clone());
        self.kernel = kernel;
        self.hyper = hyper;
        if let Err(e) = self.refactor(JITTER_START) {
            self.kernel = old.0;
            self.hyper = old.1;
            self.refactor(JITTER_START)?;
            return Err(e);
        }
        Ok(())
    }

    /// Appends an observation, extending the Cholesky factor by one row.
    /// Falls back to a full refactorization (with jitter escalation) when
    /// the new pivot is not positive.
    pub fn observe(&mut self, obs: Observation) -> Result<()> {
        self.kernel.check_source(obs.source)?;
        let k = self.cross_vector(obs.source, &obs.x)?;
        self.data.push(obs.clone())?;
        let n = k.len();
        let c = self.kernel.b()[(obs.source, obs.source)] + self.hyper.noise[obs.source] + self.jitter;
        let v = self.solve_lower(&k);
        let d2 = c - v.norm_squared();
        if d2 > 1e-3 * self.jitter && d2.is_finite() {
            let mut l = DMatrix::zeros(n + 1, n + 1);
            l.view_mut((0, 0), (n, n)).copy_from(&self.chol);
            for j in 0..n {
                l[(n, j)] = v[j];
            }
            l[(n, n)] = d2.sqrt();
            self.chol = l;
            self.update_alpha();
            Ok(())
        } else {
            let rel = self.jitter / jitter_reference(&self.kernel, &self.hyper.noise);
            let res = self.refactor(rel.max(JITTER_START));
            if res.is_err() {
                self.data.observations.pop();
                self.refactor(rel.max(JITTER_START))?;
            }
            res
        }
    }

    pub fn kernel(&self) -> &IcmKernel {
        &self.kernel
    }

    pub fn hyperparams(&self) -> &Hyperparams {
        &self.hyper
    }

    pub fn data(&self) -> &Dataset {
        &self.data
    }

    pub fn n_sources(&self) -> usize {
        self.hyper.n_sources()
    }

    pub fn dim(&self) -> usize {
        self.data.dim()
    }

    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    pub fn prior_mean(&self, l: usize) -> f64 {
        self.prior_mean[l]
    }

    /// Lower-triangular factor of the jittered Gram matrix.
    pub fn cholesky(&self) -> &DMatrix<f64> {
        &self.chol
    }

    /// `G^{-1} (y - m)`.
    pub fn alpha(&self) -> &DVector<f64> {
        &self.alpha
    }

    /// Effective observation noise of source `l`, including jitter.
    pub fn effective_noise(&self, l: usize) -> f64 {
        self.hyper.noise[l] + self.jitter
    }

    /// `L^{-1} v`.
    pub fn solve_lower(&self, v: &DVector<f64>) -> DVector<f64> {
        if v.is_empty() {
            return DVector::zeros(0);
        }
        self.chol.solve_lower_triangular(v).expect("Cholesky factor has a positive diagonal")
    }

    /// `G^{-1} v`.
    pub fn solve(&self, v: &DVector<f64>) -> DVector<f64> {
        if v.is_empty() {
            return DVector::zeros(0);
        }
        let z = self.solve_lower(v);
        self.chol.tr_solve_lower_triangular(&z).expect("Cholesky factor has a positive diagonal")
    }

    /// `k_{l,ell}(x, X)`: prior covariance between `f_l(x)` and every
    /// observation.
    pub fn cross_vector(&self, l: usize, x: &[f64]) -> Result<DVector<f64>> {
        self.kernel.check_source(l)?;
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: x.len() });
        }
        Ok(DVector::from_iterator(
            self.data.len(),
            self.data.iter().map(|o| self.kernel.eval_unchecked(l, o.source, x, &o.x)),
        ))
    }

    /// Posterior mean and variance of `f_l(x)`.
    pub fn posterior(&self, l: usize, x: &[f64]) -> Result<(f64, f64)> {
        let k = self.cross_vector(l, x)?;
        let mean = self.prior_mean[l] + k.dot(&self.alpha);
        let v = self.solve_lower(&k);
        let var = self.kernel.b()[(l, l)] - v.norm_squared();
        Ok((mean, var.max(0.0)))
    }

    /// Posterior covariance between `f_{sources_a[i]}(xs_a[i])` and
    /// `f_{sources_b[j]}(xs_b[j])`, for mixed-source point sets.
    pub fn posterior_cov(
        &self,
        sources_a: &[usize],
        xs_a: &[Vec<f64>],
        sources_b: &[usize],
        xs_b: &[Vec<f64>],
    ) -> Result<DMatrix<f64>> {
        if sources_a.len() != xs_a.len() {
            return Err(Error::DimensionMismatch { expected: sources_a.len(), got: xs_a.len() });
        }
        if sources_b.len() != xs_b.len() {
            return Err(Error::DimensionMismatch { expected: sources_b.len(), got: xs_b.len() });
        }
        let va: Vec<DVector<f64>> = sources_a
            .iter()
            .zip(xs_a)
            .map(|(l, x)| self.cross_vector(*l, x).map(|k| self.solve_lower(&k)))
            .collect::<Result<_>>()?;
        let vb: Vec<DVector<f64>> = sources_b
            .iter()
            .zip(xs_b)
            .map(|(l, x)| self.cross_vector(*l, x).map(|k| self.solve_lower(&k)))
            .collect::<Result<_>>()?;
        let mut out = DMatrix::zeros(va.len(), vb.len());
        for i in 0..va.len() {
            for j in 0..vb.len() {
                out[(i, j)] = self.kernel.eval_unchecked(sources_a[i], sources_b[j], &xs_a[i], &xs_b[j])
                    - va[i].dot(&vb[j]);
            }
        }
        Ok(out)
    }

    /// Posterior cross-covariance `k_{ll'|D}(X*, X*')` between two point
    /// sets of fixed sources.
    pub fn posterior_cross_cov(
        &self,
        l: usize,
        lp: usize,
        xs: &[Vec<f64>],
        xps: &[Vec<f64>],
    ) -> Result<DMatrix<f64>> {
        self.posterior_cov(&vec![l; xs.len()], xs, &vec![lp; xps.len()], xps)
    }
}

/// Free-function form of [`GpState::posterior`].
pub fn posterior(state: &GpState, l: usize, x: &[f64]) -> Result<(f64, f64)> {
    state.posterior(l, x)
}

/// Free-function form of [`GpState::posterior_cross_cov`].
pub fn posterior_cross_cov(
    state: &GpState,
    l: usize,
    lp: usize,
    xs: &[Vec<f64>],
    xps: &[Vec<f64>],
) -> Result<DMatrix<f64>> {
    state.posterior_cross_cov(l, lp, xs, xps)
}
