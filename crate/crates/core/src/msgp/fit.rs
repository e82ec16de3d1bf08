//! MAP hyperparameter estimation.
//!
//! The optimiser works on `[ln lambda, W / s, ln(eta / s^2), ln(sigma^2 / s^2)...]`
//! where `s` is the prior's output scale and only learned noise variances
//! appear. Gradients of the log marginal likelihood use the standard
//! identity `d/dtheta = 1/2 tr((a a^T - G^{-1}) dG/dtheta)`.

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use super::{jitter_reference, Dataset, Hyperparams, NoiseSetting, PriorSpec, JITTER_MAX, JITTER_START};
use crate::error::{Error, Result};
use crate::kernels::{sq_dist, IcmKernel, RbfKernel};
use crate::optim::{minimize, Bounds, QuasiNewtonOptions};
use crate::rng;

/// Box on the scaled `W` entries.
const W_BOUND: f64 = 50.0;
const LN_2PI: f64 = 1.837_877_066_409_345_5;

#[derive(Debug, Clone, Copy)]
pub struct FitOptions {
    /// Number of optimiser starts (the warm start, if any, counts as one).
    pub restarts: usize,
    pub seed: u64,
    pub max_iter: usize,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions { restarts: 5, seed: 0, max_iter: 200 }
    }
}

#[derive(Debug, Clone)]
pub struct FitReport {
    pub hyper: Hyperparams,
    pub objective: f64,
    /// Number of starts that produced a finite objective.
    pub successful_starts: usize,
    pub warning: Option<String>,
}

/// GP log marginal likelihood of `data` (the data term of the MAP
/// objective). Returns `-inf` when the Gram matrix cannot be factorized.
pub fn log_marginal_likelihood(data: &Dataset, hyper: &Hyperparams) -> f64 {
    let Ok(kernel) = hyper.kernel() else {
        return f64::NEG_INFINITY;
    };
    let Ok(g) = super::gram_with(data, &kernel, &hyper.noise) else {
        return f64::NEG_INFINITY;
    };
    let reference = jitter_reference(&kernel, &hyper.noise);
    let Ok((l, _)) = super::factorize(&g, reference) else {
        return f64::NEG_INFINITY;
    };
    let y = data.values();
    let z = l.solve_lower_triangular(&y).expect("positive diagonal");
    let logdet: f64 = l.diagonal().iter().map(|d| d.ln()).sum();
    -0.5 * z.norm_squared() - logdet - 0.5 * data.len() as f64 * LN_2PI
}

/// Log marginal likelihood plus the log prior density of the lengthscale
/// and of `(W, eta)`. Non-factorizable Gram matrices give `-inf`.
pub fn log_map_objective(data: &Dataset, hyper: &Hyperparams, priors: &PriorSpec) -> f64 {
    let lp = priors.log_density(hyper);
    if !lp.is_finite() {
        return f64::NEG_INFINITY;
    }
    lp + log_marginal_likelihood(data, hyper)
}

struct Layout {
    n_sources: usize,
    rank: usize,
    learned: Vec<usize>,
    scale: f64,
}

impl Layout {
    fn new(priors: &PriorSpec) -> Self {
        let learned = priors
            .noise
            .iter()
            .enumerate()
            .filter(|(_, n)| matches!(n, NoiseSetting::Learned { .. }))
            .map(|(i, _)| i)
            .collect();
        Layout {
            n_sources: priors.n_sources(),
            rank: priors.coregionalization.rank(),
            learned,
            scale: priors.output_scale,
        }
    }

    fn len(&self) -> usize {
        1 + self.n_sources * self.rank + self.n_sources + self.learned.len()
    }

    fn encode(&self, h: &Hyperparams) -> Vec<f64> {
        let s2 = self.scale * self.scale;
        let mut t = Vec::with_capacity(self.len());
        t.push(h.lengthscale.ln());
        for i in 0..self.n_sources {
            for j in 0..self.rank {
                t.push(h.w[(i, j)] / self.scale);
            }
        }
        t.extend(h.eta.iter().map(|e| (e / s2).ln()));
        t.extend(self.learned.iter().map(|&i| (h.noise[i].max(1e-300) / s2).ln()));
        t
    }

    fn decode(&self, t: &[f64], priors: &PriorSpec) -> Hyperparams {
        let s2 = self.scale * self.scale;
        let lengthscale = t[0].exp();
        let w = DMatrix::from_fn(self.n_sources, self.rank, |i, j| t[1 + i * self.rank + j] * self.scale);
        let off = 1 + self.n_sources * self.rank;
        let eta = (0..self.n_sources).map(|i| t[off + i].exp() * s2).collect();
        let mut noise: Vec<f64> = priors.noise.iter().map(|n| n.initial()).collect();
        let off = off + self.n_sources;
        for (k, &i) in self.learned.iter().enumerate() {
            noise[i] = t[off + k].exp() * s2;
        }
        Hyperparams { lengthscale, w, eta, noise }
    }

    fn bounds(&self, priors: &PriorSpec) -> Bounds {
        let (lo, hi) = priors.lengthscale_bounds;
        let mut lower = vec![lo.ln()];
        let mut upper = vec![hi.ln()];
        for _ in 0..self.n_sources * self.rank {
            lower.push(-W_BOUND);
            upper.push(W_BOUND);
        }
        for _ in 0..self.n_sources {
            lower.push((1e-10f64).ln());
            upper.push((1e4f64).ln());
        }
        for _ in &self.learned {
            lower.push((1e-10f64).ln());
            upper.push((1e2f64).ln());
        }
        Bounds::new(lower, upper)
    }
}

/// Pairwise squared distances and source labels, fixed during one fit.
struct Geometry {
    d2: DMatrix<f64>,
    sources: Vec<usize>,
    y: DVector<f64>,
}

impl Geometry {
    fn new(data: &Dataset) -> Self {
        let obs = data.observations();
        let n = obs.len();
        let d2 = DMatrix::from_fn(n, n, |i, j| sq_dist(&obs[i].x, &obs[j].x));
        Geometry { d2, sources: obs.iter().map(|o| o.source).collect(), y: data.values() }
    }
}

/// Negative MAP objective and its gradient in the optimiser's coordinates.
fn neg_objective(t: &[f64], layout: &Layout, priors: &PriorSpec, geo: &Geometry) -> (f64, Vec<f64>) {
    let fail = (f64::INFINITY, vec![0.0; t.len()]);
    let h = layout.decode(t, priors);
    let b = h.b();
    let n = geo.sources.len();
    let lam = h.lengthscale;
    let Ok(kernel) = IcmKernel::new(
        match RbfKernel::new(lam) {
            Ok(k) => k,
            Err(_) => return fail,
        },
        b.clone(),
    ) else {
        return fail;
    };

    let kappa = geo.d2.map(|d| (-d / (2.0 * lam * lam)).exp());
    let mut g = DMatrix::from_fn(n, n, |p, q| b[(geo.sources[p], geo.sources[q])] * kappa[(p, q)]);
    for p in 0..n {
        g[(p, p)] += h.noise[geo.sources[p]];
    }
    let reference = jitter_reference(&kernel, &h.noise);
    let mut rel = JITTER_START;
    let chol = loop {
        let mut m = g.clone();
        for p in 0..n {
            m[(p, p)] += rel * reference;
        }
        if let Some(c) = m.cholesky() {
            break c;
        }
        if rel >= JITTER_MAX * (1.0 - 1e-9) {
            return fail;
        }
        rel *= 10.0;
    };

    let alpha = chol.solve(&geo.y);
    let logdet: f64 = chol.l_dirty().diagonal().iter().take(n).map(|d| d.ln()).sum();
    let loglik = -0.5 * geo.y.dot(&alpha) - logdet - 0.5 * n as f64 * LN_2PI;
    let logprior = priors.log_density(&h);
    let value = loglik + logprior;
    if !value.is_finite() {
        return fail;
    }

    let ginv = chol.inverse();
    let m = &alpha * alpha.transpose() - ginv;
    let mut grad = vec![0.0; t.len()];

    // lengthscale
    let mut dl = 0.0;
    for p in 0..n {
        for q in 0..n {
            dl += m[(p, q)] * b[(geo.sources[p], geo.sources[q])] * kappa[(p, q)] * geo.d2[(p, q)];
        }
    }
    grad[0] = 0.5 * dl / (lam * lam) + priors.lengthscale.dlog_density_dlog(lam);

    // aggregate M ∘ kappa by source pair
    let ls = layout.n_sources;
    let mut s = DMatrix::zeros(ls, ls);
    for p in 0..n {
        for q in 0..n {
            s[(geo.sources[p], geo.sources[q])] += m[(p, q)] * kappa[(p, q)];
        }
    }
    let sw = &s * &h.w;
    let cp = &priors.coregionalization;
    for i in 0..ls {
        for j in 0..layout.rank {
            let wv = h.w[(i, j)];
            let sd = cp.w_sd[(i, j)];
            let dprior = -(wv - cp.w_mean[(i, j)]) / (sd * sd);
            grad[1 + i * layout.rank + j] = layout.scale * (sw[(i, j)] + dprior);
        }
    }
    let off = 1 + ls * layout.rank;
    for i in 0..ls {
        let e = h.eta[i];
        let z = (e.ln() - cp.log_eta_mean[i]) / (cp.log_eta_sd[i] * cp.log_eta_sd[i]);
        grad[off + i] = 0.5 * s[(i, i)] * e - z - 1.0;
    }
    let off = off + ls;
    for (k, &i) in layout.learned.iter().enumerate() {
        let tr: f64 = (0..n).filter(|&p| geo.sources[p] == i).map(|p| m[(p, p)]).sum();
        grad[off + k] = 0.5 * h.noise[i] * tr;
    }

    (-value, grad.into_iter().map(|v| -v).collect())
}

/// Multi-start MAP fit. The first start is `warm` when given, otherwise the
/// prior centre; the remaining starts are drawn from the prior using
/// `opts.seed`. If every start fails, `warm` (or the prior centre) is
/// returned with a warning.
pub fn fit(data: &Dataset, priors: &PriorSpec, opts: &FitOptions, warm: Option<&Hyperparams>) -> Result<FitReport> {
    if data.is_empty() {
        return Err(Error::InvalidParameter { name: "data", reason: "cannot fit to an empty dataset".into() });
    }
    if let Some(l) = data.max_source() {
        if l >= priors.n_sources() {
            return Err(Error::SourceOutOfRange { index: l, n_sources: priors.n_sources() });
        }
    }
    let layout = Layout::new(priors);
    let bounds = layout.bounds(priors);
    let geo = Geometry::new(data);
    let mut rng = rng::stream(opts.seed, rng::streams::FIT);
    let fallback = warm.cloned().unwrap_or_else(|| priors.center());

    let mut starts = Vec::with_capacity(opts.restarts.max(1));
    starts.push(fallback.clone());
    for _ in 1..opts.restarts.max(1) {
        let (w, eta) = priors.coregionalization.sample(&mut rng);
        let lengthscale = priors.lengthscale.sample(&mut rng);
        let noise = priors
            .noise
            .iter()
            .map(|n| match n {
                NoiseSetting::Fixed(v) => *v,
                NoiseSetting::Learned { initial } => initial * (rng.random::<f64>() * 4.0 - 2.0).exp(),
            })
            .collect();
        starts.push(Hyperparams { lengthscale, w, eta, noise });
    }

    let qn = QuasiNewtonOptions { max_iter: opts.max_iter, grad_tol: 1e-6, f_tol: 1e-10, initial_step: 0.05 };
    let mut best: Option<(Vec<f64>, f64)> = None;
    let mut successes = 0;
    for start in &starts {
        let mut t0 = layout.encode(start);
        bounds.project(&mut t0);
        let res = minimize(|t| neg_objective(t, &layout, priors, &geo), &t0, &bounds, &qn);
        if res.value.is_finite() {
            successes += 1;
            if best.as_ref().is_none_or(|(_, v)| res.value < *v) {
                best = Some((res.x, res.value));
            }
        }
    }

    match best {
        Some((t, v)) => Ok(FitReport {
            hyper: layout.decode(&t, priors),
            objective: -v,
            successful_starts: successes,
            warning: None,
        }),
        None => Ok(FitReport {
            objective: log_map_objective(data, &fallback, priors),
            hyper: fallback,
            successful_starts: 0,
            warning: Some("all hyperparameter restarts failed; keeping previous hyperparameters".into()),
        }),
    }
}

#[cfg(test)]
pub(crate) fn objective_gradient_for_test(
    data: &Dataset,
    hyper: &Hyperparams,
    priors: &PriorSpec,
) -> (Vec<f64>, f64, Vec<f64>) {
    let layout = Layout::new(priors);
    let t = layout.encode(hyper);
    let geo = Geometry::new(data);
    let (v, g) = neg_objective(&t, &layout, priors, &geo);
    (t, v, g)
}

#[cfg(test)]
pub(crate) fn objective_at_for_test(data: &Dataset, t: &[f64], priors: &PriorSpec) -> f64 {
    let layout = Layout::new(priors);
    let geo = Geometry::new(data);
    neg_objective(t, &layout, priors, &geo).0
}
