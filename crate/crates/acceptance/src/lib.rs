//! Independent oracles used by the acceptance suite.
//!
//! Everything here recomputes a library quantity by a different route:
//! tensor Gauss-Legendre instead of closed-form kernel integrals, explicit
//! conditioning instead of `rho^2`, the all-sources projection instead of
//! the stacked Gram matrix, and Monte Carlo over posterior sample paths
//! instead of the analytic integral belief.

use amsbq::kernels::{icm_eval, IcmKernel, IntegrationMeasure};
use amsbq::msgp::{Dataset, GpState, Hyperparams, Observation};
use amsbq::numerics::composite_rule;
use amsbq::quadrature::{integral_posterior, CandidateBatch};
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

/// Gauss-Legendre order per panel for the brute-force rules.
const ORDER: usize = 20;

fn panels(width: f64, lengthscale: f64) -> usize {
    (2.0 * width / lengthscale).ceil() as usize + 2
}

/// Tensor-product rule on a box with panels sized to the lengthscale.
fn tensor_rule(bounds: &[(f64, f64)], lengthscale: f64) -> Vec<(Vec<f64>, f64)> {
    let mut nodes = vec![(Vec::new(), 1.0)];
    for &(lo, hi) in bounds {
        let (xs, ws) = composite_rule(lo, hi, panels(hi - lo, lengthscale), ORDER);
        nodes = nodes
            .iter()
            .flat_map(|(p, w)| {
                xs.iter().zip(&ws).map(move |(x, wx)| {
                    let mut q = p.clone();
                    q.push(*x);
                    (q, w * wx)
                })
            })
            .collect();
    }
    nodes
}

/// `(1 / vol) ∫ k_{l,l'}(x, xp) dx` by tensor quadrature.
pub fn brute_kernel_mean(l: usize, lp: usize, xp: &[f64], kernel: &IcmKernel, bounds: &[(f64, f64)]) -> f64 {
    let vol: f64 = bounds.iter().map(|(lo, hi)| hi - lo).product();
    let lam = kernel.base().lengthscale();
    tensor_rule(bounds, lam)
        .iter()
        .map(|(x, w)| w * icm_eval(l, lp, x, xp, kernel).expect("valid sources"))
        .sum::<f64>()
        / vol
}

/// `(1 / vol^2) ∬ k_11(x, x') dx dx'`. Each coordinate pair is integrated
/// by a 2-D rule; the squared exponential factorises over coordinates, so
/// the D-dimensional value is the product.
pub fn brute_initial_error(kernel: &IcmKernel, bounds: &[(f64, f64)]) -> f64 {
    let lam = kernel.base().lengthscale();
    let mut total = kernel.b()[(0, 0)];
    for &(lo, hi) in bounds {
        let (xs, ws) = composite_rule(lo, hi, panels(hi - lo, lam), ORDER);
        let mut s = 0.0;
        for (x, wx) in xs.iter().zip(&ws) {
            for (y, wy) in xs.iter().zip(&ws) {
                s += wx * wy * (-(x - y) * (x - y) / (2.0 * lam * lam)).exp();
            }
        }
        total *= s / ((hi - lo) * (hi - lo));
    }
    total
}

/// Random ICM hyperparameters with full-rank `W`.
pub fn random_hyper(rng: &mut ChaCha8Rng, n_sources: usize, noise: f64) -> Hyperparams {
    let w = DMatrix::from_fn(n_sources, n_sources, |_, _| rng.random::<f64>() * 2.0 - 1.0);
    let eta = (0..n_sources).map(|_| 0.05 + 0.3 * rng.random::<f64>()).collect();
    Hyperparams { lengthscale: 0.15 + 0.35 * rng.random::<f64>(), w, eta, noise: vec![noise; n_sources] }
}

/// `n` observations at uniform locations in the unit cube, random sources.
pub fn random_data(rng: &mut ChaCha8Rng, n: usize, n_sources: usize, dim: usize) -> Dataset {
    let obs = (0..n)
        .map(|_| {
            let x: Vec<f64> = (0..dim).map(|_| rng.random()).collect();
            Observation::new(rng.random_range(0..n_sources), x, rng.random::<f64>() * 2.0 - 1.0)
        })
        .collect();
    Dataset::from_observations(dim, obs).expect("consistent dimension")
}

pub fn random_batch(rng: &mut ChaCha8Rng, size: usize, n_sources: usize, dim: usize) -> CandidateBatch {
    let sources = (0..size).map(|_| rng.random_range(0..n_sources)).collect();
    let xs = (0..size).map(|_| (0..dim).map(|_| rng.random()).collect()).collect();
    CandidateBatch::new(sources, xs).expect("matching lengths")
}

/// Condition number bound for the random comparison instances. Two
/// algebraically equal formulas evaluated in double precision differ by
/// roughly `cond * eps` times the size of the weights, so instances with
/// near-coincident noiseless points are redrawn.
pub const MAX_CONDITION: f64 = 1e6;

/// Condition number of the jittered Gram matrix of a state.
pub fn gram_condition(state: &GpState) -> f64 {
    let l = state.cholesky();
    let e = (l * l.transpose()).symmetric_eigenvalues();
    e.max() / e.min()
}

/// Random state with `n` observations whose Gram matrix satisfies
/// [`MAX_CONDITION`].
pub fn well_conditioned_state(rng: &mut ChaCha8Rng, n: usize, n_sources: usize, dim: usize, noise: f64) -> GpState {
    loop {
        let hyper = random_hyper(rng, n_sources, noise);
        let state = GpState::new(hyper, random_data(rng, n, n_sources, dim)).expect("state");
        if n == 0 || gram_condition(&state) <= MAX_CONDITION {
            return state;
        }
    }
}

/// `V[Z|D] - V[Z|D, batch]` by appending the batch to a copy of the state.
/// The observed values are irrelevant to the variance and set to zero.
pub fn direct_variance_reduction(state: &GpState, cand: &CandidateBatch, measure: &IntegrationMeasure) -> f64 {
    let before = integral_posterior(state, measure).expect("posterior").variance;
    let mut s = state.clone();
    for (l, x) in cand.sources().iter().zip(cand.locations()) {
        s.observe(Observation::new(*l, x.clone(), 0.0)).expect("append");
    }
    before - integral_posterior(&s, measure).expect("posterior").variance
}

/// Posterior of `f_l(x)` through the projection formulation: the joint
/// covariance of every source at every observed location, reduced to the
/// observed entries by a selection matrix and then conditioned.
pub fn projection_posterior(s: &GpState, l: usize, x: &[f64]) -> (f64, f64) {
    let data = s.data();
    let obs = data.observations();
    let n = obs.len();
    let ls = s.n_sources();
    let k = s.kernel();
    let h = s.hyperparams();
    let full = DMatrix::from_fn(n * ls, n * ls, |p, q| {
        let v = icm_eval(p % ls, q % ls, &obs[p / ls].x, &obs[q / ls].x, k).expect("valid");
        if p == q {
            v + h.noise[p % ls] + s.jitter()
        } else {
            v
        }
    });
    let select = DMatrix::from_fn(n * ls, n, |p, j| if p / ls == j && p % ls == obs[j].source { 1.0 } else { 0.0 });
    let g = select.transpose() * full * &select;
    let kx = DVector::from_fn(n * ls, |p, _| icm_eval(l, p % ls, x, &obs[p / ls].x, k).expect("valid"));
    let kv = select.transpose() * kx;
    let chol = g.cholesky().expect("positive definite Gram matrix");
    let centred = data.values() - DVector::from_fn(n, |j, _| s.prior_mean(obs[j].source));
    let mean = s.prior_mean(l) + kv.dot(&chol.solve(&centred));
    let var = k.b()[(l, l)] - kv.dot(&chol.solve(&kv));
    (mean, var)
}

/// Monte Carlo estimate of the integral belief from posterior sample paths.
#[derive(Debug, Clone, Copy)]
pub struct PathEstimate {
    pub mean: f64,
    pub variance: f64,
    pub se_mean: f64,
    pub se_variance: f64,
}

/// Draws `n_paths` joint posterior samples of `f_1` on a tensor
/// Gauss-Legendre grid (`nodes` per coordinate, uniform measure) and
/// integrates each path with the rule.
pub fn sample_path_integrals(
    state: &GpState,
    measure: &IntegrationMeasure,
    nodes: usize,
    n_paths: usize,
    rng: &mut ChaCha8Rng,
) -> PathEstimate {
    let vol = measure.volume();
    let mut grid = vec![(Vec::new(), 1.0 / vol)];
    for &(lo, hi) in measure.bounds() {
        let (xs, ws) = composite_rule(lo, hi, 1, nodes);
        grid = grid
            .iter()
            .flat_map(|(p, w)| {
                xs.iter().zip(&ws).map(move |(x, wx)| {
                    let mut q = p.clone();
                    q.push(*x);
                    (q, w * wx)
                })
            })
            .collect();
    }
    let pts: Vec<Vec<f64>> = grid.iter().map(|g| g.0.clone()).collect();
    let weights = DVector::from_iterator(pts.len(), grid.iter().map(|g| g.1));
    let mean = DVector::from_iterator(pts.len(), pts.iter().map(|x| state.posterior(0, x).expect("posterior").0));
    let mut cov = state.posterior_cross_cov(0, 0, &pts, &pts).expect("covariance");
    let m = pts.len();
    let scale = cov.diagonal().max().max(1e-300);
    for i in 0..m {
        cov[(i, i)] += 1e-12 * scale;
    }
    let chol = cov.cholesky().expect("jittered posterior covariance").unpack();

    let base = weights.dot(&mean);
    let mut sum = 0.0;
    let mut sum2 = 0.0;
    let mut sum4 = 0.0;
    let mut z = DVector::zeros(m);
    for _ in 0..n_paths {
        for v in z.iter_mut() {
            *v = StandardNormal.sample(rng);
        }
        let path = &chol * &z;
        let dev = weights.dot(&path);
        sum += dev;
        sum2 += dev * dev;
        sum4 += dev.powi(4);
    }
    let n = n_paths as f64;
    let mu = sum / n;
    let var = (sum2 - n * mu * mu) / (n - 1.0);
    let m4 = sum4 / n;
    PathEstimate {
        mean: base + mu,
        variance: var,
        se_mean: (var / n).sqrt(),
        se_variance: ((m4 - var * var) / n).max(0.0).sqrt(),
    }
}
