//! Bounded quasi-Newton minimisation.
//!
//! A projected BFGS method: the inverse-Hessian approximation acts on the
//! variables that are not pinned at an active bound, trial points are
//! projected back onto the box, and an Armijo backtracking search along the
//! projected path guarantees descent. Objectives may return a non-finite
//! value to reject a point; the line search then backtracks.

#[derive(Debug, Clone)]
pub struct Bounds {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Bounds {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Self {
        assert_eq!(lower.len(), upper.len());
        debug_assert!(lower.iter().zip(&upper).all(|(l, u)| l <= u));
        Bounds { lower, upper }
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn project(&self, x: &mut [f64]) {
        for ((v, lo), hi) in x.iter_mut().zip(&self.lower).zip(&self.upper) {
            *v = v.clamp(*lo, *hi);
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct QuasiNewtonOptions {
    pub max_iter: usize,
    /// Convergence threshold on the infinity norm of the projected gradient.
    pub grad_tol: f64,
    /// Convergence threshold on relative objective decrease.
    pub f_tol: f64,
    /// Largest step, as a fraction of the box extent, on the first iteration.
    pub initial_step: f64,
}

impl Default for QuasiNewtonOptions {
    fn default() -> Self {
        QuasiNewtonOptions { max_iter: 200, grad_tol: 1e-8, f_tol: 1e-12, initial_step: 0.1 }
    }
}

#[derive(Debug, Clone)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Minimises `f` over `bounds` starting from `x0`. `f` returns the value and
/// the gradient.
pub fn minimize<F>(mut f: F, x0: &[f64], bounds: &Bounds, opts: &QuasiNewtonOptions) -> Minimum
where
    F: FnMut(&[f64]) -> (f64, Vec<f64>),
{
    let n = x0.len();
    let mut x = x0.to_vec();
    bounds.project(&mut x);
    let (mut fx, mut g) = f(&x);
    if !fx.is_finite() {
        return Minimum { x, value: fx, iterations: 0, converged: false };
    }
    let extent: Vec<f64> = bounds.lower.iter().zip(&bounds.upper).map(|(l, u)| u - l).collect();
    let mut h = identity(n);
    let mut fresh = true;
    let mut small_steps = 0;

    for it in 0..opts.max_iter {
        let free: Vec<bool> = (0..n)
            .map(|i| {
                let at_lo = x[i] <= bounds.lower[i] && g[i] > 0.0;
                let at_hi = x[i] >= bounds.upper[i] && g[i] < 0.0;
                !(at_lo || at_hi)
            })
            .collect();
        let pg = (0..n).filter(|&i| free[i]).map(|i| g[i].abs()).fold(0.0, f64::max);
        if pg < opts.grad_tol {
            return Minimum { x, value: fx, iterations: it, converged: true };
        }

        let mut d = direction(&h, &g, &free);
        let mut slope: f64 = d.iter().zip(&g).map(|(a, b)| a * b).sum();
        if !(slope < 0.0) {
            h = identity(n);
            fresh = true;
            d = direction(&h, &g, &free);
            slope = d.iter().zip(&g).map(|(a, b)| a * b).sum();
        }

        let mut alpha: f64 = 1.0;
        if fresh {
            // Keep steepest-descent steps inside a fraction of the box.
            let scale = d
                .iter()
                .zip(&extent)
                .filter(|(di, _)| **di != 0.0)
                .map(|(di, e)| opts.initial_step * e / di.abs())
                .fold(f64::INFINITY, f64::min);
            if scale.is_finite() {
                alpha = alpha.min(scale);
            }
        }

        let mut accepted = None;
        for _ in 0..60 {
            let mut xn: Vec<f64> = x.iter().zip(&d).map(|(xi, di)| xi + alpha * di).collect();
            bounds.project(&mut xn);
            let dec: f64 = xn.iter().zip(&x).zip(&g).map(|((a, b), gi)| (a - b) * gi).sum();
            if xn == x {
                break;
            }
            let (fn_, gn) = f(&xn);
            if fn_.is_finite() && fn_ <= fx + 1e-4 * dec.min(0.0) {
                accepted = Some((xn, fn_, gn));
                break;
            }
            alpha *= 0.5;
        }

        let Some((xn, fn_, gn)) = accepted else {
            if fresh {
                return Minimum { x, value: fx, iterations: it, converged: false };
            }
            h = identity(n);
            fresh = true;
            continue;
        };

        let s: Vec<f64> = xn.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = gn.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy: f64 = s.iter().zip(&y).map(|(a, b)| a * b).sum();
        let ss: f64 = s.iter().map(|v| v * v).sum::<f64>();
        let yy: f64 = y.iter().map(|v| v * v).sum::<f64>();
        if sy > 1e-12 * (ss * yy).sqrt() {
            if fresh {
                // Shanno–Phua scaling of the initial inverse Hessian.
                let gamma = sy / yy;
                for i in 0..n {
                    h[i][i] = gamma;
                }
            }
            bfgs_update(&mut h, &s, &y, sy);
            fresh = false;
        }

        let rel = (fx - fn_).abs() / (1.0 + fx.abs());
        x = xn;
        fx = fn_;
        g = gn;
        if rel < opts.f_tol {
            small_steps += 1;
            if small_steps >= 3 {
                return Minimum { x, value: fx, iterations: it + 1, converged: true };
            }
        } else {
            small_steps = 0;
        }
    }
    Minimum { x, value: fx, iterations: opts.max_iter, converged: false }
}

/// Central finite-difference gradient, with one-sided differences at bounds.
pub fn numerical_gradient<F>(f: &mut F, x: &[f64], bounds: &Bounds, rel_step: f64) -> Vec<f64>
where
    F: FnMut(&[f64]) -> f64,
{
    let mut g = vec![0.0; x.len()];
    let mut probe = x.to_vec();
    for i in 0..x.len() {
        let h = rel_step * (bounds.upper[i] - bounds.lower[i]).max(1e-12);
        let lo = (x[i] - h).max(bounds.lower[i]);
        let hi = (x[i] + h).min(bounds.upper[i]);
        probe[i] = hi;
        let fp = f(&probe);
        probe[i] = lo;
        let fm = f(&probe);
        probe[i] = x[i];
        g[i] = if hi > lo { (fp - fm) / (hi - lo) } else { 0.0 };
        if !g[i].is_finite() {
            g[i] = 0.0;
        }
    }
    g
}

fn identity(n: usize) -> Vec<Vec<f64>> {
    (0..n).map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect()
}

fn direction(h: &[Vec<f64>], g: &[f64], free: &[bool]) -> Vec<f64> {
    let n = g.len();
    (0..n)
        .map(|i| {
            if !free[i] {
                return 0.0;
            }
            -(0..n).filter(|&j| free[j]).map(|j| h[i][j] * g[j]).sum::<f64>()
        })
        .collect()
}

fn bfgs_update(h: &mut [Vec<f64>], s: &[f64], y: &[f64], sy: f64) {
    let n = s.len();
    let rho = 1.0 / sy;
    let hy: Vec<f64> = (0..n).map(|i| (0..n).map(|j| h[i][j] * y[j]).sum()).collect();
    let yhy: f64 = y.iter().zip(&hy).map(|(a, b)| a * b).sum();
    for i in 0..n {
        for j in 0..n {
            h[i][j] += -rho * (hy[i] * s[j] + s[i] * hy[j]) + (rho * rho * yhy + rho) * s[i] * s[j];
        }
    }
}
