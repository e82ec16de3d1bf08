//! Adaptive Dormand–Prince 5(4) integrator with dense output.

use crate::error::{Error, Result};

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

// continuous extension (Hairer & Wanner's CONTD5)
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

#[derive(Debug, Clone, Copy)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    pub initial_step: Option<f64>,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        OdeOptions { rtol: 1e-10, atol: 1e-12, initial_step: None, max_steps: 1_000_000 }
    }
}

/// One accepted step with its interpolation polynomial.
#[derive(Debug, Clone)]
pub struct DenseStep {
    pub t0: f64,
    pub t1: f64,
    pub y0: Vec<f64>,
    pub y1: Vec<f64>,
    rcont: [Vec<f64>; 4],
}

impl DenseStep {
    /// State at `t` in `[t0, t1]`.
    pub fn eval(&self, t: f64) -> Vec<f64> {
        let h = self.t1 - self.t0;
        let th = if h > 0.0 { (t - self.t0) / h } else { 0.0 };
        let th1 = 1.0 - th;
        let [r2, r3, r4, r5] = &self.rcont;
        (0..self.y0.len())
            .map(|i| self.y0[i] + th * (r2[i] + th1 * (r3[i] + th * (r4[i] + th1 * r5[i]))))
            .collect()
    }
}

/// Accepted steps covering `[t_start, t_end]`.
#[derive(Debug, Clone)]
pub struct OdeSolution {
    pub steps: Vec<DenseStep>,
    /// Whether integration ended early because the stop condition fired.
    pub stopped: bool,
}

impl OdeSolution {
    pub fn t_end(&self) -> f64 {
        self.steps.last().map_or(0.0, |s| s.t1)
    }

    pub fn final_state(&self) -> &[f64] {
        &self.steps.last().expect("at least one step").y1
    }

    /// Dense state at `t`, clamped to the integrated interval.
    pub fn eval(&self, t: f64) -> Vec<f64> {
        let i = self.steps.partition_point(|s| s.t1 < t).min(self.steps.len() - 1);
        let s = &self.steps[i];
        s.eval(t.clamp(s.t0, s.t1))
    }

    /// First `t` at which `g(t, y(t))` changes sign from its value at the
    /// start, located by bisection on the dense output.
    pub fn first_root<G: Fn(f64, &[f64]) -> f64>(&self, g: G) -> Option<f64> {
        let first = self.steps.first()?;
        let sign0 = g(first.t0, &first.y0).signum();
        for s in &self.steps {
            if g(s.t1, &s.y1).signum() != sign0 {
                let (mut lo, mut hi) = (s.t0, s.t1);
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if mid <= lo || mid >= hi {
                        break;
                    }
                    if g(mid, &s.eval(mid)).signum() == sign0 {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                return Some(0.5 * (lo + hi));
            }
        }
        None
    }
}

fn axpy(y: &[f64], h: f64, terms: &[(f64, &[f64])]) -> Vec<f64> {
    (0..y.len()).map(|i| y[i] + h * terms.iter().map(|(c, k)| c * k[i]).sum::<f64>()).collect()
}

/// Integrates `y' = f(t, y)` from `t0` to `t_end`. After each accepted step
/// `stop` may end the integration early.
pub fn dopri5<F, S>(mut f: F, t0: f64, y0: &[f64], t_end: f64, opts: &OdeOptions, mut stop: S) -> Result<OdeSolution>
where
    F: FnMut(f64, &[f64], &mut [f64]),
    S: FnMut(&DenseStep) -> bool,
{
    if !(t_end > t0) {
        return Err(Error::InvalidParameter { name: "t_end", reason: format!("must exceed t0 = {t0}") });
    }
    let n = y0.len();
    let mut t = t0;
    let mut y = y0.to_vec();
    let mut k1 = vec![0.0; n];
    f(t, &y, &mut k1);
    let scale = |y: &[f64], i: usize| opts.atol + opts.rtol * y[i].abs();
    let mut h = opts.initial_step.unwrap_or_else(|| {
        let d0 = (0..n).map(|i| (y[i] / scale(&y, i)).powi(2)).sum::<f64>().sqrt();
        let d1 = (0..n).map(|i| (k1[i] / scale(&y, i)).powi(2)).sum::<f64>().sqrt();
        let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
        h0.min(t_end - t0)
    });

    let mut steps = Vec::new();
    let (mut k2, mut k3, mut k4, mut k5, mut k6, mut k7) =
        (vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    let mut n_steps = 0;
    while t < t_end {
        n_steps += 1;
        if n_steps > opts.max_steps {
            return Err(Error::InvalidParameter { name: "ode", reason: format!("step limit reached at t = {t}") });
        }
        if t + h > t_end {
            h = t_end - t;
        }
        f(t + C2 * h, &axpy(&y, h, &[(A21, &k1)]), &mut k2);
        f(t + C3 * h, &axpy(&y, h, &[(A31, &k1), (A32, &k2)]), &mut k3);
        f(t + C4 * h, &axpy(&y, h, &[(A41, &k1), (A42, &k2), (A43, &k3)]), &mut k4);
        f(t + C5 * h, &axpy(&y, h, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]), &mut k5);
        let y6 = axpy(&y, h, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]);
        f(t + h, &y6, &mut k6);
        let y_new = axpy(&y, h, &[(A71, &k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)]);
        f(t + h, &y_new, &mut k7);

        let mut err = 0.0;
        for i in 0..n {
            let e = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            let sc = opts.atol + opts.rtol * y[i].abs().max(y_new[i].abs());
            err += (e / sc).powi(2);
        }
        let err = (err / n as f64).sqrt();
        if !err.is_finite() {
            h *= 0.1;
            if h < 1e-14 * t.abs().max(1.0) {
                return Err(Error::InvalidParameter { name: "ode", reason: format!("step size underflow at t = {t}") });
            }
            continue;
        }
        if err <= 1.0 {
            let r2: Vec<f64> = (0..n).map(|i| y_new[i] - y[i]).collect();
            let r3: Vec<f64> = (0..n).map(|i| h * k1[i] - r2[i]).collect();
            let r4: Vec<f64> = (0..n).map(|i| r2[i] - h * k7[i] - r3[i]).collect();
            let r5: Vec<f64> = (0..n)
                .map(|i| h * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i]))
                .collect();
            let step = DenseStep { t0: t, t1: t + h, y0: y.clone(), y1: y_new.clone(), rcont: [r2, r3, r4, r5] };
            let halt = stop(&step);
            steps.push(step);
            t += h;
            y = y_new;
            std::mem::swap(&mut k1, &mut k7);
            if halt {
                return Ok(OdeSolution { steps, stopped: true });
            }
        } else if h < 1e-14 * t.abs().max(1.0) {
            return Err(Error::InvalidParameter { name: "ode", reason: format!("step size underflow at t = {t}") });
        }
        let fac = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
        h *= fac;
    }
    Ok(OdeSolution { steps, stopped: false })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_decay() {
        let sol = dopri5(|_, y, dy| dy[0] = -y[0], 0.0, &[1.0], 5.0, &OdeOptions::default(), |_| false).unwrap();
        assert!((sol.final_state()[0] - (-5f64).exp()).abs() < 1e-9);
        for t in [0.1, 0.77, 2.5, 4.9] {
            assert!((sol.eval(t)[0] - (-t as f64).exp()).abs() < 1e-8, "t = {t}");
        }
    }

    #[test]
    fn harmonic_oscillator_and_root() {
        let sol =
            dopri5(|_, y, dy| { dy[0] = y[1]; dy[1] = -y[0] }, 0.0, &[1.0, 0.0], 4.0, &OdeOptions::default(), |_| false)
                .unwrap();
        let root = sol.first_root(|_, y| y[0]).unwrap();
        assert!((root - std::f64::consts::FRAC_PI_2).abs() < 1e-9);
    }

    #[test]
    fn stop_condition_ends_early() {
        let sol = dopri5(|_, _, dy| dy[0] = 1.0, 0.0, &[0.0], 100.0, &OdeOptions::default(), |s| s.y1[0] > 3.0).unwrap();
        assert!(sol.stopped);
        assert!(sol.t_end() < 100.0);
    }
}
