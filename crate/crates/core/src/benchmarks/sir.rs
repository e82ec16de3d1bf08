//! Stochastic SEIR and deterministic SIR/SEIR epidemic models.
//!
//! Time is measured in units of the mean infectious period (`b = 1` in the
//! registry benchmarks). The reproduction number `a/b` is the integration
//! variable; its shifted-gamma prior is folded into the integrand.

use std::sync::OnceLock;

use rand::Rng;
use rand_distr::{Distribution, Exp1};
use rayon::prelude::*;
use statrs::distribution::{Continuous, Gamma};

use super::ode::{dopri5, OdeOptions};
use crate::acquisition::BlackBox;
use crate::error::{Error, Result};
use crate::numerics::composite_rule;
use crate::rng::{self, streams};

/// Compartment indices of an SEIR state.
pub const S: usize = 0;
pub const E: usize = 1;
pub const I: usize = 2;
pub const R: usize = 3;

/// Lower and upper ends of the truncated `a/b` domain.
pub const RATIO_DOMAIN: (f64, f64) = (1.0, 61.0);
/// Shape and scale of the gamma prior on `a/b - 1`.
pub const RATIO_PRIOR: (f64, f64) = (5.0, 4.0);
pub const POPULATION: u32 = 100;
/// Default Gillespie repetitions per primary query.
pub const DEFAULT_REPS: usize = 100;
/// Repetitions are doubled up to this many when no outbreak occurs.
pub const MAX_REPS: usize = 6400;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SirParams {
    pub a: f64,
    pub b: f64,
    pub gamma: f64,
    /// `(N_S, N_E, N_I, N_R)` at `t = 0`.
    pub initial: [u32; 4],
}

impl SirParams {
    /// `N = 100`, one initial infective, `b` given, `gamma = 10 b`.
    pub fn from_ratio(a_over_b: f64, b: f64) -> Result<Self> {
        SirParams { a: a_over_b * b, b, gamma: 10.0 * b, initial: [POPULATION - 1, 0, 1, 0] }.validated()
    }

    pub fn validated(self) -> Result<Self> {
        for (name, v) in [("a", self.a), ("b", self.b), ("gamma", self.gamma)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter { name: "sir rate", reason: format!("{name} = {v}") });
            }
        }
        if self.population() == 0 {
            return Err(Error::InvalidParameter { name: "sir population", reason: "empty".into() });
        }
        Ok(self)
    }

    pub fn population(&self) -> u32 {
        self.initial.iter().sum()
    }
}

/// Piecewise-constant trajectory: `states[i]` holds on `[times[i], times[i+1])`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<[u32; 4]>,
}

impl Trajectory {
    pub fn state_at(&self, t: f64) -> [u32; 4] {
        let i = self.times.partition_point(|s| *s <= t).max(1) - 1;
        self.states[i]
    }

    pub fn events(&self) -> usize {
        self.times.len() - 1
    }

    /// At least one infection took place.
    pub fn is_outbreak(&self) -> bool {
        self.states.last().expect("non-empty")[S] < self.states[0][S]
    }

    /// Largest `N_I` and the first time it is reached.
    pub fn peak(&self) -> (f64, f64) {
        let mut best = (self.states[0][I], self.times[0]);
        for (s, t) in self.states.iter().zip(&self.times) {
            if s[I] > best.0 {
                best = (s[I], *t);
            }
        }
        (best.0 as f64, best.1)
    }
}

/// Exact stochastic simulation until no event can fire.
pub fn gillespie_seir<G: Rng + ?Sized>(p: &SirParams, rng: &mut G) -> Trajectory {
    let n = p.population() as f64;
    let mut t = 0.0;
    let mut x = p.initial;
    let mut times = vec![0.0];
    let mut states = vec![x];
    loop {
        let infect = p.a * x[S] as f64 * x[I] as f64 / n;
        let onset = p.gamma * x[E] as f64;
        let recover = p.b * x[I] as f64;
        let total = infect + onset + recover;
        if !(total > 0.0) {
            break;
        }
        let wait: f64 = Exp1.sample(rng);
        t += wait / total;
        let u = rng.random::<f64>() * total;
        if u < infect {
            x[S] -= 1;
            x[E] += 1;
        } else if u < infect + onset || recover == 0.0 {
            x[E] -= 1;
            x[I] += 1;
        } else {
            x[I] -= 1;
            x[R] += 1;
        }
        times.push(t);
        states.push(x);
    }
    Trajectory { times, states }
}

pub fn gillespie_seir_seeded(p: &SirParams, seed: u64) -> Trajectory {
    gillespie_seir(p, &mut rng::stream(seed, streams::BENCHMARK))
}

fn check_grid(t_grid: &[f64]) -> Result<()> {
    if t_grid.is_empty() || t_grid[0] < 0.0 || t_grid.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidParameter { name: "t_grid", reason: "must be non-empty, non-negative and sorted".into() });
    }
    Ok(())
}

fn solve_on_grid<const K: usize>(
    f: impl FnMut(f64, &[f64], &mut [f64]),
    y0: [f64; K],
    t_grid: &[f64],
) -> Result<Vec<[f64; K]>> {
    check_grid(t_grid)?;
    let t_end = *t_grid.last().expect("non-empty");
    if t_end == 0.0 {
        return Ok(vec![y0; t_grid.len()]);
    }
    let sol = dopri5(f, 0.0, &y0, t_end, &OdeOptions::default(), |_| false)?;
    Ok(t_grid
        .iter()
        .map(|&t| {
            let v = sol.eval(t);
            std::array::from_fn(|i| v[i])
        })
        .collect())
}

fn sir_rhs(p: &SirParams) -> impl FnMut(f64, &[f64], &mut [f64]) + '_ {
    let n = p.population() as f64;
    move |_, y, dy| {
        let inf = p.a * y[0] * y[1] / n;
        dy[0] = -inf;
        dy[1] = inf - p.b * y[1];
        dy[2] = p.b * y[1];
    }
}

/// SIR ODE, `(N_S, N_I, N_R)` at each grid time. Exposed individuals in
/// `p.initial` are counted as infected.
pub fn ode_sir(p: &SirParams, t_grid: &[f64]) -> Result<Vec<[f64; 3]>> {
    let s = p.initial;
    let y0 = [s[S] as f64, (s[E] + s[I]) as f64, s[R] as f64];
    solve_on_grid(sir_rhs(p), y0, t_grid)
}

/// SEIR ODE, `(N_S, N_E, N_I, N_R)` at each grid time.
pub fn ode_seir(p: &SirParams, t_grid: &[f64]) -> Result<Vec<[f64; 4]>> {
    let n = p.population() as f64;
    let y0 = p.initial.map(f64::from);
    solve_on_grid(
        |_, y, dy| {
            let inf = p.a * y[S] * y[I] / n;
            dy[S] = -inf;
            dy[E] = inf - p.gamma * y[E];
            dy[I] = p.gamma * y[E] - p.b * y[I];
            dy[R] = p.b * y[I];
        },
        y0,
        t_grid,
    )
}

/// Peak `(max N_I, time of max)` of the SIR ODE. The peak is where
/// `a N_S / N = b`; below threshold it is at `t = 0`.
pub fn sir_ode_peak(p: &SirParams) -> Result<(f64, f64)> {
    let n = p.population() as f64;
    let i0 = (p.initial[E] + p.initial[I]) as f64;
    let s0 = p.initial[S] as f64;
    if p.a * s0 / n <= p.b || i0 == 0.0 {
        return Ok((i0, 0.0));
    }
    let mut t_end = 10.0 / p.b.max(1e-3);
    for _ in 0..20 {
        let y0 = [s0, i0, p.initial[R] as f64];
        let sol = dopri5(sir_rhs(p), 0.0, &y0, t_end, &OdeOptions::default(), |st| p.a * st.y1[0] / n < p.b)?;
        if let Some(t) = sol.first_root(|_, y| p.a * y[0] / n - p.b) {
            return Ok((sol.eval(t)[1], t));
        }
        t_end *= 2.0;
    }
    Err(Error::InvalidParameter { name: "sir", reason: "no peak found".into() })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SirQoi {
    MaxInfected,
    TimeOfMax,
}

impl SirQoi {
    fn of_trajectory(&self, tr: &Trajectory) -> f64 {
        let (m, t) = tr.peak();
        match self {
            SirQoi::MaxInfected => m,
            SirQoi::TimeOfMax => t,
        }
    }
}

/// Prior density of `a/b` (gamma on `a/b - 1`).
pub fn ratio_prior_density(u: f64) -> f64 {
    if u <= RATIO_DOMAIN.0 {
        return 0.0;
    }
    Gamma::new(RATIO_PRIOR.0, 1.0 / RATIO_PRIOR.1).expect("valid gamma").pdf(u - RATIO_DOMAIN.0)
}

fn weight(u: f64) -> f64 {
    ratio_prior_density(u) * (RATIO_DOMAIN.1 - RATIO_DOMAIN.0)
}

fn check_ratio(u: f64) -> Result<()> {
    if !(RATIO_DOMAIN.0..=RATIO_DOMAIN.1).contains(&u) {
        return Err(Error::OutOfDomain { point: vec![u] });
    }
    Ok(())
}

/// Average QoI over the outbreak trajectories among `reps` Gillespie runs,
/// doubling `reps` (up to [`MAX_REPS`]) when there is no outbreak. Returns
/// the mean and the number of outbreaks it averages.
pub fn outbreak_average(p: &SirParams, qoi: SirQoi, reps: usize, seed: u64) -> Result<(f64, usize)> {
    if reps == 0 {
        return Err(Error::InvalidParameter { name: "reps", reason: "need at least one repetition".into() });
    }
    let mut reps = reps;
    loop {
        let values: Vec<f64> = (0..reps as u64)
            .into_par_iter()
            .filter_map(|r| {
                let tr = gillespie_seir(p, &mut rng::substream(seed, streams::BENCHMARK, r));
                tr.is_outbreak().then(|| qoi.of_trajectory(&tr))
            })
            .collect();
        if !values.is_empty() {
            return Ok((values.iter().sum::<f64>() / values.len() as f64, values.len()));
        }
        if reps >= MAX_REPS {
            return Err(Error::QueryFailed { source_index: 0, reason: format!("no outbreak in {reps} repetitions") });
        }
        reps = (2 * reps).min(MAX_REPS);
    }
}

/// Weighted SIR integrand for source `l` (0: Gillespie SEIR, 1: SIR ODE) at
/// reproduction number `u`.
pub fn sir_integrand(l: usize, u: f64, qoi: SirQoi, reps: usize, seed: u64) -> Result<f64> {
    check_ratio(u)?;
    let p = SirParams::from_ratio(u, 1.0)?;
    let q = match l {
        0 => outbreak_average(&p, qoi, reps, rng::mix(seed ^ u.to_bits()))?.0,
        1 => {
            let (m, t) = sir_ode_peak(&p)?;
            match qoi {
                SirQoi::MaxInfected => m,
                SirQoi::TimeOfMax => t,
            }
        }
        _ => return Err(Error::SourceOutOfRange { index: l, n_sources: 2 }),
    };
    Ok(q * weight(u))
}

/// Black-box wrapper around [`sir_integrand`].
#[derive(Debug, Clone, Copy)]
pub struct SirSource {
    pub source: usize,
    pub qoi: SirQoi,
    pub reps: usize,
    pub seed: u64,
}

impl BlackBox for SirSource {
    fn evaluate(&self, x: &[f64]) -> Result<f64> {
        sir_integrand(self.source, x[0], self.qoi, self.reps, self.seed)
    }
}

/// Reference `<f_1>` for the stochastic primary: Gauss–Legendre over the
/// ratio domain with many repetitions per node, from a fixed seed.
pub fn sir_ground_truth(qoi: SirQoi) -> f64 {
    static MAX: OnceLock<f64> = OnceLock::new();
    static ARGMAX: OnceLock<f64> = OnceLock::new();
    let cell = match qoi {
        SirQoi::MaxInfected => &MAX,
        SirQoi::TimeOfMax => &ARGMAX,
    };
    *cell.get_or_init(|| sir_reference_integral(0, qoi, 4000, 0x5eed_0001))
}

/// Prior expectation of the QoI for source `l`, i.e. `<f_l>` over the
/// ratio domain.
pub fn sir_reference_integral(l: usize, qoi: SirQoi, reps: usize, seed: u64) -> f64 {
    let (lo, hi) = RATIO_DOMAIN;
    // the prior mass sits well below 40; finer panels there
    let (mut xs, mut ws) = composite_rule(lo, 21.0, 10, 8);
    let (x2, w2) = composite_rule(21.0, hi, 5, 8);
    xs.extend(x2);
    ws.extend(w2);
    let total: f64 = xs
        .iter()
        .zip(&ws)
        .map(|(u, w)| w * sir_integrand(l, *u, qoi, reps, seed).expect("node inside the domain"))
        .sum();
    total / (hi - lo)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ks_p_value(d: f64, n: usize) -> f64 {
        let lambda = (n as f64).sqrt() * d;
        let mut p = 0.0;
        for j in 1..100 {
            let jf = j as f64;
            p += 2.0 * (-1f64).powi(j + 1) * (-2.0 * jf * jf * lambda * lambda).exp();
        }
        p.clamp(0.0, 1.0)
    }

    #[test]
    fn no_infection_means_single_recovery() {
        let p = SirParams { a: 0.0, ..SirParams::from_ratio(1.0, 1.0).unwrap() };
        for seed in 0..20 {
            let tr = gillespie_seir_seeded(&p, seed);
            assert_eq!(tr.events(), 1);
            assert_eq!(tr.peak().0, 1.0);
            assert!(!tr.is_outbreak());
        }
    }

    #[test]
    fn no_recovery_infects_everyone() {
        let p = SirParams { a: 50.0, b: 0.0, gamma: 100.0, initial: [99, 0, 1, 0] };
        let tr = gillespie_seir_seeded(&p, 3);
        assert_eq!(*tr.states.last().unwrap(), [0, 0, 100, 0]);
    }

    #[test]
    fn population_is_conserved_and_deterministic() {
        let p = SirParams::from_ratio(10.0, 1.0).unwrap();
        let a = gillespie_seir_seeded(&p, 9);
        assert_eq!(a, gillespie_seir_seeded(&p, 9));
        assert!(a.states.iter().all(|s| s.iter().sum::<u32>() == 100));
        assert!(a.times.windows(2).all(|w| w[1] >= w[0]));
        let last = a.states.last().unwrap();
        assert_eq!(last[E] + last[I], 0);
    }

    #[test]
    fn pure_death_absorption_time_law() {
        let k = 5;
        let p = SirParams { a: 0.0, b: 1.0, gamma: 10.0, initial: [95, 0, k, 0] };
        let mut t: Vec<f64> = (0..10_000)
            .map(|s| {
                let tr = gillespie_seir_seeded(&p, s);
                assert_eq!(tr.events(), k as usize);
                *tr.times.last().unwrap()
            })
            .collect();
        t.sort_by(f64::total_cmp);
        let n = t.len();
        let cdf = |x: f64| (1.0 - (-x).exp()).powi(k as i32);
        let d = t
            .iter()
            .enumerate()
            .map(|(i, &x)| (cdf(x) - i as f64 / n as f64).abs().max(((i + 1) as f64 / n as f64 - cdf(x)).abs()))
            .fold(0.0, f64::max);
        let pv = ks_p_value(d, n);
        assert!(pv > 0.01, "D = {d}, p = {pv}");
    }

    #[test]
    fn sir_ode_conserves_population() {
        let p = SirParams::from_ratio(10.0, 1.0).unwrap();
        let grid: Vec<f64> = (0..50).map(|i| i as f64 * 0.1).collect();
        for y in ode_sir(&p, &grid).unwrap() {
            assert!((y.iter().sum::<f64>() - 100.0).abs() < 1e-8 * 100.0);
        }
    }

    #[test]
    fn subthreshold_sir_decays() {
        let p = SirParams::from_ratio(0.8, 1.0).unwrap();
        let grid: Vec<f64> = (0..40).map(|i| i as f64 * 0.25).collect();
        let y = ode_sir(&p, &grid).unwrap();
        assert!(y.windows(2).all(|w| w[1][1] < w[0][1]));
        assert_eq!(sir_ode_peak(&p).unwrap(), (1.0, 0.0));
    }

    fn rk4_peak(p: &SirParams, h: f64) -> (f64, f64) {
        let n = p.population() as f64;
        let f = |y: [f64; 2]| {
            let inf = p.a * y[0] * y[1] / n;
            [-inf, inf - p.b * y[1]]
        };
        let mut y = [99.0, 1.0];
        let mut t = 0.0;
        let mut hist = vec![(t, y[1])];
        while t < 5.0 {
            let k1 = f(y);
            let k2 = f([y[0] + 0.5 * h * k1[0], y[1] + 0.5 * h * k1[1]]);
            let k3 = f([y[0] + 0.5 * h * k2[0], y[1] + 0.5 * h * k2[1]]);
            let k4 = f([y[0] + h * k3[0], y[1] + h * k3[1]]);
            for i in 0..2 {
                y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            }
            t += h;
            hist.push((t, y[1]));
        }
        let i = (1..hist.len() - 1).max_by(|a, b| hist[*a].1.total_cmp(&hist[*b].1)).unwrap();
        // parabola through the three grid values around the maximum
        let (y0, y1, y2) = (hist[i - 1].1, hist[i].1, hist[i + 1].1);
        let off = 0.5 * (y0 - y2) / (y0 - 2.0 * y1 + y2);
        (y1 - 0.25 * (y0 - y2) * off, hist[i].0 + off * h)
    }

    #[test]
    fn sir_peak_matches_fine_fixed_step() {
        let p = SirParams::from_ratio(10.0, 1.0).unwrap();
        let (m, t) = sir_ode_peak(&p).unwrap();
        let (rm, rt) = rk4_peak(&p, 1e-4);
        assert!(((m - rm) / rm).abs() < 1e-4, "{m} vs {rm}");
        assert!(((t - rt) / rt).abs() < 1e-4, "{t} vs {rt}");
    }

    #[test]
    fn secondary_is_deterministic_and_biased() {
        let a = sir_integrand(1, 10.0, SirQoi::MaxInfected, 1, 0).unwrap();
        assert_eq!(a, sir_integrand(1, 10.0, SirQoi::MaxInfected, 1, 99).unwrap());
        let b = sir_integrand(0, 10.0, SirQoi::MaxInfected, 400, 0).unwrap();
        assert!((a - b).abs() / b > 0.05, "{a} vs {b}");
    }

    #[test]
    fn primary_standard_error_shrinks() {
        let spread = |reps: usize| {
            let v: Vec<f64> = (0..40).map(|s| sir_integrand(0, 5.0, SirQoi::MaxInfected, reps, s).unwrap()).collect();
            let m = v.iter().sum::<f64>() / v.len() as f64;
            (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64).sqrt()
        };
        let ratio = spread(25) / spread(400);
        // expected 4 for reps^(-1/2) scaling
        assert!((2.5..6.0).contains(&ratio), "{ratio}");
    }

    #[test]
    fn integrand_rejects_bad_input() {
        assert!(sir_integrand(0, 0.5, SirQoi::MaxInfected, 10, 0).is_err());
        assert!(sir_integrand(2, 5.0, SirQoi::MaxInfected, 10, 0).is_err());
        assert!(sir_integrand(0, 5.0, SirQoi::MaxInfected, 0, 0).is_err());
    }

    #[test]
    fn prior_mass_inside_domain() {
        let m = crate::numerics::integrate(ratio_prior_density, RATIO_DOMAIN.0, RATIO_DOMAIN.1, 60, 10);
        assert!(m > 0.999 && m <= 1.0 + 1e-12, "{m}");
    }
}
