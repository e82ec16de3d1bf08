//! Gaussian belief over the primary integral and the scalar correlation
//! `rho^2` between the integral and a batch of prospective observations.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::kernels::{initial_error, kernel_mean, IntegrationMeasure, PRIMARY};
use crate::msgp::GpState;

/// Floor on the integral variance.
pub const VARIANCE_FLOOR: f64 = 1e-14;
/// `rho^2` values further than this outside `[0, 1]` are reported as bugs
/// rather than clamped.
pub const RHO_TOLERANCE: f64 = 1e-6;

/// `Z | D ~ N(mean, variance)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegralPosterior {
    pub mean: f64,
    pub variance: f64,
}

impl IntegralPosterior {
    pub fn std_dev(&self) -> f64 {
        self.variance.sqrt()
    }
}

/// Prospective `(source, location)` pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateBatch {
    sources: Vec<usize>,
    locations: Vec<Vec<f64>>,
}

impl CandidateBatch {
    pub fn new(sources: Vec<usize>, locations: Vec<Vec<f64>>) -> Result<Self> {
        if sources.is_empty() {
            return Err(Error::InvalidParameter { name: "candidate batch", reason: "empty".into() });
        }
        if sources.len() != locations.len() {
            return Err(Error::DimensionMismatch { expected: sources.len(), got: locations.len() });
        }
        Ok(CandidateBatch { sources, locations })
    }

    pub fn single(source: usize, x: Vec<f64>) -> Self {
        CandidateBatch { sources: vec![source], locations: vec![x] }
    }

    pub fn len(&self) -> usize {
        self.sources.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sources.is_empty()
    }

    pub fn sources(&self) -> &[usize] {
        &self.sources
    }

    pub fn locations(&self) -> &[Vec<f64>] {
        &self.locations
    }

    fn validate(&self, state: &GpState, measure: &IntegrationMeasure) -> Result<()> {
        for (l, x) in self.sources.iter().zip(&self.locations) {
            state.kernel().check_source(*l)?;
            if x.len() != measure.dim() {
                return Err(Error::DimensionMismatch { expected: measure.dim(), got: x.len() });
            }
            if !measure.contains(x) {
                return Err(Error::OutOfDomain { point: x.clone() });
            }
        }
        Ok(())
    }
}

/// Integral quantities cached for one model state: the kernel-mean vector
/// `z_i = ⟨k_{1 l_i}(·, x_i)⟩`, `G^{-1} z`, and the posterior over `Z`.
///
/// Scoring a single candidate then costs one cross-covariance vector and
/// one triangular solve.
#[derive(Debug, Clone)]
pub struct IntegralModel<'a> {
    state: &'a GpState,
    measure: &'a IntegrationMeasure,
    g_inv_z: DVector<f64>,
    posterior: IntegralPosterior,
}

impl<'a> IntegralModel<'a> {
    pub fn new(state: &'a GpState, measure: &'a IntegrationMeasure) -> Result<Self> {
        if state.dim() != measure.dim() {
            return Err(Error::DimensionMismatch { expected: measure.dim(), got: state.dim() });
        }
        let kernel = state.kernel();
        let z = DVector::from_iterator(
            state.data().len(),
            state
                .data()
                .iter()
                .map(|o| kernel_mean(PRIMARY, o.source, &o.x, kernel, measure))
                .collect::<Result<Vec<_>>>()?,
        );
        let prior_var = initial_error(kernel, measure)?;
        let g_inv_z = state.solve(&z);
        let mean = state.prior_mean(PRIMARY) + z.dot(state.alpha());
        let variance = (prior_var - z.dot(&g_inv_z)).max(VARIANCE_FLOOR);
        Ok(IntegralModel { state, measure, g_inv_z, posterior: IntegralPosterior { mean, variance } })
    }

    pub fn state(&self) -> &GpState {
        self.state
    }

    pub fn measure(&self) -> &IntegrationMeasure {
        self.measure
    }

    pub fn posterior(&self) -> IntegralPosterior {
        self.posterior
    }

    /// Posterior covariance between `Z` and `f_l(x)`.
    pub fn cross_covariance(&self, l: usize, x: &[f64]) -> Result<f64> {
        let k = self.state.cross_vector(l, x)?;
        Ok(kernel_mean(PRIMARY, l, x, self.state.kernel(), self.measure)? - k.dot(&self.g_inv_z))
    }

    /// `rho^2` of a single candidate: the squared correlation between `Z`
    /// and the noisy observation `y_l(x)`.
    pub fn rho_squared_single(&self, l: usize, x: &[f64]) -> Result<f64> {
        let state = self.state;
        let k = state.cross_vector(l, x)?;
        let c = kernel_mean(PRIMARY, l, x, state.kernel(), self.measure)? - k.dot(&self.g_inv_z);
        let v = state.solve_lower(&k);
        let var = (state.kernel().b()[(l, l)] - v.norm_squared()).max(0.0) + state.effective_noise(l);
        if !(var > 0.0) {
            return Err(Error::DegenerateCandidate(format!("zero predictive variance for source {} at {x:?}", l + 1)));
        }
        check_rho(c * c / (var * self.posterior.variance))
    }

    /// `rho^2 = c^T V^{-1} c / V[Z|D]` for a batch.
    pub fn rho_squared(&self, cand: &CandidateBatch) -> Result<f64> {
        cand.validate(self.state, self.measure)?;
        if cand.len() == 1 {
            return self.rho_squared_single(cand.sources[0], &cand.locations[0]);
        }
        let state = self.state;
        let c = DVector::from_iterator(
            cand.len(),
            cand.sources
                .iter()
                .zip(&cand.locations)
                .map(|(l, x)| self.cross_covariance(*l, x))
                .collect::<Result<Vec<_>>>()?,
        );
        let mut v: DMatrix<f64> = state.posterior_cov(&cand.sources, &cand.locations, &cand.sources, &cand.locations)?;
        for (i, l) in cand.sources.iter().enumerate() {
            v[(i, i)] += state.effective_noise(*l);
        }
        let chol = v.cholesky().ok_or_else(|| {
            Error::DegenerateCandidate(format!(
                "candidate covariance is singular for sources {:?} at {:?}",
                cand.sources.iter().map(|l| l + 1).collect::<Vec<_>>(),
                cand.locations
            ))
        })?;
        let w = chol.l().solve_lower_triangular(&c).expect("positive diagonal");
        check_rho(w.norm_squared() / self.posterior.variance)
    }
}

fn check_rho(r: f64) -> Result<f64> {
    if !r.is_finite() || !(-RHO_TOLERANCE..=1.0 + RHO_TOLERANCE).contains(&r) {
        return Err(Error::Diagnostics(format!("rho^2 = {r} is outside [0, 1] beyond round-off")));
    }
    Ok(r.clamp(0.0, 1.0))
}

/// A surface of single-candidate `rho^2` values that the acquisition
/// optimiser can maximise. Implemented by [`IntegralModel`]; tests and
/// examples plug in synthetic profiles.
pub trait CorrelationSurface: Sync {
    fn n_sources(&self) -> usize;
    fn bounds(&self) -> &[(f64, f64)];
    fn rho_squared(&self, l: usize, x: &[f64]) -> Result<f64>;
}

impl CorrelationSurface for IntegralModel<'_> {
    fn n_sources(&self) -> usize {
        self.state.n_sources()
    }

    fn bounds(&self) -> &[(f64, f64)] {
        self.measure.bounds()
    }

    fn rho_squared(&self, l: usize, x: &[f64]) -> Result<f64> {
        self.rho_squared_single(l, x)
    }
}

/// A correlation surface given by a closure `(source, x) -> rho^2`.
pub struct FnSurface<F> {
    bounds: Vec<(f64, f64)>,
    n_sources: usize,
    f: F,
}

impl<F> FnSurface<F>
where
    F: Fn(usize, &[f64]) -> f64 + Sync,
{
    pub fn new(bounds: Vec<(f64, f64)>, n_sources: usize, f: F) -> Self {
        FnSurface { bounds, n_sources, f }
    }
}

impl<F> CorrelationSurface for FnSurface<F>
where
    F: Fn(usize, &[f64]) -> f64 + Sync,
{
    fn n_sources(&self) -> usize {
        self.n_sources
    }

    fn bounds(&self) -> &[(f64, f64)] {
        &self.bounds
    }

    fn rho_squared(&self, l: usize, x: &[f64]) -> Result<f64> {
        check_rho((self.f)(l, x))
    }
}

/// `E[Z|D]` and `V[Z|D]` of the primary integral.
pub fn integral_posterior(state: &GpState, measure: &IntegrationMeasure) -> Result<IntegralPosterior> {
    Ok(IntegralModel::new(state, measure)?.posterior())
}

/// `rho^2` of a candidate batch relative to the integral belief `z`.
pub fn rho_squared(
    state: &GpState,
    cand: &CandidateBatch,
    measure: &IntegrationMeasure,
    z: &IntegralPosterior,
) -> Result<f64> {
    let model = IntegralModel::new(state, measure)?;
    let r = model.rho_squared(cand)?;
    Ok((r * model.posterior.variance / z.variance.max(VARIANCE_FLOOR)).clamp(0.0, 1.0))
}

/// Expected drop of `V[Z|D]` from observing the batch, `rho^2 V[Z|D]`.
/// Depends only on the candidate locations, not on the values observed.
pub fn variance_reduction(state: &GpState, cand: &CandidateBatch, measure: &IntegrationMeasure) -> Result<f64> {
    let model = IntegralModel::new(state, measure)?;
    Ok(model.rho_squared(cand)? * model.posterior.variance)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::msgp::{Dataset, Hyperparams, Observation};
    use nalgebra::dmatrix;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn unit() -> IntegrationMeasure {
        IntegrationMeasure::uniform_box(vec![(0.0, 1.0)]).unwrap()
    }

    fn random_instance(rng: &mut ChaCha8Rng, n: usize, l: usize, noise: f64) -> GpState {
        let w = DMatrix::from_fn(l, l, |_, _| rng.random::<f64>() * 2.0 - 1.0);
        let eta = (0..l).map(|_| 0.05 + 0.3 * rng.random::<f64>()).collect();
        let h = Hyperparams { lengthscale: 0.1 + 0.3 * rng.random::<f64>(), w, eta, noise: vec![noise; l] };
        let obs = (0..n)
            .map(|_| Observation::new(rng.random_range(0..l), vec![rng.random()], rng.random::<f64>() - 0.5))
            .collect();
        GpState::new(h, Dataset::from_observations(1, obs).unwrap()).unwrap()
    }

    fn random_batch(rng: &mut ChaCha8Rng, size: usize, l: usize) -> CandidateBatch {
        CandidateBatch::new(
            (0..size).map(|_| rng.random_range(0..l)).collect(),
            (0..size).map(|_| vec![rng.random()]).collect(),
        )
        .unwrap()
    }

    fn conditioned_variance(state: &GpState, cand: &CandidateBatch, y: f64) -> f64 {
        let mut s = state.clone();
        for (l, x) in cand.sources().iter().zip(cand.locations()) {
            s.observe(Observation::new(*l, x.clone(), y)).unwrap();
        }
        integral_posterior(&s, &unit()).unwrap().variance
    }

    #[test]
    fn empty_dataset_gives_initial_error() {
        let h = Hyperparams { lengthscale: 0.1, w: dmatrix![0.0], eta: vec![1.0], noise: vec![0.0] };
        let s = GpState::new(h, Dataset::new(1)).unwrap();
        let z = integral_posterior(&s, &unit()).unwrap();
        assert_eq!(z.mean, 0.0);
        assert!((z.variance - 0.230662).abs() < 1e-6);
    }

    #[test]
    fn uncorrelated_secondary_data_changes_nothing() {
        let h = Hyperparams { lengthscale: 0.1, w: DMatrix::zeros(2, 2), eta: vec![1.0, 2.0], noise: vec![0.0; 2] };
        let empty = GpState::new(h.clone(), Dataset::new(1)).unwrap();
        let obs = vec![Observation::new(1, vec![0.2], 1.0), Observation::new(1, vec![0.6], -0.3)];
        let s = GpState::new(h, Dataset::from_observations(1, obs).unwrap()).unwrap();
        assert_eq!(integral_posterior(&s, &unit()).unwrap(), integral_posterior(&empty, &unit()).unwrap());
        let m = unit();
        let model = IntegralModel::new(&s, &m).unwrap();
        assert_eq!(model.rho_squared_single(1, &[0.4]).unwrap(), 0.0);
    }

    #[test]
    fn observed_noiseless_point_has_zero_rho() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let s = random_instance(&mut rng, 5, 2, 0.0);
        let m = unit();
        let model = IntegralModel::new(&s, &m).unwrap();
        for o in s.data().iter() {
            assert!(model.rho_squared_single(o.source, &o.x).unwrap() < 1e-6);
        }
    }

    #[test]
    fn single_candidate_matches_conditioning() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let s = random_instance(&mut rng, 4, 2, 0.01);
        let cand = CandidateBatch::single(1, vec![0.33]);
        let m = unit();
        let z = integral_posterior(&s, &m).unwrap();
        let r = rho_squared(&s, &cand, &m, &z).unwrap();
        let after = conditioned_variance(&s, &cand, 0.0);
        assert!(((z.variance - after) / z.variance - r).abs() < 1e-8);
        let dv = variance_reduction(&s, &cand, &m).unwrap();
        assert!((dv - r * z.variance).abs() < 1e-12);
    }

    #[test]
    fn perfect_candidate_reduces_all_variance() {
        // one source, one location, huge lengthscale: f is essentially a
        // constant, so observing it pins down Z
        let h = Hyperparams { lengthscale: 1e3, w: dmatrix![1.0], eta: vec![1e-12], noise: vec![0.0] };
        let s = GpState::new(h, Dataset::new(1)).unwrap();
        let m = unit();
        let model = IntegralModel::new(&s, &m).unwrap();
        let r = model.rho_squared_single(0, &[0.5]).unwrap();
        assert!(r > 1.0 - 1e-6);
        let dv = variance_reduction(&s, &CandidateBatch::single(0, vec![0.5]), &m).unwrap();
        assert!((dv - model.posterior().variance).abs() < 1e-6 * model.posterior().variance);
    }

    #[test]
    fn out_of_domain_candidate_is_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let s = random_instance(&mut rng, 2, 1, 0.0);
        let m = unit();
        let model = IntegralModel::new(&s, &m).unwrap();
        let bad = CandidateBatch::single(0, vec![1.5]);
        assert!(matches!(model.rho_squared(&bad), Err(Error::OutOfDomain { .. })));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn rho_is_a_fraction(seed in any::<u64>(), n in 0usize..8, l in 1usize..=3, size in 1usize..=3) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let s = random_instance(&mut rng, n, l, 0.0);
            let m = unit();
            let model = IntegralModel::new(&s, &m).unwrap();
            let cand = random_batch(&mut rng, size, l);
            let r = model.rho_squared(&cand).unwrap();
            prop_assert!((0.0..=1.0).contains(&r));
        }

        #[test]
        fn reduction_identity(seed in any::<u64>(), n in 0usize..8, l in 1usize..=3, size in 1usize..=3) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let s = random_instance(&mut rng, n, l, 1e-3);
            let m = unit();
            let cand = random_batch(&mut rng, size, l);
            let z = integral_posterior(&s, &m).unwrap();
            let dv = variance_reduction(&s, &cand, &m).unwrap();
            let direct = z.variance - conditioned_variance(&s, &cand, 0.0);
            prop_assert!((dv - direct).abs() <= 1e-7 * z.variance, "{} vs {}", dv, direct);
        }

        #[test]
        fn variance_ignores_observed_values(seed in any::<u64>(), y in -10.0f64..10.0) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let s = random_instance(&mut rng, 3, 2, 0.0);
            let cand = random_batch(&mut rng, 1, 2);
            let a = conditioned_variance(&s, &cand, 0.0);
            let b = conditioned_variance(&s, &cand, y);
            prop_assert!((a - b).abs() < 1e-12);
        }

        #[test]
        fn batches_explain_at_least_their_parts(seed in any::<u64>(), n in 0usize..6) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let s = random_instance(&mut rng, n, 2, 0.0);
            let m = unit();
            let model = IntegralModel::new(&s, &m).unwrap();
            let cand = random_batch(&mut rng, 3, 2);
            let full = model.rho_squared(&cand).unwrap();
            for drop in 0..3 {
                let keep: Vec<usize> = (0..3).filter(|i| *i != drop).collect();
                let sub = CandidateBatch::new(
                    keep.iter().map(|i| cand.sources()[*i]).collect(),
                    keep.iter().map(|i| cand.locations()[*i].clone()).collect(),
                ).unwrap();
                prop_assert!(model.rho_squared(&sub).unwrap() <= full + 1e-8);
            }
        }
    }
}
