//! Gaussian random-walk Metropolis-Hastings on the latent space.

use rand::Rng;
use rayon::prelude::*;

use super::LogLikelihood;
use crate::scalar::Real;

/// Diagonal regularization added to the proposal covariance.
pub const COVARIANCE_JITTER: f64 = 1e-10;

/// Random-walk proposal `ξ' = ξ + L z` with `L Lᵀ = scale² Σ + εI`.
#[derive(Debug, Clone)]
pub struct Proposal<T> {
    dim: usize,
    /// Lower-triangular Cholesky factor, row-major.
    chol: Vec<T>,
}

impl<T: Real> Proposal<T> {
    /// Isotropic proposal with standard deviation `scale` per coordinate.
    pub fn isotropic(dim: usize, scale: T) -> Self {
        let mut chol = vec![T::zero(); dim * dim];
        for i in 0..dim {
            chol[i * dim + i] = scale;
        }
        Self { dim, chol }
    }

    /// Builds the proposal from the weighted covariance of `samples`
    /// (row-major, `weights.len()` rows of `dim` columns).
    pub fn from_weighted_samples(samples: &[T], dim: usize, weights: &[T], scale: T) -> Self {
        let cov = weighted_covariance(samples, dim, weights);
        Self::from_covariance(cov, dim, scale)
    }

    pub fn from_covariance(mut cov: Vec<T>, dim: usize, scale: T) -> Self {
        let s2 = scale * scale;
        cov.iter_mut().for_each(|c| *c *= s2);
        let mut jitter = T::lit(COVARIANCE_JITTER);
        loop {
            let mut a = cov.clone();
            for i in 0..dim {
                a[i * dim + i] += jitter;
            }
            if let Some(chol) = cholesky(a, dim) {
                return Self { dim, chol };
            }
            jitter *= T::lit(10.0);
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Writes `current + L z` into `out`.
    pub fn propose<R: Rng + ?Sized>(&self, current: &[T], rng: &mut R, z: &mut [T], out: &mut [T]) {
        let n = self.dim;
        for zi in z.iter_mut() {
            *zi = T::sample_standard_normal(rng);
        }
        for i in 0..n {
            let row = &self.chol[i * n..i * n + i + 1];
            let step: T = row.iter().zip(&z[..=i]).map(|(&l, &zj)| l * zj).sum();
            out[i] = current[i] + step;
        }
    }
}

/// Weighted covariance, row-major `dim × dim`. Each entry is summed over
/// samples in order so the result does not depend on thread count.
pub fn weighted_covariance<T: Real>(samples: &[T], dim: usize, weights: &[T]) -> Vec<T> {
    let n = weights.len();
    assert_eq!(samples.len(), n * dim);
    let total: T = weights.iter().copied().sum();
    let w: Vec<T> = weights.iter().map(|&x| x / total).collect();
    let mut mean = vec![T::zero(); dim];
    for (k, &wk) in w.iter().enumerate() {
        if wk > T::zero() {
            for (m, &x) in mean.iter_mut().zip(&samples[k * dim..(k + 1) * dim]) {
                *m += wk * x;
            }
        }
    }
    let active: Vec<usize> = (0..n).filter(|&k| w[k] > T::zero()).collect();
    let rows: Vec<Vec<T>> = (0..dim)
        .into_par_iter()
        .map(|i| {
            let mut acc = vec![T::zero(); i + 1];
            for &k in &active {
                let x = &samples[k * dim..(k + 1) * dim];
                let di = w[k] * (x[i] - mean[i]);
                for j in 0..=i {
                    acc[j] += di * (x[j] - mean[j]);
                }
            }
            acc
        })
        .collect();
    let mut cov = vec![T::zero(); dim * dim];
    for (i, row) in rows.into_iter().enumerate() {
        for (j, v) in row.into_iter().enumerate() {
            cov[i * dim + j] = v;
            cov[j * dim + i] = v;
        }
    }
    cov
}

/// In-place Cholesky; `None` if the matrix is not positive definite.
fn cholesky<T: Real>(mut a: Vec<T>, n: usize) -> Option<Vec<T>> {
    for j in 0..n {
        let mut d = a[j * n + j];
        for k in 0..j {
            d -= a[j * n + k] * a[j * n + k];
        }
        if !(d > T::zero()) || !d.is_finite() {
            return None;
        }
        let d = d.sqrt();
        a[j * n + j] = d;
        let (head, tail) = a.split_at_mut((j + 1) * n);
        let row_j = &head[j * n..j * n + j];
        tail.par_chunks_mut(n).for_each(|row_i| {
            let mut s = row_i[j];
            for k in 0..j {
                s -= row_i[k] * row_j[k];
            }
            row_i[j] = s / d;
        });
    }
    for i in 0..n {
        for j in i + 1..n {
            a[i * n + j] = T::zero();
        }
    }
    Some(a)
}

/// Current position of one Markov chain.
#[derive(Debug, Clone)]
pub struct ChainState<T> {
    pub xi: Vec<T>,
    pub ln_likelihood: T,
    /// `-|ξ|²/2`, the standard-normal log density up to a constant.
    pub ln_prior: T,
}

impl<T: Real> ChainState<T> {
    pub fn new(xi: Vec<T>, ln_likelihood: T) -> Self {
        let ln_prior = ln_prior(&xi);
        Self {
            xi,
            ln_likelihood,
            ln_prior,
        }
    }
}

#[inline]
pub fn ln_prior<T: Real>(xi: &[T]) -> T {
    -xi.iter().map(|&x| x * x).sum::<T>() / T::lit(2.0)
}

/// Log of the MH acceptance ratio for target `L^q φ`.
///
/// A zero-likelihood proposal is always rejected from a positive-likelihood
/// state; between two zero-likelihood states only the prior ratio counts.
pub fn log_acceptance_ratio<T: Real>(
    q: T,
    cur_ln_l: T,
    cur_ln_prior: T,
    new_ln_l: T,
    new_ln_prior: T,
) -> T {
    let ninf = T::neg_infinity();
    let like = match (cur_ln_l == ninf, new_ln_l == ninf) {
        (false, true) => return ninf,
        (true, true) => T::zero(),
        (true, false) => return T::infinity(),
        (false, false) => q * (new_ln_l - cur_ln_l),
    };
    like + new_ln_prior - cur_ln_prior
}

/// Scratch buffers reused across steps of one chain.
#[derive(Debug, Clone)]
pub struct StepBuffers<T> {
    z: Vec<T>,
    candidate: Vec<T>,
}

impl<T: Real> StepBuffers<T> {
    pub fn new(dim: usize) -> Self {
        Self {
            z: vec![T::zero(); dim],
            candidate: vec![T::zero(); dim],
        }
    }
}

/// One Metropolis-Hastings transition targeting `L(ξ)^q φ(ξ)`. Returns
/// whether the proposal was accepted.
pub fn mh_step<T, L, R>(
    state: &mut ChainState<T>,
    q: T,
    likelihood: &L,
    proposal: &Proposal<T>,
    rng: &mut R,
    buf: &mut StepBuffers<T>,
) -> bool
where
    T: Real,
    L: LogLikelihood<T> + ?Sized,
    R: Rng + ?Sized,
{
    proposal.propose(&state.xi, rng, &mut buf.z, &mut buf.candidate);
    let new_ln_l = likelihood.ln_likelihood(&buf.candidate);
    let new_ln_prior = ln_prior(&buf.candidate);
    let log_ratio = log_acceptance_ratio(
        q,
        state.ln_likelihood,
        state.ln_prior,
        new_ln_l,
        new_ln_prior,
    );
    let u = T::sample_unit(rng);
    if u.ln() < log_ratio {
        std::mem::swap(&mut state.xi, &mut buf.candidate);
        state.ln_likelihood = new_ln_l;
        state.ln_prior = new_ln_prior;
        true
    } else {
        false
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn cholesky_reconstructs() {
        let a = vec![4.0, 2.0, 0.4, 2.0, 5.0, 1.0, 0.4, 1.0, 3.0];
        let l = cholesky(a.clone(), 3).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let v: f64 = (0..3).map(|k| l[i * 3 + k] * l[j * 3 + k]).sum();
                assert!((v - a[i * 3 + j]).abs() < 1e-12);
            }
        }
        assert!(cholesky(vec![1.0, 2.0, 2.0, 1.0], 2).is_none());
    }

    #[test]
    fn degenerate_covariance_is_regularized() {
        // All samples identical: zero covariance.
        let samples = vec![0.5f64; 12];
        let p = Proposal::from_weighted_samples(&samples, 3, &[1.0; 4], 0.2);
        assert!(p.chol.iter().all(|v| v.is_finite()));
        assert!(p.chol[0] > 0.0);
    }

    #[test]
    fn weighted_covariance_matches_direct() {
        let samples = [1.0, 2.0, 3.0, 1.0, -1.0, 0.0];
        let w = [1.0, 3.0, 0.0];
        let cov = weighted_covariance(&samples, 2, &w);
        // Mean (2.5, 1.25) from rows 0 and 1 with weights .25/.75.
        let var_x = 0.25 * 1.5f64.powi(2) + 0.75 * 0.5f64.powi(2);
        let var_y = 0.25 * 0.75f64.powi(2) + 0.75 * 0.25f64.powi(2);
        let cxy = 0.25 * (-1.5) * 0.75 + 0.75 * 0.5 * (-0.25);
        assert!((cov[0] - var_x).abs() < 1e-12);
        assert!((cov[3] - var_y).abs() < 1e-12);
        assert!((cov[1] - cxy).abs() < 1e-12 && cov[1] == cov[2]);
    }

    #[test]
    fn acceptance_ratio_rules() {
        let ninf = f64::NEG_INFINITY;
        assert_eq!(log_acceptance_ratio(0.5, 1.0, -0.3, 1.0, -0.3), 0.0);
        assert_eq!(log_acceptance_ratio(0.5, 1.0, 0.0, ninf, 0.0), ninf);
        assert_eq!(log_acceptance_ratio(0.5, ninf, -1.0, ninf, -2.0), -1.0);
        // q → 0⁺ leaves only the prior ratio.
        let r: f64 = log_acceptance_ratio(1e-12, 2.0, -0.5, -3.0, -0.7);
        assert!((r - (-0.2)).abs() < 1e-9);
    }

    struct Flat;
    impl LogLikelihood<f64> for Flat {
        fn dim(&self) -> usize {
            2
        }
        fn ln_likelihood(&self, _: &[f64]) -> f64 {
            0.0
        }
    }

    #[test]
    fn zero_step_proposal_is_accepted() {
        let p = Proposal::isotropic(2, 0.0);
        let mut st = ChainState::new(vec![0.3, -0.2], 0.0);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let mut buf = StepBuffers::new(2);
        for _ in 0..100 {
            assert!(mh_step(&mut st, 1.0, &Flat, &p, &mut rng, &mut buf));
        }
        assert_eq!(st.xi, vec![0.3, -0.2]);
    }

    #[test]
    fn chain_samples_standard_normal_under_flat_likelihood() {
        let p = Proposal::isotropic(2, 1.0);
        let mut st = ChainState::new(vec![0.0, 0.0], 0.0);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2);
        let mut buf = StepBuffers::new(2);
        let (mut s1, mut s2, n) = (0.0, 0.0, 200_000);
        for _ in 0..n {
            mh_step(&mut st, 1.0, &Flat, &p, &mut rng, &mut buf);
            s1 += st.xi[0];
            s2 += st.xi[0] * st.xi[0];
        }
        let mean = s1 / n as f64;
        let var = s2 / n as f64 - mean * mean;
        assert!(mean.abs() < 0.03, "mean {mean}");
        assert!((var - 1.0).abs() < 0.05, "var {var}");
    }
}
