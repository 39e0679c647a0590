//! Transitional MCMC: risk as the evidence of a tempered posterior.

mod config;
mod engine;
mod exponent;
mod proposal;
mod report;

pub use config::TmcmcConfig;
pub use engine::{run_sampler, LogLikelihood, SamplerOutput, StageDiagnostics};
pub use exponent::{solve_exponent, solve_exponent_ln, weight_cov, COV_TOLERANCE, STEP_TOLERANCE};
pub use proposal::{
    log_acceptance_ratio, mh_step, weighted_covariance, ChainState, Proposal, StepBuffers,
    COVARIANCE_JITTER,
};
pub use report::RiskReport;

use crate::error::{input, Error, Result};
use crate::risk::{transform_unchecked, AssetRegistry, Consequence, ConsequenceCache, SystemState};
use crate::scalar::Real;

/// `ln L(T(ξ))` for a consequence model, memoized per system state.
pub struct RiskLikelihood<'a, T, M> {
    cache: &'a ConsequenceCache<T, M>,
    betas: &'a [T],
}

impl<'a, T: Real, M: Consequence<T>> RiskLikelihood<'a, T, M> {
    pub fn new(cache: &'a ConsequenceCache<T, M>, registry: &'a AssetRegistry<T>) -> Self {
        Self {
            cache,
            betas: registry.betas(),
        }
    }
}

impl<T: Real, M: Consequence<T>> LogLikelihood<T> for RiskLikelihood<'_, T, M> {
    fn dim(&self) -> usize {
        self.betas.len()
    }

    fn ln_likelihood(&self, xi: &[T]) -> T {
        let s = transform_unchecked(xi, self.betas);
        self.cache.evaluate(&s).ln()
    }
}

/// Unnormalized Gaussian likelihood `exp(-|ξ - center|² / 2σ²)`, used to
/// check the sampler against a closed-form evidence.
#[derive(Debug, Clone)]
pub struct GaussianLikelihood<T> {
    pub center: Vec<T>,
    pub sigma: T,
}

impl<T: Real> GaussianLikelihood<T> {
    /// `∫ L(ξ) φ(ξ) dξ = Π_i σ/√(1+σ²) · exp(-d_i² / 2(1+σ²))`.
    pub fn evidence(&self) -> f64 {
        let s2 = self.sigma.as_f64().powi(2);
        self.center
            .iter()
            .map(|d| (s2 / (1.0 + s2)).sqrt() * (-d.as_f64().powi(2) / (2.0 * (1.0 + s2))).exp())
            .product()
    }
}

impl<T: Real> LogLikelihood<T> for GaussianLikelihood<T> {
    fn dim(&self) -> usize {
        self.center.len()
    }

    fn ln_likelihood(&self, xi: &[T]) -> T {
        let two_s2 = T::lit(2.0) * self.sigma * self.sigma;
        -xi.iter()
            .zip(&self.center)
            .map(|(&x, &c)| (x - c) * (x - c))
            .sum::<T>()
            / two_s2
    }
}

/// Column means of the failure bits: the share of samples in which each
/// asset has failed.
pub fn importance_measures<T: Real>(states: &[SystemState], asset_count: usize) -> Vec<T> {
    let mut counts = vec![0usize; asset_count];
    for s in states {
        for i in s.failed() {
            counts[i] += 1;
        }
    }
    let n = T::from_usize(states.len().max(1)).unwrap();
    counts
        .into_iter()
        .map(|c| T::from_usize(c).unwrap() / n)
        .collect()
}

/// Importance measures from a finished run; requires `q = 1`.
pub fn importance_from_output<T: Real>(
    output: &SamplerOutput<T>,
    registry: &AssetRegistry<T>,
) -> Result<Vec<T>> {
    if output.final_exponent < T::one() {
        return Err(Error::State(format!(
            "importance needs the final stage (q = 1), run ended at q = {}",
            output.final_exponent
        )));
    }
    let dim = registry.len();
    if dim == 0 {
        return Ok(Vec::new());
    }
    let states: Vec<SystemState> = output
        .final_samples
        .chunks(dim)
        .map(|x| transform_unchecked(x, registry.betas()))
        .collect();
    Ok(importance_measures(&states, dim))
}

/// Estimates `Σ_s p(s) L(s)` with transitional MCMC.
pub fn run_tmcmc<T, M>(
    model: &M,
    registry: &AssetRegistry<T>,
    config: &TmcmcConfig,
) -> Result<RiskReport<T>>
where
    T: Real,
    M: Consequence<T>,
{
    let cache = ConsequenceCache::new(model);
    run_tmcmc_cached(&cache, registry, config)
}

/// As [`run_tmcmc`], sharing a caller-owned cache.
pub fn run_tmcmc_cached<T, M>(
    cache: &ConsequenceCache<T, M>,
    registry: &AssetRegistry<T>,
    config: &TmcmcConfig,
) -> Result<RiskReport<T>>
where
    T: Real,
    M: Consequence<T>,
{
    config.validate()?;
    let n = registry.len();
    if cache.asset_count() != n {
        return Err(input(format!(
            "model has {} assets, registry {n}",
            cache.asset_count()
        )));
    }
    if n == 0 {
        // A single state; its consequence is the risk.
        let risk = cache.evaluate(&SystemState::zeros(0));
        return Ok(degenerate_report(risk, 0, cache));
    }
    let likelihood = RiskLikelihood::new(cache, registry);
    let output = match run_sampler(&likelihood, config) {
        Ok(o) => o,
        Err(Error::ZeroLikelihoodPrior { samples }) => {
            let intact = SystemState::zeros(n);
            let any_positive = cache.evaluate(&intact) > T::zero()
                || (0..n).any(|i| cache.evaluate(&SystemState::with_failures(n, &[i])) > T::zero());
            if any_positive {
                return Err(Error::ZeroLikelihoodPrior { samples });
            }
            return Ok(degenerate_report(T::zero(), n, cache));
        }
        Err(e) => return Err(e),
    };
    let importance = importance_from_output(&output, registry)?;
    let stats = cache.stats();
    Ok(RiskReport {
        method: "tmcmc".into(),
        estimated_risk: T::lit(output.evidence()),
        importance,
        stages_used: output.stages.len(),
        unique_states: stats.unique_states,
        total_evaluations: output.evaluations,
        per_stage: output.stages,
    })
}

fn degenerate_report<T: Real, M: Consequence<T>>(
    risk: T,
    n: usize,
    cache: &ConsequenceCache<T, M>,
) -> RiskReport<T> {
    let stats = cache.stats();
    RiskReport {
        method: "tmcmc".into(),
        estimated_risk: risk,
        importance: vec![T::zero(); n],
        stages_used: 0,
        unique_states: stats.unique_states,
        total_evaluations: stats.evaluations,
        per_stage: Vec::new(),
    }
}
