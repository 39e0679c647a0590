use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Sampler hyperparameters. Defaults follow the analytical-example setup:
/// 5000 samples per stage, 100 % COV target, 10 chains, 1000 burn-in
/// steps, thinning 10 and 10 % direct resampling.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TmcmcConfig {
    pub samples_per_stage: usize,
    /// Target coefficient of variation of the stage weights (1.0 = 100 %).
    pub cov_target: f64,
    pub n_chains: usize,
    pub burn_in: usize,
    /// Chain steps between emitted samples.
    pub thinning: usize,
    /// Share of each stage's samples taken as direct weighted resamples;
    /// the rest come from Metropolis-Hastings chains.
    pub resample_fraction: f64,
    pub max_stages: usize,
    pub seed: u64,
    /// Random-walk step relative to the weighted sample covariance.
    pub proposal_scale: f64,
}

impl Default for TmcmcConfig {
    fn default() -> Self {
        Self {
            samples_per_stage: 5000,
            cov_target: 1.0,
            n_chains: 10,
            burn_in: 1000,
            thinning: 10,
            resample_fraction: 0.1,
            max_stages: 100,
            seed: 0,
            proposal_scale: 0.2,
        }
    }
}

impl TmcmcConfig {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Config(m));
        if !(self.cov_target > 0.0) || !self.cov_target.is_finite() {
            return fail(format!(
                "cov_target must be positive, got {}",
                self.cov_target
            ));
        }
        if !(self.resample_fraction > 0.0 && self.resample_fraction <= 1.0) {
            return fail(format!(
                "resample_fraction must lie in (0, 1], got {}",
                self.resample_fraction
            ));
        }
        if self.n_chains == 0 {
            return fail("n_chains must be at least 1".into());
        }
        if self.samples_per_stage < self.n_chains {
            return fail(format!(
                "samples_per_stage ({}) must be at least n_chains ({})",
                self.samples_per_stage, self.n_chains
            ));
        }
        if self.thinning == 0 {
            return fail("thinning must be at least 1".into());
        }
        if self.max_stages == 0 {
            return fail("max_stages must be at least 1".into());
        }
        if !(self.proposal_scale > 0.0) || !self.proposal_scale.is_finite() {
            return fail(format!(
                "proposal_scale must be positive, got {}",
                self.proposal_scale
            ));
        }
        Ok(())
    }

    /// Number of direct resamples per stage.
    pub fn resample_count(&self) -> usize {
        ((self.resample_fraction * self.samples_per_stage as f64).round() as usize)
            .min(self.samples_per_stage)
    }

    /// Samples each chain must emit per stage, chain 0 first.
    pub fn chain_quotas(&self) -> Vec<usize> {
        let total = self.samples_per_stage - self.resample_count();
        let base = total / self.n_chains;
        let extra = total % self.n_chains;
        (0..self.n_chains)
            .map(|c| base + usize::from(c < extra))
            .collect()
    }

    /// Model evaluations spent by the chains of one stage.
    pub fn evaluations_per_stage(&self) -> u64 {
        self.chain_quotas()
            .into_iter()
            .filter(|&q| q > 0)
            .map(|q| (self.burn_in + q * self.thinning) as u64)
            .sum()
    }

    /// Parses a flat TOML key-value file; missing keys keep their defaults.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("flat config serializes")
    }
}
