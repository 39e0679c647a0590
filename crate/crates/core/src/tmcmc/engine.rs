//! The staged tempering sampler, independent of the risk model.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::exponent::{solve_exponent_ln, weight_cov};
use super::proposal::{mh_step, ChainState, Proposal, StepBuffers};
use super::TmcmcConfig;
use crate::error::{Error, Result};
use crate::scalar::{log_sum_exp, Real};

/// Log-likelihood over the latent space. `-∞` marks zero likelihood.
pub trait LogLikelihood<T>: Sync {
    fn dim(&self) -> usize;
    fn ln_likelihood(&self, xi: &[T]) -> T;
}

impl<T, L: LogLikelihood<T> + ?Sized> LogLikelihood<T> for &L {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn ln_likelihood(&self, xi: &[T]) -> T {
        (**self).ln_likelihood(xi)
    }
}

/// Weight statistics of one tempering stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageDiagnostics {
    pub stage: usize,
    /// Exponent `q_j` reached by this stage.
    pub exponent: f64,
    pub mean_weight: f64,
    pub log_mean_weight: f64,
    pub weight_cov: f64,
    /// Fraction of accepted MH proposals across all chains.
    pub acceptance_rate: f64,
}

/// Result of a completed run.
#[derive(Debug, Clone)]
pub struct SamplerOutput<T> {
    /// `ln Π_j mean(w_j)`.
    pub log_evidence: f64,
    pub stages: Vec<StageDiagnostics>,
    /// Final-stage samples, row-major `samples_per_stage × dim`.
    pub final_samples: Vec<T>,
    pub final_ln_likelihood: Vec<T>,
    pub final_exponent: T,
    /// Likelihood calls made, including burn-in.
    pub evaluations: u64,
}

impl<T> SamplerOutput<T> {
    pub fn evidence(&self) -> f64 {
        self.log_evidence.exp()
    }
}

/// RNG stream for `(stage, chain)`; chain 0 is the stage-level stream
/// used for prior draws and resampling.
fn stream_rng(seed: u64, stage: usize, chain: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((stage as u64) << 32) | chain as u64);
    rng
}

fn evaluate_rows<T: Real, L: LogLikelihood<T> + ?Sized>(
    likelihood: &L,
    samples: &[T],
    dim: usize,
    n: usize,
) -> Vec<T> {
    if dim == 0 {
        let v = likelihood.ln_likelihood(&[]);
        return vec![v; n];
    }
    samples
        .par_chunks(dim)
        .map(|x| likelihood.ln_likelihood(x))
        .collect()
}

/// Runs the sampler and returns the evidence estimate with the
/// final-stage population.
///
/// Fails with [`Error::ZeroLikelihoodPrior`] if every prior sample has zero
/// likelihood and with [`Error::MaxStagesExceeded`] if the exponent does not
/// reach one within `max_stages`.
pub fn run_sampler<T, L>(likelihood: &L, config: &TmcmcConfig) -> Result<SamplerOutput<T>>
where
    T: Real,
    L: LogLikelihood<T> + ?Sized,
{
    config.validate()?;
    let dim = likelihood.dim();
    let n = config.samples_per_stage;
    let scale = T::lit(config.proposal_scale);
    let ninf = T::neg_infinity();

    let mut rng = stream_rng(config.seed, 0, 0);
    let mut samples: Vec<T> = (0..n * dim)
        .map(|_| T::sample_standard_normal(&mut rng))
        .collect();
    let mut ln_l = evaluate_rows(likelihood, &samples, dim, n);
    let mut evaluations = n as u64;
    if ln_l.iter().all(|&l| l == ninf) {
        return Err(Error::ZeroLikelihoodPrior { samples: n });
    }

    let ln_n = T::from_usize(n).unwrap().ln();
    let quotas = config.chain_quotas();
    let n_direct = config.resample_count();
    let mut q_prev = T::zero();
    let mut log_evidence = 0.0f64;
    let mut stages = Vec::new();

    for stage in 1..=config.max_stages {
        let q = solve_exponent_ln(&ln_l, q_prev, T::lit(config.cov_target));
        let dq = q - q_prev;
        let ln_w: Vec<T> = ln_l
            .iter()
            .map(|&l| if l == ninf { ninf } else { dq * l })
            .collect();
        let log_mean_w = log_sum_exp(&ln_w) - ln_n;
        log_evidence += log_mean_w.as_f64();
        let max_ln_w = ln_w.iter().copied().fold(ninf, T::max);
        let w: Vec<T> = ln_w.iter().map(|&x| (x - max_ln_w).exp()).collect();
        let cov = weight_cov(&ln_l, dq);

        let proposal = if dim == 0 {
            Proposal::isotropic(0, scale)
        } else {
            Proposal::from_weighted_samples(&samples, dim, &w, scale)
        };
        let index = WeightedIndex::new(w.iter().map(|x| x.as_f64()))
            .map_err(|e| Error::State(format!("stage {stage} weights: {e}")))?;
        let mut rng = stream_rng(config.seed, stage, 0);
        let direct: Vec<usize> = (0..n_direct).map(|_| index.sample(&mut rng)).collect();
        let chain_seeds: Vec<usize> = quotas.iter().map(|_| index.sample(&mut rng)).collect();

        let chains: Vec<(Vec<T>, Vec<T>, u64, u64)> = quotas
            .par_iter()
            .zip(chain_seeds.par_iter())
            .enumerate()
            .map(|(c, (&quota, &start))| {
                if quota == 0 {
                    return (Vec::new(), Vec::new(), 0, 0);
                }
                let mut rng = stream_rng(config.seed, stage, c + 1);
                let mut st = ChainState::new(
                    samples[start * dim..(start + 1) * dim].to_vec(),
                    ln_l[start],
                );
                let mut buf = StepBuffers::new(dim);
                let mut accepted = 0u64;
                let mut steps = 0u64;
                let mut step = |st: &mut ChainState<T>, rng: &mut ChaCha8Rng| {
                    steps += 1;
                    if mh_step(st, q, likelihood, &proposal, rng, &mut buf) {
                        accepted += 1;
                    }
                };
                for _ in 0..config.burn_in {
                    step(&mut st, &mut rng);
                }
                let mut xs = Vec::with_capacity(quota * dim);
                let mut ls = Vec::with_capacity(quota);
                for _ in 0..quota {
                    for _ in 0..config.thinning {
                        step(&mut st, &mut rng);
                    }
                    xs.extend_from_slice(&st.xi);
                    ls.push(st.ln_likelihood);
                }
                (xs, ls, accepted, steps)
            })
            .collect();

        let mut next_samples = Vec::with_capacity(n * dim);
        let mut next_ln_l = Vec::with_capacity(n);
        for &k in &direct {
            next_samples.extend_from_slice(&samples[k * dim..(k + 1) * dim]);
            next_ln_l.push(ln_l[k]);
        }
        let (mut accepted, mut steps) = (0u64, 0u64);
        for (xs, ls, a, s) in chains {
            next_samples.extend(xs);
            next_ln_l.extend(ls);
            accepted += a;
            steps += s;
        }
        evaluations += steps;
        samples = next_samples;
        ln_l = next_ln_l;

        stages.push(StageDiagnostics {
            stage,
            exponent: q.as_f64(),
            mean_weight: log_mean_w.as_f64().exp(),
            log_mean_weight: log_mean_w.as_f64(),
            weight_cov: cov.as_f64(),
            acceptance_rate: if steps == 0 {
                0.0
            } else {
                accepted as f64 / steps as f64
            },
        });
        q_prev = q;
        if q >= T::one() {
            return Ok(SamplerOutput {
                log_evidence,
                stages,
                final_samples: samples,
                final_ln_likelihood: ln_l,
                final_exponent: q,
                evaluations,
            });
        }
    }
    Err(Error::MaxStagesExceeded {
        max_stages: config.max_stages,
        last_exponent: q_prev.as_f64(),
        stages,
    })
}
