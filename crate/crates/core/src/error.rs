use thiserror::Error;

use crate::tmcmc::StageDiagnostics;

/// Errors raised across the crate.
#[derive(Debug, Error)]
pub enum Error {
    /// Bad caller input: unknown node, dimension mismatch, non-positive
    /// attributes and similar.
    #[error("input error: {0}")]
    Input(String),

    /// Inconsistent or unsupported model configuration.
    #[error("configuration error: {0}")]
    Config(String),

    /// Operation invoked in the wrong lifecycle state.
    #[error("state error: {0}")]
    State(String),

    /// Malformed file contents. `line` is 1-based and counts the header.
    #[error("parse error in {source_name} at line {line}: {message}")]
    Parse {
        source_name: String,
        line: usize,
        message: String,
    },

    /// Every prior sample had zero consequence while some failure state
    /// carries a positive one.
    #[error(
        "zero-likelihood prior: all {samples} stage-0 samples have zero consequence; \
         increase samples_per_stage"
    )]
    ZeroLikelihoodPrior { samples: usize },

    /// The sampler hit `max_stages` before the exponent reached one.
    #[error("tempering did not reach q = 1 within {max_stages} stages (last q = {last_exponent})")]
    MaxStagesExceeded {
        max_stages: usize,
        last_exponent: f64,
        stages: Vec<StageDiagnostics>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn input(msg: impl Into<String>) -> Error {
    Error::Input(msg.into())
}
