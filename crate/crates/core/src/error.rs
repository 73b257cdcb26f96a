use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("non-finite state component at t = {t}")]
    NonFinite { t: f64 },

    #[error("spin norm drifted by {drift:e} at t = {t} (tolerance {tol:e})")]
    NormDrift { t: f64, drift: f64, tol: f64 },

    #[error("relaxation did not converge after {periods} periods (last change {last_change:e})")]
    NotConverged { periods: usize, last_change: f64 },

    #[error("record error: {0}")]
    Record(String),

    #[error("checkpoint spec hash mismatch: file has {found}, spec hashes to {expected}")]
    SpecMismatch { expected: String, found: String },

    #[error("checkpoint {path}: {msg}")]
    Checkpoint { path: PathBuf, msg: String },

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Errors caused by user input rather than by a failed computation.
    pub fn is_usage(&self) -> bool {
        matches!(
            self,
            Error::InvalidParameter(_) | Error::Config(_) | Error::Domain(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
