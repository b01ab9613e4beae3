use thiserror::Error;

/// Errors produced by the tentflow library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("time grid does not cover the required range: {0}")]
    TimeCoverage(String),
    /// A lemma-style hypothesis was violated; the message cites it.
    #[error("hypothesis violated: {0}")]
    Hypothesis(String),
    #[error("non-finite values encountered: {0}")]
    NonFinite(String),
    #[error("characteristic back-trace exceeded the per-step excursion cap: {0}")]
    Cfl(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("malformed checkpoint: {0}")]
    Checkpoint(String),
}

pub type Result<T> = std::result::Result<T, Error>;
