use thiserror::Error;

/// Errors raised across the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("invalid layout: {0}")]
    Layout(String),
    #[error("state is not normalized (norm {0})")]
    NotNormalized(f64),
    #[error("matrix is not Hermitian (max deviation {0:e})")]
    NotHermitian(f64),
    #[error("matrix is not unitary (max deviation {0:e})")]
    NotUnitary(f64),
    #[error("invalid density operator: {0}")]
    InvalidDensity(String),
    #[error("kind mismatch: {0}")]
    KindMismatch(String),
    #[error("partial trace needs a nonempty keep set")]
    EmptyKeepSet,
    #[error("argument out of range: {0}")]
    OutOfRange(String),
    #[error("invalid ensemble: {0}")]
    InvalidEnsemble(String),
    #[error("invalid script: {0}")]
    InvalidScript(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
