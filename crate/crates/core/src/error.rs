use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    /// A loss term became NaN (or infinite) during evaluation or training.
    #[error("numerical divergence in {term}{}", epoch.map(|e| format!(" at epoch {e}")).unwrap_or_default())]
    Divergence { term: String, epoch: Option<usize> },

    #[error("data error: {0}")]
    Data(String),

    /// Metric is undefined for the given labels (e.g. single-class AUC).
    #[error("undefined metric: {0}")]
    UndefinedMetric(String),

    /// A generated or loaded model specification is unusable
    /// (e.g. a precision matrix that fails its Cholesky factorization).
    #[error("invalid spec: {0}")]
    InvalidSpec(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub fn shape(msg: impl Into<String>) -> Self {
        Error::ShapeMismatch(msg.into())
    }

    pub fn data(msg: impl Into<String>) -> Self {
        Error::Data(msg.into())
    }
}
