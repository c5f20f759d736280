use thiserror::Error;

/// Errors raised across the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("Gegenbauer recurrence overflow at degree {degree} (|C| > 1e300)")]
    Overflow { degree: u32 },

    #[error("degenerate weight scheme: every weight vanishes for d = {dim}")]
    DegenerateScheme { dim: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("row {row}: {reason}")]
    InvalidRow { row: usize, reason: String },

    #[error("matrix is not positive definite (pivot {pivot})")]
    NotPositiveDefinite { pivot: usize },

    #[error("estimation failed: {0}")]
    Estimation(String),

    #[error("quadrature did not converge: {0}")]
    Quadrature(String),

    #[error("replicate {replicate}: {source}")]
    Replicate {
        replicate: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("scenario: {0}")]
    Scenario(String),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
