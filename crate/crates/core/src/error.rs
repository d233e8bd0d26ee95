use thiserror::Error;

/// Library-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    /// Argument outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Invalid or inconsistent configuration.
    #[error("config error: {0}")]
    Config(String),

    /// Field length does not match the grid it is used with.
    #[error("grid mismatch: field has {found} nodes, grid has {expected}")]
    GridMismatch { expected: usize, found: usize },

    /// Evaluation at a coordinate singularity.
    #[error("singular evaluation: {0}")]
    Singular(String),

    /// Operation not defined for this catalog entry.
    #[error("unsupported: {0}")]
    Unsupported(String),

    /// A candidate profile failed its admissibility precondition.
    #[error("candidate rejected: {0}")]
    CandidateRejected(String),

    /// The mountain-pass ring condition could not be verified.
    #[error("ring condition failed: {0}")]
    RingCondition(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
