use thiserror::Error;

/// Errors produced anywhere in the clustering pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("invalid cluster assignment: {0}")]
    InvalidAssignment(String),

    #[error("invalid adjacency matrix: {0}")]
    InvalidAdjacency(String),

    #[error("entry ({row}, {col}) = {value} lies outside the box [0, 1]")]
    Infeasible { row: usize, col: usize, value: f64 },

    #[error("solver diverged: non-finite value at iteration {iteration}")]
    NonFinite { iteration: usize },

    #[error("matrix decomposition failed: {0}")]
    Decomposition(String),

    #[error("degenerate spectrum: {0}")]
    DegenerateSpectrum(String),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn params(msg: impl Into<String>) -> Self {
        Error::InvalidParams(msg.into())
    }

    pub(crate) fn parse(line: usize, msg: impl Into<String>) -> Self {
        Error::Parse { line, message: msg.into() }
    }
}
