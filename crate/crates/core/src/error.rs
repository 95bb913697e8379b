use thiserror::Error;

/// Errors produced anywhere in the preconditioner pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("index {index} out of range for dimension {len}")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("index list must be strictly ascending (violated at position {position})")]
    UnsortedIndices { position: usize },

    #[error("matrix is not symmetric at ({row}, {col})")]
    NotSymmetric { row: usize, col: usize },

    #[error("matrix is singular or numerically singular")]
    Singular,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("QUBO with {n_vars} variables exceeds the exhaustive-search cap of {cap}")]
    TooManyVariables { n_vars: usize, cap: usize },

    #[error("CG breakdown at iteration {iteration}: p^T K p = {value:e} (matrix not SPD)")]
    NotPositiveDefinite { iteration: usize, value: f64 },

    #[error("PCG breakdown at iteration {iteration}: r^T z = {value:e} (preconditioner not positive definite)")]
    IndefinitePreconditioner { iteration: usize, value: f64 },

    #[error("matrix market: {0}")]
    MatrixMarket(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
