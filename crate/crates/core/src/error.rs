use thiserror::Error;

use crate::problem::ValidationReport;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("fractional order alpha={0} must lie strictly inside (0, 1)")]
    InvalidAlpha(f64),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("level {level} out of range (allowed {min}..={max})")]
    LevelOutOfRange { level: usize, min: usize, max: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("zero pivot at row {row} in tridiagonal elimination; use the dense LU fallback")]
    ZeroPivot { row: usize },

    #[error("matrix is singular to working precision (column {column})")]
    Singular { column: usize },

    #[error("linear solve failed at time level {level}: {source}")]
    LinearSolve {
        level: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("problem validation failed: {0}")]
    Validation(ValidationReport),

    #[error("non-finite value from {what} at {location}")]
    NonFinite { what: &'static str, location: String },

    #[error(
        "L2-1sigma weights at level {level} are not strictly increasing (d[{index}]={lower} >= d[{next}]={upper})",
        next = index + 1
    )]
    WeightMonotonicity {
        level: usize,
        index: usize,
        lower: f64,
        upper: f64,
    },

    #[error("{0} is not a power of two")]
    NotPowerOfTwo(usize),

    #[error("unknown problem '{0}'")]
    UnknownProblem(String),

    #[error("problem '{0}' has no exact solution")]
    NoExactSolution(String),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization: {0}")]
    Serde(#[from] serde_json::Error),
}
