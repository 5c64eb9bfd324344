//! Error type shared across the library.

use thiserror::Error;

#[derive(Error, Debug)]
pub enum Error {
    /// The jittered kernel matrix is not numerically positive definite.
    /// The sampler treats this as a rejected proposal rather than a fatal
    /// condition.
    #[error("Cholesky factorization of the jittered kernel matrix failed")]
    FactorizationFailure,

    /// Matrix or vector shapes do not line up.
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    /// An input column has zero sample variance, so no lengthscale can be
    /// initialized from it.
    #[error("input column {column} is constant; cannot initialize a lengthscale from it")]
    DegenerateDesign { column: usize },

    /// No posterior samples remain after burn-in and thinning.
    #[error("no samples retained after burn-in/thinning")]
    EmptyChain,

    /// A per-dimension (low, high) pair is unusable for scaling.
    #[error("invalid bounds for dimension {dimension}: ({low}, {high})")]
    InvalidBounds {
        dimension: usize,
        low: f64,
        high: f64,
    },

    /// A configuration value is outside its documented domain.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// Lengthscale index out of range.
    #[error("lengthscale index {index} out of range for dimension {dimension}")]
    IndexOutOfRange { index: usize, dimension: usize },

    /// A predictive variance passed to the scorer is negative.
    #[error("negative predictive variance {value} at position {index}")]
    NegativeVariance { index: usize, value: f64 },

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    /// A data file row could not be parsed at all (e.g. wrong shape).
    #[error("malformed row at line {line}")]
    MalformedRow { line: usize },

    /// A field that should be numeric did not parse as a number.
    #[error("non-numeric field '{field}' at line {line}, column {column}")]
    NonNumericField {
        line: usize,
        column: usize,
        field: String,
    },

    /// A data file has fewer columns than the requested layout needs.
    #[error("line {line} has {found} columns, need at least {required}")]
    TooFewColumns {
        line: usize,
        found: usize,
        required: usize,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
