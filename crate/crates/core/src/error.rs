use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("index {index} out of range for dimension {dim}")]
    IndexOutOfRange { index: usize, dim: usize },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("invalid weights: {0}")]
    InvalidWeights(String),

    #[error("cardinality cap exceeded: more than {cap} indices ({context})")]
    CardinalityCap { cap: usize, context: String },

    #[error("prime search window exhausted: no {needed} admissible primes in ({start}, {end}]")]
    PrimeWindow { start: u64, end: u64, needed: usize },

    #[error("hyperbolic cross needs at least 2 elements, found {0}")]
    CrossTooSmall(usize),

    #[error("plan does not match cross: {0}")]
    PlanMismatch(String),

    #[error("resource cap exceeded: {0}")]
    ResourceCap(String),

    #[error("invalid lattice: {0}")]
    InvalidLattice(String),

    #[error("i/o failure: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
