//! Error type shared by every module in the crate.
//!
//! All arithmetic is exact, so errors are structural: a modulus that is not
//! prime, two values living over different primes, shape mismatches, and
//! inputs that violate a documented precondition. Computations that cannot
//! fail return plain values.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    /// The requested modulus is not a prime (or exceeds the supported range).
    #[error("{0} is not a supported prime modulus")]
    NotPrime(u64),

    /// Two values over different primes were combined.
    #[error("prime mismatch: {left} vs {right}")]
    PrimeMismatch { left: u32, right: u32 },

    /// Row/column/length mismatch between operands.
    #[error("dimension mismatch: {context}")]
    DimensionMismatch { context: String },

    /// A matrix expected to be nilpotent is not.
    #[error("matrix is not nilpotent of the required order")]
    NotNilpotent,

    /// A matrix expected to be invertible is singular.
    #[error("matrix is not invertible")]
    NotInvertible,

    /// A subspace argument is not contained where the operation requires it.
    #[error("subspace is not contained in the ambient argument: {context}")]
    NotSubspace { context: String },

    /// A structural invariant of a type was violated at construction.
    #[error("invariant violation: {context}")]
    InvariantViolation { context: String },

    /// An operation that is only defined on valid corestriction data was
    /// applied to a datum that fails the validity axioms.
    #[error("invalid corestriction datum: {context}")]
    InvalidDatum { context: String },

    /// Malformed or out-of-contract input (bad JSON shape, bad parameter).
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Helper for dimension errors built from a format string.
    pub fn dim(context: impl Into<String>) -> Self {
        Error::DimensionMismatch { context: context.into() }
    }
}
