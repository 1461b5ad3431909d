//! Crate-wide error type.

use thiserror::Error;

/// Errors surfaced by the solver stack.
#[derive(Debug, Error)]
pub enum LiftoffError {
    /// Operands with incompatible dimensions were combined.
    #[error("dimension mismatch: {context}")]
    DimensionMismatch { context: String },

    /// A solver or generator configuration violates its invariants.
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    /// The dense Hermitian eigendecomposition did not converge.
    #[error("eigendecomposition failed on a {dim}x{dim} Hermitian matrix")]
    EigFailure { dim: usize },

    /// Cholesky factorization of the regularized Gram matrix failed.
    #[error("gram factorization failed: {0}")]
    FactorizationFailure(String),

    /// A `GramCache` built for one penalty value was used with another.
    #[error("stale gram cache: built for delta={cache_delta}, caller expects delta={expected}")]
    StaleCache { cache_delta: f64, expected: f64 },

    /// Iterates became non-finite.
    #[error("solver diverged at inner iteration {iter}")]
    Diverged { iter: usize },

    /// A serialized ensemble or instance could not be parsed.
    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, LiftoffError>;
