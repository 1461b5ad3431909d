//! Sparse phase retrieval through semidefinite lifting.
//!
//! Recovers a k-sparse signal x0 from quadratic measurements
//! `b_i = |<a_i, x0>|^2 + w_i` by minimizing
//!
//! ```text
//! lambda (Tr(X) - ||X||_F) + mu ||X||_1 + 1/2 ||A(X) - b||_2^2
//! ```
//!
//! over the cone of positive semidefinite Hermitian matrices, where
//! `A(X) = (a_1* X a_1, ..., a_m* X a_m)` is the lifting map. The
//! trace-minus-Frobenius penalty vanishes exactly on rank-one PSD matrices,
//! so minimizers concentrate near X = x x* and the signal is read off from
//! the top eigenpair.
//!
//! The outer loop ([`dca`]) linearizes the concave `-lambda ||X||_F` term and
//! each convex subproblem is solved by a three-block consensus ADMM
//! ([`admm`]) whose per-iteration cost is one regularized least-squares solve
//! (accelerated by an m x m Woodbury factorization), one entrywise
//! soft-threshold and one projection onto the PSD cone.

pub mod admm;
pub mod dca;
pub mod error;
pub mod hermitian;
pub mod io;
pub mod measurement;
pub mod synth;

pub use error::{LiftoffError, Result};
pub use hermitian::{phase_aligned_distance, ComplexVector, HermitianMatrix, MatrixNorms};
pub use measurement::{GramCache, MeasurementEnsemble, RipProbeReport};

/// Scalar field of the signal and measurement vectors.
///
/// A single complex implementation serves both cases; the flag only changes
/// data generation and the phase-ambiguity metric (sign flip vs. full
/// unimodular circle).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Field {
    Real,
    Complex,
}

impl std::fmt::Display for Field {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Field::Real => write!(f, "real"),
            Field::Complex => write!(f, "complex"),
        }
    }
}

impl std::str::FromStr for Field {
    type Err = LiftoffError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "real" => Ok(Field::Real),
            "complex" => Ok(Field::Complex),
            other => Err(LiftoffError::Parse(format!(
                "unknown field `{other}` (expected `real` or `complex`)"
            ))),
        }
    }
}
