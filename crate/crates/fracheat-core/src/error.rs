//! Error types shared across the crate.

use thiserror::Error;

/// Errors produced by the numerical routines.
#[derive(Debug, Error)]
pub enum Error {
    /// A parameter lies outside its admissible domain.
    #[error("invalid parameter {name}: {value} ({constraint})")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        constraint: &'static str,
    },

    /// A grid failed validation (ordering, coverage, degeneracy).
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    /// An exterior region failed validation.
    #[error("invalid exterior region: {0}")]
    InvalidRegion(String),

    /// Adaptive quadrature could not reach the requested tolerance.
    #[error("quadrature for {context} did not converge: achieved {achieved:.3e}, requested {requested:.3e}")]
    QuadratureFailure {
        context: &'static str,
        achieved: f64,
        requested: f64,
    },

    /// The integral is divergent for the requested parameters.
    #[error("divergent integral: {0}")]
    DivergentIntegral(String),

    /// The eigensolver failed to reach the requested residual.
    #[error("eigensolver did not converge: residual {residual:.3e} (tolerance {tolerance:.3e})")]
    EigenFailure { residual: f64, tolerance: f64 },

    /// Conjugate gradient failed to converge.
    #[error("conjugate gradient stopped after {iterations} iterations with relative residual {residual:.3e}")]
    CgFailure { iterations: usize, residual: f64 },

    /// A linear system was singular or not positive definite.
    #[error("singular or indefinite system: {0}")]
    SingularSystem(String),

    /// Principal-value evaluation requested at a point where it is unreliable.
    #[error("principal value unreliable at x = {x}: {reason}")]
    PrincipalValue { x: f64, reason: &'static str },

    /// Evaluation point rejected (wrong side of the domain, endpoint policy).
    #[error("evaluation point x = {x} rejected: {reason}")]
    InvalidPoint { x: f64, reason: &'static str },

    /// Series truncation remainder exceeded the requested tolerance.
    #[error("truncation remainder {estimate:.3e} exceeds tolerance {tolerance:.3e}")]
    TruncationRemainder { estimate: f64, tolerance: f64 },

    /// Two objects that must share a discretization do not.
    #[error("inconsistent inputs: {0}")]
    Mismatch(String),

    /// Cache file malformed or written by an incompatible version.
    #[error("cache format error: {0}")]
    CacheFormat(String),

    /// Underlying I/O failure.
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
