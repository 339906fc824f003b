//! Crate-wide error type.

use thiserror::Error;

/// Errors surfaced by the engine.
#[derive(Debug, Error)]
pub enum Error {
    /// Malformed caller input (non-finite data, bad dimension, bad parameter).
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A mesh with no interior degrees of freedom.
    #[error("empty space: mesh has no interior nodes")]
    EmptySpace,

    /// Assembly produced a matrix violating a structural requirement.
    #[error("assembly error: {reason} (smallest eigenvalue {smallest_eig:e})")]
    Assembly { reason: String, smallest_eig: f64 },

    /// An iterative solver ran out of iterations.
    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    NoConvergence {
        iterations: usize,
        residual: f64,
        /// Last iterate, for diagnostics.
        last: Vec<f64>,
    },

    /// A splitting with near-zero modes where a hyperbolic one is required.
    #[error("degenerate splitting: near-zero eigenvalues {near_zero:?}")]
    Degenerate { near_zero: Vec<f64> },

    /// Flow-field construction could not separate critical neighborhoods.
    #[error("flow construction error: {0}")]
    FlowConstruction(String),

    /// Adaptive integrator step size underflowed.
    #[error("integrator error: step size underflow at t = {t:e}")]
    StepUnderflow { t: f64 },

    /// A boundary-operator entry is missing.
    #[error("incomplete data: missing parity for pair ({hi}, {lo})")]
    IncompleteParity { hi: usize, lo: usize },

    /// The assembled chain complex fails the boundary identity.
    #[error("integrity error: boundary composition nonzero between degrees {k} and {}", k + 1)]
    BoundarySquareNonzero { k: usize },

    /// Declared growth metadata contradicts the numeric scan.
    #[error("classification conflict: {0}")]
    ClassificationConflict(String),

    /// Generic numerical breakdown (bracketing, sampling, eigensolve).
    #[error("numerical error: {0}")]
    Numerical(String),

    /// Configuration file violates the schema.
    #[error("config error: {0}")]
    Config(String),
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
