//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    /// Malformed descriptor or spec shape (non-monotone breakpoints, missing
    /// hazard entries, length mismatches). Distinct from model invariant
    /// violations, which are collected into a `ValidationReport`.
    #[error("structural error: {0}")]
    Structural(String),

    /// A precondition of an operation was not met.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// A measure change failed its invariants against the base model.
    #[error("invalid measure change at {location}: {reason}")]
    InvalidChange { location: String, reason: String },

    /// The target measure puts switching intensity where the base measure
    /// has none, so no equivalent change exists.
    #[error("inaccessible measure: {0}")]
    InaccessibleMeasure(String),

    /// The requested operation has no answer in its domain (e.g. the Esscher
    /// transform on a vanishing-volatility regime).
    #[error("domain error: {0}")]
    Domain(String),

    /// Volterra solvers require bounded kernels; a hazard with a negative
    /// power-law exponent makes the renewal kernel unbounded at the origin.
    #[error("unbounded kernel: {0}")]
    UnboundedKernel(String),

    /// Safety cap on the number of switches per simulated path.
    #[error("path exceeded {cap} switches before t={time}")]
    SwitchCapExceeded { cap: u64, time: f64 },

    /// Iterative solver failed to converge; carries the best iterate found.
    #[error("no convergence after {iterations} iterations (best point {best:?}, gradient norm {gradient_norm:.3e})")]
    NonConvergence {
        iterations: usize,
        best: [f64; 2],
        gradient_norm: f64,
    },
}
