//! Numerical toolkit for jump-diffusion processes with regime switching at
//! the renewal times of a semi-Markov process.
//!
//! The process is `X(t) = T^c(t) + N^h(t) + W^σ(t)`: a generalised telegraph
//! trend, a pure-jump part with jumps `h_i` at the switch times, and a
//! Wiener integral of the switching volatility. The crate provides:
//!
//! - [`model`] — model/measure-change specifications, the semi-Markov hazard
//!   machinery, validation, and the Girsanov transform;
//! - [`simulate`] — exact path simulation, Radon–Nikodým weights, and
//!   reproducible Monte Carlo estimators;
//! - [`volterra`] — renewal-type Volterra solvers for the moment functions
//!   `μ_i(t)`, their conditional versions, and the relative-entropy
//!   functions `H_i(t)`, plus the two-state constant-parameter closed form;
//! - [`measures`] — martingale-measure characterisation, the regime-switching
//!   Esscher transform, and the unique jump-telegraph measure;
//! - [`memm`] — minimal-entropy martingale measures for the two-state
//!   constant-parameter Markov model (short-term, long-term, fixed-horizon,
//!   and the degenerate single-regime case).

pub mod descriptor;
pub mod error;
pub mod measures;
pub mod memm;
pub mod model;
pub mod numeric;
pub mod simulate;
pub mod volterra;

pub use descriptor::{Descriptor, TabulationGrid};
pub use error::{Error, Result};
pub use model::{
    apply_girsanov, check_martingale_condition, measure_change_from_intensities, validate_change,
    validate_model, CheckConfig, HazardEntry, MartingaleCheck, MeasureChangeSpec, ModelSpec,
    RegimeTriplet, ValidationReport,
};
