//! Exact coefficient ring: Fourier polynomials over Q(i) on `T^k x R^m`.

mod chart;
mod expr;
mod gaussian;
mod scalar;

pub use chart::Chart;
pub use expr::{format_fn, format_torus_integral, parse_fn, scalar_from_json, scalar_to_json};
pub use gaussian::{rational_to_string, GaussianRational};
pub use scalar::{ArithOp, Mono, ScalarFn, TorusIntegral};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RingError {
    #[error("invalid chart: {0}")]
    InvalidChart(String),
    #[error("unknown coordinate `{0}`")]
    UnknownCoordinate(String),
    #[error("chart mismatch: {left:?} vs {right:?}")]
    ChartMismatch { left: (usize, usize), right: (usize, usize) },
    #[error("bad substitution: {0}")]
    Substitution(String),
    #[error("parse error at {pos}: {msg}")]
    Parse { pos: usize, msg: String },
    #[error("malformed JSON: {0}")]
    Json(String),
}
