use crate::ring::RingError;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error(transparent)]
    Ring(#[from] RingError),
    #[error("chart mismatch: {0}")]
    ChartMismatch(String),
    #[error("arity mismatch: expected {expected}, got {got}")]
    ArityMismatch { expected: usize, got: usize },
    #[error("not a Jacobi structure: {0}")]
    NotJacobi(String),
    #[error("not invertible: {0}")]
    NotInvertible(String),
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("malformed input: {0}")]
    Malformed(String),
    #[error("invariant violated: {0}")]
    Invariant(String),
}

pub type Result<T> = std::result::Result<T, Error>;
