use thiserror::Error;

use crate::set::Violation;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EtopeError {
    #[error("invalid ellipsotope: {}", join(.0))]
    Invalid(Vec<Violation>),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("norm order mismatch: {0} vs {1}")]
    NormMismatch(String, String),

    #[error("invalid norm order {0}: must exceed 1")]
    InvalidNorm(String),

    #[error("matrix is not symmetric positive definite: {0}")]
    NotPositiveDefinite(String),

    #[error("rank deficient: {0}")]
    RankDeficient(String),

    #[error("set is empty: {0}")]
    EmptySet(String),

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("solver did not converge: {0}")]
    NoConvergence(String),

    #[error("not contained: {0}")]
    NotContained(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("I/O error: {0}")]
    Io(String),

    #[error("malformed JSON: {0}")]
    Json(String),

    /// A document that parses as JSON but does not match the exchange schema.
    #[error("schema error at {pointer}: {message}")]
    Schema { pointer: String, message: String },
}

fn join(v: &[Violation]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("; ")
}

pub type Result<T, E = EtopeError> = std::result::Result<T, E>;
