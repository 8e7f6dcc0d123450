use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("spectral gap violation: {0}")]
    GapViolation(String),
    #[error("domain error: {0}")]
    DomainError(String),
    #[error("unknown mode index {0}")]
    UnknownIndex(i64),
    #[error("product truncation bound {bound:.3e} exceeds tol; need about {required_modes} modes")]
    TruncationError { bound: f64, required_modes: usize },
    #[error("quadrature did not converge: {0}")]
    QuadratureNotConverged(String),
    #[error("degenerate division: {0}")]
    DivisionDegenerate(String),
    #[error("frequency tail not bounded: {0}")]
    TailNotBounded(String),
    #[error("precision insufficient: condition {condition:.3e} at {digits} digits")]
    PrecisionInsufficient { condition: f64, digits: u32 },
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("series did not converge: {0}")]
    SeriesNotConverged(String),
}

pub type Result<T> = std::result::Result<T, Error>;
