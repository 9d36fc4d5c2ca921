//! Error type shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimMismatch(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("invalid density matrix: {0}")]
    InvalidDensity(String),
    #[error("no steady state: {0}")]
    NoSteadyState(String),
    #[error("steady state carries no monitored emission")]
    ZeroEmission,
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
