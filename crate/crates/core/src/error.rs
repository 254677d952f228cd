use thiserror::Error;

/// Errors raised by curve construction and pointwise evaluation.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DmtError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("invalid curve: {0}")]
    InvalidCurve(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}
