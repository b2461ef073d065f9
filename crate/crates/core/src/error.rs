use thiserror::Error;

/// Errors produced by distribution construction, queries and the verifier.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("invalid variable space: {0}")]
    InvalidSpace(String),

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("usage error: {0}")]
    Usage(String),

    #[error("value not present in space: {0}")]
    UnknownValue(String),

    #[error("configuration error: {0}")]
    Configuration(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("undefined: {0}")]
    Undefined(String),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
