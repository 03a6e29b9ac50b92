use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A parameter lies outside the range where the model is defined.
    #[error("domain error: {0}")]
    Domain(String),

    /// Structurally invalid input (non-Bernoulli path, non-monotone map, ...).
    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("window too small: need half-width {needed}, have {have}")]
    WindowTooSmall { needed: i64, have: i64 },

    #[error("query ({x}, {y}) outside the certified region")]
    OutOfRegion { x: i64, y: i64 },

    #[error("row cap {cap} exceeded at column {column}")]
    CapExceeded { cap: i64, column: i64 },

    /// Enumeration or exact computation would be too large.
    #[error("resource limit: {0}")]
    Resource(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Invalid(msg.into()))
}
