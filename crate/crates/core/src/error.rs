use thiserror::Error;

/// Errors raised by grid construction, metric evaluation, and the checkers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: String, reason: String },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("metric is not positive definite at point {index} (|z| = {radius:e})")]
    NotPositiveDefinite { index: usize, radius: f64 },

    #[error("singular matrix at point {index} (|z| = {radius:e})")]
    Singular { index: usize, radius: f64 },

    #[error("point {index} maps outside the target domain ({reason})")]
    OutsideDomain { index: usize, reason: String },

    #[error("curvature bound `{bound}` not certified: {detail} at point {index} (|z| = {radius:e})")]
    Uncertified {
        bound: String,
        detail: String,
        index: usize,
        radius: f64,
    },

    #[error("not enough refinement levels: need at least 3, got {0}")]
    TooFewLevels(usize),

    #[error("config error in `{field}`: {reason}")]
    Config { field: String, reason: String },

    #[error("io error: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn param(name: &str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name: name.to_string(),
            reason: reason.into(),
        }
    }

    pub(crate) fn config(field: &str, reason: impl Into<String>) -> Self {
        Error::Config {
            field: field.to_string(),
            reason: reason.into(),
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
