use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("sample index {i} outside 1..={t}")]
    IndexOutOfRange { i: usize, t: usize },

    #[error("time index must be at least 1")]
    ZeroTime,

    #[error("invalid `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("objective has not absorbed any samples")]
    EmptyObjective,

    #[error("unsupported operation: {0}")]
    Unsupported(String),

    #[error("custom weights at t={t} are invalid: {reason}")]
    InvalidWeights { t: usize, reason: String },

    #[error("tracker is at t={state} but objective is at t={objective}")]
    TimeMismatch { state: usize, objective: usize },

    #[error("I/O error: {0}")]
    Io(String),

    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("horizon mismatch: series has {series} points, envelope has {envelope}")]
    HorizonMismatch { series: usize, envelope: usize },
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
