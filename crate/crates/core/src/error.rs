use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("unsupported input: {0}")]
    Unsupported(String),

    #[error("numerical failure: {message} (partial estimate {partial})")]
    Numerical { message: String, partial: f64 },

    #[error("calibration failed: {0}")]
    Calibration(String),

    #[error("usage error: {0}")]
    Usage(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn usage(msg: impl Into<String>) -> Self {
        Error::Usage(msg.into())
    }

    /// Process exit code: 2 for bad input, 3 for numerical or calibration
    /// failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Domain(_) | Error::Unsupported(_) | Error::Usage(_) | Error::Parse { .. } => 2,
            Error::Precondition(_)
            | Error::Degenerate(_)
            | Error::Numerical { .. }
            | Error::Calibration(_) => 3,
        }
    }

    pub(crate) fn numerical(msg: impl Into<String>, partial: f64) -> Self {
        Error::Numerical {
            message: msg.into(),
            partial,
        }
    }
}
