use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("unknown language tag `{0}`")]
    UnknownLanguage(String),

    #[error("service error (status {status:?}): {message}")]
    Service { status: Option<u16>, message: String },

    #[error("service request timed out after {timeout_ms} ms")]
    Timeout { timeout_ms: u64 },

    #[error("masked-language-model scorer needs an initialized encoder")]
    MissingEncoder,

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("non-finite loss at epoch {epoch}, example {example}: {value}")]
    NonFiniteLoss {
        epoch: usize,
        example: String,
        value: f64,
    },
}

/// Coarse failure class, used by the command-line front end to pick an exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Usage,
    Data,
    Service,
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn parse(path: impl Into<PathBuf>, line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            message: message.into(),
        }
    }

    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Service { .. } | Error::Timeout { .. } => ErrorKind::Service,
            Error::UnknownLanguage(_) => ErrorKind::Usage,
            _ => ErrorKind::Data,
        }
    }
}
