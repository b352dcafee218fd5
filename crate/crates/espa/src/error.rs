use std::path::PathBuf;

use espa_core::EspaError;

/// Errors from the harness, the file formats and the command line.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Core(#[from] EspaError),
    #[error(transparent)]
    Config(#[from] crate::config::ConfigError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },
    #[error("{0}")]
    Data(String),
    #[error("{0}")]
    Usage(String),
    #[error("every grid cell failed; first error: {message}")]
    AllCellsFailed { message: String, class: ErrorClass },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Failure classes, mapped to process exit codes by the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Usage,
    Data,
    Numerical,
}

impl ErrorClass {
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorClass::Usage => 1,
            ErrorClass::Data => 2,
            ErrorClass::Numerical => 3,
        }
    }
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        Error::Format {
            path: path.into(),
            message: message.into(),
        }
    }

    pub fn class(&self) -> ErrorClass {
        match self {
            Error::Core(EspaError::NonFinite | EspaError::AllRestartsFailed(_)) => {
                ErrorClass::Numerical
            }
            Error::Core(EspaError::InvalidParameter { .. }) => ErrorClass::Usage,
            Error::Core(_) => ErrorClass::Data,
            Error::Config(_) | Error::Usage(_) => ErrorClass::Usage,
            Error::Io { .. } | Error::Format { .. } | Error::Data(_) => ErrorClass::Data,
            Error::AllCellsFailed { class, .. } => *class,
        }
    }
}
