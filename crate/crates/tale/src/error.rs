use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum AppError {
    /// Unreadable, malformed or invalid config.
    #[error("config {}: {message}", path.display())]
    Config { path: PathBuf, message: String },
    /// A data file (fixture, trials) that parses but does not make sense.
    #[error("{}: {message}", path.display())]
    Data { path: PathBuf, message: String },
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid arguments: {0}")]
    Usage(String),
    #[error(transparent)]
    Model(#[from] tale_core::Error),
    #[error("{failed} of {total} cases failed")]
    CaseFailures { failed: usize, total: usize },
}

impl AppError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        AppError::Io {
            path: path.into(),
            source,
        }
    }

    pub fn config(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        AppError::Config {
            path: path.into(),
            message: message.into(),
        }
    }

    /// 0 success, 1 case failure, 2 config error, 3 I/O error.
    pub fn exit_code(&self) -> i32 {
        match self {
            AppError::Model(_) | AppError::CaseFailures { .. } => 1,
            AppError::Config { .. } | AppError::Data { .. } | AppError::Usage(_) => 2,
            AppError::Io { .. } => 3,
        }
    }
}
