use std::path::PathBuf;

use thiserror::Error;

/// Process exit codes.
pub mod exit {
    pub const OK: i32 = 0;
    pub const USAGE: i32 = 1;
    pub const INPUT: i32 = 2;
    pub const ENDPOINT: i32 = 3;
}

#[derive(Debug, Error)]
pub enum AppError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
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
    #[error("{0}")]
    Data(String),
    #[error("endpoint unreachable: {0}")]
    EndpointUnreachable(String),
}

impl AppError {
    pub fn exit_code(&self) -> i32 {
        match self {
            AppError::Usage(_) => exit::USAGE,
            AppError::Io { .. } | AppError::Parse { .. } | AppError::Data(_) => exit::INPUT,
            AppError::EndpointUnreachable(_) => exit::ENDPOINT,
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        AppError::Io {
            path: path.into(),
            source,
        }
    }

    pub fn parse(path: impl Into<PathBuf>, line: usize, message: impl ToString) -> Self {
        AppError::Parse {
            path: path.into(),
            line,
            message: message.to_string(),
        }
    }

    pub fn data(message: impl ToString) -> Self {
        AppError::Data(message.to_string())
    }
}

pub type Result<T, E = AppError> = std::result::Result<T, E>;
