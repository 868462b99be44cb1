use std::path::PathBuf;

use exvivo_core::CoreError;
use thiserror::Error;

pub type Result<T> = core::result::Result<T, AppError>;

#[derive(Debug, Error)]
pub enum AppError {
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Nifti { path: PathBuf, message: String },
    #[error("{path}: {message}")]
    Csv { path: PathBuf, message: String },
    #[error("invalid config: {0}")]
    Config(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl AppError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        AppError::Io { path: path.into(), source }
    }

    pub fn nifti(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        AppError::Nifti { path: path.into(), message: message.into() }
    }

    pub fn csv(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        AppError::Csv { path: path.into(), message: message.into() }
    }
}
