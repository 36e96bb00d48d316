//! Experiment harness for the mixed linear equation solver: deterministic
//! seeded trial runners, file formats, and report emission. The `mixlin`
//! binary exposes the `gen`, `solve`, `trace` and `grid` subcommands on top
//! of this library.

pub mod config;
pub mod experiments;
pub mod report;
pub mod schema;

use std::path::PathBuf;

/// Errors surfaced by the harness, classified by CLI exit code:
/// bad arguments exit 1, numerical failures exit 2, IO failures exit 3.
#[derive(Debug, thiserror::Error)]
pub enum AppError {
    #[error("{0}")]
    BadArgs(String),
    #[error("numerical failure: {0}")]
    Numerical(mixlin_core::Error),
    #[error("io failure on {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl AppError {
    pub fn exit_code(&self) -> i32 {
        match self {
            AppError::BadArgs(_) => 1,
            AppError::Numerical(_) => 2,
            AppError::Io { .. } => 3,
        }
    }

    pub fn io(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> AppError {
        let path = path.into();
        move |source| AppError::Io { path, source }
    }
}

impl From<mixlin_core::Error> for AppError {
    fn from(err: mixlin_core::Error) -> Self {
        match err {
            mixlin_core::Error::RankDeficient { .. }
            | mixlin_core::Error::DecompositionFailure { .. } => AppError::Numerical(err),
            other => AppError::BadArgs(other.to_string()),
        }
    }
}

pub type AppResult<T> = Result<T, AppError>;
