use std::path::PathBuf;

use specsolve_core::SpectralError;
use thiserror::Error;

use crate::expr::{EvalError, ParseError};
use crate::problem_file::FormatError;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Format(#[from] FormatError),

    #[error("{0}")]
    Eval(#[from] EvalError),

    #[error("{0}")]
    Spectral(#[from] SpectralError),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("{0}")]
    Usage(String),

    /// One or more reproduction criteria failed.
    #[error("{0}")]
    Criteria(String),
}

impl From<ParseError> for CliError {
    fn from(e: ParseError) -> Self {
        CliError::Format(e.into())
    }
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    /// 2 for malformed input, 1 for solver and criterion failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Format(_) | CliError::Io { .. } | CliError::Usage(_) => 2,
            CliError::Eval(_) | CliError::Spectral(_) | CliError::Criteria(_) => 1,
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
