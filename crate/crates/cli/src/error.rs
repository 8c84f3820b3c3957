use std::path::PathBuf;

use l1fit::FitError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot write output: {0}")]
    Output(#[from] std::io::Error),
    /// `row` and `col` are 1-based file positions.
    #[error("parse error at row {row}, column {col}: {message}")]
    Parse { row: usize, col: usize, message: String },
    #[error("malformed input: {0}")]
    Malformed(String),
    #[error("invalid input: {0}")]
    Validation(String),
    #[error("certification failed: {0}")]
    Certification(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Certification(_) => 1,
            CliError::Io { .. } | CliError::Output(_) => 2,
            CliError::Parse { .. } | CliError::Malformed(_) => 3,
            CliError::Validation(_) => 4,
        }
    }
}

impl From<FitError> for CliError {
    fn from(e: FitError) -> Self {
        match e {
            FitError::CertificateInfeasible(msg) => CliError::Certification(msg),
            other => CliError::Validation(other.to_string()),
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
