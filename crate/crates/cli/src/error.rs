use nahm_core::{ErrorClass, NahmError};
use serde::Serialize;
use std::path::PathBuf;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Nahm(#[from] NahmError),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{0}")]
    Tolerance(String),

    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

#[derive(Serialize)]
pub struct ErrorReport<'a> {
    pub code: &'a str,
    pub class: &'a str,
    pub message: String,
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Nahm(e) => match e.class() {
                ErrorClass::Validation => 1,
                ErrorClass::Numerical => 2,
            },
            CliError::Config(_) => 1,
            CliError::Tolerance(_) => 2,
            CliError::Io { .. } => 3,
        }
    }

    pub fn report(&self) -> ErrorReport<'_> {
        let (code, class) = match self {
            CliError::Nahm(e) => (
                e.code(),
                match e.class() {
                    ErrorClass::Validation => "validation",
                    ErrorClass::Numerical => "numerical",
                },
            ),
            CliError::Config(_) => ("InvalidConfig", "validation"),
            CliError::Tolerance(_) => ("ToleranceExceeded", "numerical"),
            CliError::Io { .. } => ("Io", "io"),
        };
        ErrorReport { code, class, message: self.to_string() }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
