//! Failure kinds, exit codes and the machine-readable failure record.

use std::path::{Path, PathBuf};

use serde::Serialize;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {message}")]
    Csv { path: PathBuf, message: String },
    /// A computation refused its input (degenerate sample, empty domain, ...).
    #[error("computation failed: {0}")]
    Compute(String),
    /// Checks ran and at least one failed.
    #[error("validation failed: {0}")]
    Validation(String),
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io { path: path.to_path_buf(), source }
    }

    pub fn csv(path: &Path, e: csv::Error) -> Self {
        CliError::Csv { path: path.to_path_buf(), message: e.to_string() }
    }

    pub fn compute(e: impl std::fmt::Display) -> Self {
        CliError::Compute(e.to_string())
    }

    /// 1 validation failure, 2 usage error, 3 IO error. Computation failures
    /// on valid input count as validation failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) | CliError::Compute(_) => 1,
            CliError::Usage(_) => 2,
            CliError::Io { .. } | CliError::Csv { .. } => 3,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "usage",
            CliError::Io { .. } => "io",
            CliError::Csv { .. } => "csv",
            CliError::Compute(_) => "compute",
            CliError::Validation(_) => "validation",
        }
    }

    pub fn report(&self) -> FailureReport {
        let path = match self {
            CliError::Io { path, .. } | CliError::Csv { path, .. } => Some(path.display().to_string()),
            _ => None,
        };
        FailureReport { status: "failure", kind: self.kind(), exit_code: self.exit_code(), message: self.to_string(), path }
    }
}

/// Printed to stderr as one JSON line on failure.
#[derive(Debug, Serialize)]
pub struct FailureReport {
    pub status: &'static str,
    pub kind: &'static str,
    pub exit_code: i32,
    pub message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub path: Option<String>,
}
