use std::path::PathBuf;

use serde::Serialize;

/// Failures of the command-line tools, carrying the process exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] xtrials_core::Error),

    #[error("cannot write {path}: {source}")]
    Write {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{0}")]
    Validation(String),

    #[error("index file {path} does not match its manifest digest")]
    DigestMismatch { path: PathBuf },

    #[error("{0}")]
    Runtime(String),
}

#[derive(Serialize)]
struct Report<'a> {
    error: &'a str,
    message: String,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    suggestions: Vec<String>,
}

impl CliError {
    /// 1 for runtime failures, 2 for usage and validation errors.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Runtime(_) | CliError::Write { .. } => 1,
            _ => 2,
        }
    }

    pub fn code(&self) -> &'static str {
        use xtrials_core::Error as E;
        match self {
            CliError::Core(E::Io { .. }) => "unreadable_input",
            CliError::Core(E::InvalidQuery(_)) => "empty_query",
            CliError::Core(E::UnknownCondition { .. }) => "unknown_condition",
            CliError::Core(E::IncompleteFeatures { .. } | E::IncompleteData(_)) => "incomplete_data",
            CliError::Core(E::Schema { .. }) => "schema_violation",
            CliError::Core(E::Catalog(_)) => "invalid_templates",
            CliError::Core(E::Document(_)) => "invalid_weights",
            CliError::Core(_) => "invalid_input",
            CliError::Write { .. } => "write_failed",
            CliError::Validation(_) => "validation_failed",
            CliError::DigestMismatch { .. } => "digest_mismatch",
            CliError::Runtime(_) => "runtime_failure",
        }
    }

    /// Machine-readable one-line JSON report for standard error.
    pub fn report(&self) -> String {
        let suggestions = match self {
            CliError::Core(xtrials_core::Error::UnknownCondition { suggestions, .. }) => suggestions.clone(),
            _ => Vec::new(),
        };
        serde_json::to_string(&Report {
            error: self.code(),
            message: self.to_string(),
            suggestions,
        })
        .expect("report serializes")
    }
}
