//! Command errors and their exit codes.

use std::fmt;

use serde::Serialize;

/// Process exit codes.
pub mod exit {
    /// Success.
    pub const OK: i32 = 0;
    /// A cross-check or monotonicity verdict failed; the report was still written.
    pub const CHECK_FAILED: i32 = 1;
    /// Unreadable, malformed or invalid configuration, or an output file error.
    pub const CONFIG: i32 = 2;
    /// A pricing engine failed.
    pub const NUMERICAL: i32 = 3;
}

/// Anything that stops a command.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Configuration could not be read, parsed or validated.
    #[error("{0}")]
    Config(String),
    /// An output file could not be written.
    #[error("{context}: {source}")]
    Io {
        /// What was being done.
        context: String,
        /// Underlying error.
        source: std::io::Error,
    },
    /// An engine returned an error.
    #[error("{0}")]
    Numerical(#[from] fcev_core::Error),
}

/// Machine-readable error written to stderr.
#[derive(Debug, Serialize)]
pub struct ErrorReport {
    /// `config`, `io`, or the engine error tag.
    pub error: String,
    /// Human readable message.
    pub message: String,
    /// Exit code the process returns.
    pub exit_code: i32,
}

impl CliError {
    /// Shorthand for configuration errors.
    pub fn config(msg: impl fmt::Display) -> Self {
        CliError::Config(msg.to_string())
    }

    /// Exit code for this error.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Io { .. } => exit::CONFIG,
            CliError::Numerical(_) => exit::NUMERICAL,
        }
    }

    /// Report for stderr.
    pub fn report(&self) -> ErrorReport {
        let error = match self {
            CliError::Config(_) => "config".to_string(),
            CliError::Io { .. } => "io".to_string(),
            CliError::Numerical(e) => e.kind().to_string(),
        };
        ErrorReport {
            error,
            message: self.to_string(),
            exit_code: self.exit_code(),
        }
    }
}
