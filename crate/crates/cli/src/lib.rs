//! Command-line front end: argument parsing, file handling and report
//! emission for the simulator library.

pub mod commands;
pub mod manifest;

use std::fmt;

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Exit codes: 0 ok, 1 validation (bad inputs, bad files, bad arguments),
/// 2 internal.
#[derive(Debug)]
pub enum CliError {
    Validation(String),
    Internal(String),
}

impl CliError {
    pub fn code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Internal(_) => 2,
        }
    }

    pub fn validation(message: impl fmt::Display) -> Self {
        CliError::Validation(message.to_string())
    }

    pub fn internal(message: impl fmt::Display) -> Self {
        CliError::Internal(message.to_string())
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Validation(m) => write!(f, "{m}"),
            CliError::Internal(m) => write!(f, "internal: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

/// `# generated:` header line carrying the only time-of-day content of a
/// report; everything below it is deterministic.
pub fn timestamp_header() -> String {
    let now = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    format!("# generated: unix:{now}\n")
}
