//! On-disk formats: network config (TOML), packed binary weights, spike
//! traces and feature streams (line-oriented text), and the bundled network
//! model file. Every format carries a version.

pub mod config;
pub mod features;
pub mod trace;
pub mod weights;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },
    #[error("{path}: {message}")]
    Malformed { path: String, message: String },
}

impl FormatError {
    pub(crate) fn io(path: &str, source: std::io::Error) -> Self {
        FormatError::Io {
            path: path.to_string(),
            source,
        }
    }

    pub(crate) fn parse(path: &str, line: usize, message: impl Into<String>) -> Self {
        FormatError::Parse {
            path: path.to_string(),
            line,
            message: message.into(),
        }
    }

    pub(crate) fn malformed(path: &str, message: impl Into<String>) -> Self {
        FormatError::Malformed {
            path: path.to_string(),
            message: message.into(),
        }
    }
}
