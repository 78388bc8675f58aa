//! Command errors with their process exit codes:
//! 0 pass, 1 usage/structural, 2 validation failure, 3 runtime numeric.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Malformed or inconsistent configuration, unsupported operation.
    #[error("{0}")]
    Usage(String),
    /// The scenario is well-formed but a validation check failed.
    #[error("validation failed: {0}")]
    Validation(String),
    /// Numeric failure while running (non-finite values, integration
    /// breakdown, I/O).
    #[error("runtime failure: {0}")]
    Runtime(String),
}

impl CliError {
    pub fn usage(msg: impl Into<String>) -> Self {
        CliError::Usage(msg.into())
    }

    pub fn validation(msg: impl Into<String>) -> Self {
        CliError::Validation(msg.into())
    }

    pub fn runtime(msg: impl Into<String>) -> Self {
        CliError::Runtime(msg.into())
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Validation(_) => 2,
            CliError::Runtime(_) => 3,
        }
    }
}

impl From<hyperham::Error> for CliError {
    fn from(e: hyperham::Error) -> Self {
        match e {
            hyperham::Error::NonFinite(_) | hyperham::Error::Integration { .. } => {
                CliError::Runtime(e.to_string())
            }
            _ => CliError::Usage(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(format!("i/o error: {e}"))
    }
}
