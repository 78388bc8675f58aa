//! Shared error type for the crate.

use thiserror::Error;

/// Errors raised by structure construction, form algebra, field assembly
/// and integration.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// Inputs whose dimensions, degrees or kinds do not fit the operation.
    #[error("structural error: {0}")]
    Structural(String),

    /// The requested dimension exceeds the dense-enumeration cap.
    #[error("dimension cap exceeded: {0}")]
    CapExceeded(String),

    /// A numeric value that must be finite was not.
    #[error("non-finite value: {0}")]
    NonFinite(String),

    /// The operation is not available for the given input kind.
    #[error("unsupported: {0}")]
    Unsupported(String),

    /// Adaptive integration could not proceed past `last_good_time`.
    #[error("integration failed at t = {last_good_time}: {reason}")]
    Integration { last_good_time: f64, reason: String },
}

impl Error {
    pub fn structural(msg: impl Into<String>) -> Self {
        Error::Structural(msg.into())
    }

    pub fn cap(msg: impl Into<String>) -> Self {
        Error::CapExceeded(msg.into())
    }

    pub fn non_finite(msg: impl Into<String>) -> Self {
        Error::NonFinite(msg.into())
    }

    pub fn unsupported(msg: impl Into<String>) -> Self {
        Error::Unsupported(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
