//! Error type carrying the process exit code.
//!
//! Exit codes: 0 success, 1 internal error, 2 bad input or violated
//! preconditions.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad input files, unknown scenarios, or violated preconditions.
    #[error("{0}")]
    Data(String),
    /// Failures that are not the user's fault (output io, serialization).
    #[error("{0}")]
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Data(_) => 2,
            CliError::Internal(_) => 1,
        }
    }

    pub fn data(msg: impl Into<String>) -> Self {
        CliError::Data(msg.into())
    }

    pub fn internal(msg: impl Into<String>) -> Self {
        CliError::Internal(msg.into())
    }
}

impl From<odocal::pca::PcaError> for CliError {
    fn from(e: odocal::pca::PcaError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<odocal::allan::AllanError> for CliError {
    fn from(e: odocal::allan::AllanError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<odocal::extrinsics::ExtrinsicsError> for CliError {
    fn from(e: odocal::extrinsics::ExtrinsicsError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<odocal::sim::SimError> for CliError {
    fn from(e: odocal::sim::SimError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<odocal::imu::ImuError> for CliError {
    fn from(e: odocal::imu::ImuError) -> Self {
        CliError::Data(e.to_string())
    }
}
