use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = CliError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },

    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },

    #[error("{0}")]
    Core(#[from] qmoney_core::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        CliError::Usage(message.into())
    }

    /// 1 protocol-level failure, 2 usage, 3 I/O or file format.
    pub fn exit_code(&self) -> u8 {
        use qmoney_core::Error as E;
        match self {
            CliError::Usage(_) => 2,
            CliError::Io { .. } | CliError::Format { .. } | CliError::Csv(_) => 3,
            CliError::Core(E::ProtocolViolation(_) | E::InsufficientCopies { .. }) => 1,
            CliError::Core(_) => 2,
        }
    }
}
