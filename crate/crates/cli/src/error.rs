//! CLI error wrapper with the documented exit codes.
//!
//! 2: a referenced file is missing; 3: a file is malformed; 4: dimension
//! mismatch; 5: degenerate or insufficient data; 6: invalid data or a
//! numerical failure; 64: usage or configuration problem; 1: other I/O.

use std::fmt;

use ssd_core::Error as CoreError;

#[derive(Debug)]
pub enum CliError {
    Core(CoreError),
    Config { source_name: String, message: String },
    Usage(String),
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        CliError::Usage(message.into())
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(err) => match err {
                CoreError::Io(io) if io.kind() == std::io::ErrorKind::NotFound => 2,
                CoreError::Io(_) => 1,
                CoreError::Format { .. } | CoreError::UnknownLabel(_) => 3,
                CoreError::DimensionMismatch { .. } => 4,
                CoreError::InsufficientData { .. }
                | CoreError::DegenerateLabels(_)
                | CoreError::NoSpeech(_)
                | CoreError::EmptyInput(_)
                | CoreError::AlreadyWeighted => 5,
                CoreError::InvalidData(_) | CoreError::NumericalFailure { .. } => 6,
            },
            CliError::Config { .. } | CliError::Usage(_) => 64,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Core(err) => write!(f, "{err}"),
            CliError::Config { source_name, message } => {
                write!(f, "config {source_name}: {message}")
            }
            CliError::Usage(message) => write!(f, "{message}"),
        }
    }
}

impl From<CoreError> for CliError {
    fn from(err: CoreError) -> Self {
        CliError::Core(err)
    }
}

impl From<std::io::Error> for CliError {
    fn from(err: std::io::Error) -> Self {
        CliError::Core(CoreError::Io(err))
    }
}
