//! Error type shared across the detector pipeline.

use thiserror::Error;

/// Errors produced by feature extraction, model training, scoring,
/// fusion, evaluation, and the text file formats.
#[derive(Debug, Error)]
pub enum Error {
    #[error("empty input: {0}")]
    EmptyInput(String),

    #[error("invalid data: {0}")]
    InvalidData(String),

    #[error("dimension mismatch in {context}: expected {expected}, got {actual}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("insufficient data for {context}: need {needed}, have {available}")]
    InsufficientData {
        context: &'static str,
        needed: usize,
        available: usize,
    },

    #[error("numerical failure in {context} at iteration {iteration}")]
    NumericalFailure {
        context: &'static str,
        iteration: usize,
    },

    #[error("degenerate labels: {0}")]
    DegenerateLabels(String),

    #[error("no speech frames left in utterance {0:?}")]
    NoSpeech(String),

    #[error("score vector is already duration-weighted")]
    AlreadyWeighted,

    #[error("unknown label {0:?}")]
    UnknownLabel(String),

    #[error("malformed {format} input ({source_name}): {message}")]
    Format {
        format: &'static str,
        source_name: String,
        message: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn format(format: &'static str, source_name: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Format {
            format,
            source_name: source_name.into(),
            message: message.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
