//! Error type shared by every stage of the pipeline.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum LockerError {
    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error("invalid event{}: {message}", line.map(|l| format!(" (line {l})")).unwrap_or_default())]
    InvalidEvent {
        message: String,
        line: Option<usize>,
    },

    #[error("event stream not sorted by (day, seq): record {index} goes backwards")]
    UnsortedStream { index: usize },

    #[error("training error: {0}")]
    Training(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("solver error: {message} (max primal residual {primal_residual:.3e}, max dual residual {dual_residual:.3e})")]
    Solver {
        message: String,
        primal_residual: f64,
        dual_residual: f64,
    },

    #[error("replay error: {0}")]
    Replay(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl LockerError {
    pub fn invalid_event(message: impl Into<String>) -> Self {
        LockerError::InvalidEvent {
            message: message.into(),
            line: None,
        }
    }

    pub fn invalid_event_at(line: usize, message: impl Into<String>) -> Self {
        LockerError::InvalidEvent {
            message: message.into(),
            line: Some(line),
        }
    }
}

pub type Result<T> = std::result::Result<T, LockerError>;
