use thiserror::Error;

/// Errors raised by the simulator.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("index out of range: {0}")]
    Index(String),
    #[error("value out of range: {0}")]
    Range(String),
    #[error("column {0} is disabled")]
    ColumnDisabled(usize),
    #[error("singular channel at subcarrier {subcarrier}: {reason}")]
    SingularChannel { subcarrier: usize, reason: String },
    #[error("singular equalizer at subcarrier {0}")]
    SingularEqualizer(usize),
    #[error("sample rate mismatch: expected {expected} Hz, got {got} Hz")]
    RateMismatch { expected: f64, got: f64 },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
