use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("invalid bit character {found:?} at position {position}")]
    InvalidBit { position: usize, found: char },

    #[error("cannot measure pulse at position {position}: it was lost in the channel")]
    Erased { position: usize },

    #[error("{name} must lie in [0, 1], got {value}")]
    Probability { name: &'static str, value: f64 },

    #[error("sacrifice fraction must lie in (0, 1], got {0}")]
    SacrificeFraction(f64),

    #[error("cannot estimate QBER on an empty key")]
    EmptyKey,

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("transcript I/O error on {path}: {message}")]
    Io { path: String, message: String },

    #[error("transcript parse error at line {line} (last good line {last_good}): {message}")]
    Parse {
        line: usize,
        last_good: usize,
        message: String,
    },
}
