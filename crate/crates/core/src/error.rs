use thiserror::Error;

/// Errors raised across the crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension error: {0}")]
    Dimension(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("size error: {0}")]
    Size(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("precondition error: {0}")]
    Precondition(String),

    /// No split found within the blocklength budget.
    #[error("no admissible split found (best gap {best_gap:.3e})")]
    NotFound { best_gap: f64 },

    /// A proposed pairing creates a cyclic decoding dependency.
    #[error("schedule error: cyclic dependency through {cycle:?}")]
    Schedule { cycle: Vec<String> },
}

pub type Result<T> = std::result::Result<T, Error>;
