use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("encoding error: {0}")]
    Encoding(String),

    #[error("decode error: {0}")]
    Decode(String),

    /// A computation needed a program-size level beyond the configured
    /// enumeration capacity.
    #[error("level {level} exceeds the enumeration capacity of {capacity} bits")]
    Capacity { level: usize, capacity: usize },

    /// A diagonal evaluation requested a level that is not strictly shorter
    /// than the string it is evaluating. Well-foundedness predicts this never
    /// happens; any occurrence is a bug.
    #[error("recursion guard: evaluating {program} (|w| = {len}) requested level {level}")]
    Guard {
        program: String,
        len: usize,
        level: usize,
    },

    #[error("invalid time function: {0}")]
    TimeFn(String),

    #[error("cache: {0}")]
    Cache(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
