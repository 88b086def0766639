use thiserror::Error;

/// Errors surfaced by simulator components.
///
/// Every variant carries enough context to report the failing quantity
/// without a backtrace; the CLI serializes these into its error JSON.
#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid {name} = {value}: {reason}")]
    InvalidInput {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("config field `{field}`: {reason}")]
    Config { field: String, reason: String },

    #[error("failed to parse config: {0}")]
    ConfigParse(String),

    #[error("{what}: size {size} exceeds cap {cap}; use the exhaustive oracle instead")]
    InstanceTooLarge {
        what: &'static str,
        size: u64,
        cap: u64,
    },

    #[error("fixed point not bracketed or not converged after {iterations} iterations")]
    NoConvergence { iterations: u32 },

    #[error("dimension mismatch in {context}: expected {expected}, got {got}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("linear solve failed: {0}")]
    SingularSystem(&'static str),

    #[error("serialization failed: {0}")]
    Serialize(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, SimError>;

impl SimError {
    pub fn config(field: impl Into<String>, reason: impl Into<String>) -> Self {
        SimError::Config {
            field: field.into(),
            reason: reason.into(),
        }
    }
}
