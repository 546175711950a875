use thiserror::Error;

/// Errors raised by the simulator. Decoder failure and non-decomposability
/// are ordinary values, not errors.
#[derive(Debug, Error)]
pub enum Error {
    #[error("value {value} is out of range for N = {n}")]
    OutOfRange { value: usize, n: usize },

    #[error("N = {0} must be a power of two between 1 and 256")]
    NotPowerOfTwo(usize),

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("relation is not {0}-distinct")]
    NotDistinct(&'static str),

    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("budget exceeded: {0}")]
    Budget(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Budget(_) => 3,
            _ => 2,
        }
    }
}
