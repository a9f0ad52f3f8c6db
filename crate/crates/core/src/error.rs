use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    #[error("dimension mismatch: expected {expected} values, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("negative multiplier {value} at constraint {index}")]
    NegativeMultiplier { index: usize, value: f64 },

    #[error("line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("malformed file: {0}")]
    Format(String),

    #[error("unsupported format version {found} (expected {expected})")]
    Version { expected: u32, found: u32 },

    #[error("architecture mismatch: expected {expected}, found {found}")]
    ArchitectureMismatch { expected: String, found: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("non-finite loss {value} at sample {sample}")]
    NonFiniteLoss { sample: usize, value: f64 },

    #[error("non-finite gradient component at parameter {index}")]
    NonFiniteGradient { index: usize },

    #[error("training diverged at epoch {epoch}, sample {sample}")]
    Diverged { epoch: usize, sample: usize },

    #[error("train/test split leakage: sample {0} appears in both")]
    SplitLeakage(usize),

    #[error("infeasible label for record {record}: {reason}")]
    InvalidRecord { record: usize, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
