use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("line {line}: {reason}")]
    Malformed { line: usize, reason: String },

    #[error("subclass cycle: {}", .0.join(" -> "))]
    Cycle(Vec<String>),

    #[error("unknown class `{0}`")]
    UnknownClass(String),

    #[error("unknown instance `{0}`")]
    UnknownInstance(String),

    #[error("activation csv row {row}, column {column}: {reason}")]
    Activation {
        row: usize,
        column: usize,
        reason: String,
    },

    #[error("neuron {0} out of range")]
    NeuronOutOfRange(usize),

    #[error("invalid example split: {0}")]
    InvalidSplit(String),

    #[error("no hypothesis: no positive example carries an annotated class")]
    NoHypothesis,

    #[error("exhaustive search refused: {atoms} candidate atoms exceeds limit {limit}")]
    GuardExceeded { atoms: usize, limit: usize },

    #[error("empty target set")]
    EmptyTargets,

    #[error("empty sample")]
    EmptySample,

    #[error("holdout split needs at least 2 instances, got {0}")]
    TooFewInstances(usize),

    #[error("config: {0}")]
    Config(String),

    #[error("data: {0}")]
    Data(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code for the CLI: 2 for configuration problems, 3 for data problems.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 2,
            _ => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
