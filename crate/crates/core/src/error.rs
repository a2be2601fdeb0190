use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("shape mismatch: expected {expected}, found {found}")]
    ShapeMismatch { expected: String, found: String },

    #[error("invalid lift shape: {0}")]
    InvalidShape(String),

    #[error("frequency {0} outside [0, 1)")]
    FrequencyOutOfRange(f64),

    #[error("invalid point-source model: {0}")]
    InvalidModel(String),

    #[error("cannot place {r} frequencies with wraparound separation {delta}")]
    InfeasibleSeparation { r: usize, delta: f64 },

    #[error("index {index} out of range (len {len})")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("measurement row {row} has a zero-norm subspace vector")]
    DegenerateMeasurement { row: usize },

    #[error("model order {r} not supported: {reason}")]
    ModelOrder { r: usize, reason: String },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("empty frequency set")]
    EmptySet,

    #[error("singular value decomposition failed")]
    Svd,

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed input: {0}")]
    Parse(String),
}

impl Error {
    pub(crate) fn shape(expected: impl Into<String>, found: impl Into<String>) -> Self {
        Error::ShapeMismatch {
            expected: expected.into(),
            found: found.into(),
        }
    }
}
