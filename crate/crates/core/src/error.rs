use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    // hierarchy
    #[error("conflicting parent: {0}")]
    ConflictingParent(String),
    #[error("empty hierarchy level")]
    EmptyLevel,
    #[error("labels at {level} level are not dense 0..{n}")]
    NonDenseLabels { level: &'static str, n: usize },
    #[error("unknown label {0}")]
    UnknownLabel(String),
    #[error("bad hierarchy level {0} (expected 1, 2 or 3)")]
    BadLevel(u8),

    // datagen
    #[error("bad generator config: {0}")]
    BadConfig(String),
    #[error("infeasible split counts: {0}")]
    InfeasibleCounts(String),
    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    // tensornet
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("non-finite input")]
    NonFiniteInput,
    #[error("tape does not match network")]
    TapeMismatch,
    #[error("non-finite loss")]
    NonFiniteLoss,

    // losses
    #[error("index {index} out of range for batch of {len}")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("batch too small for MMD: need at least 2 rows per side, got {0} and {1}")]
    BatchTooSmall(usize, usize),
    #[error("label {label} out of range for {classes} classes")]
    LabelOutOfRange { label: usize, classes: usize },

    // pipeline
    #[error("unknown variant {0:?}")]
    UnknownVariant(String),
    #[error("read of masked target training labels")]
    MaskedLabelAccess,
    #[error("config does not match dataset: {0}")]
    ConfigSplitMismatch(String),
    #[error("invalid training config: {0}")]
    BadTrainConfig(String),

    // eval
    #[error("empty split")]
    EmptySplit,
    #[error("class {0} missing from reference split")]
    MissingClass(usize),
    #[error("prototype of class {0} has zero norm")]
    DegeneratePrototype(usize),
    #[error("zero feature vector")]
    ZeroVector,
    #[error("no samples of class {0}")]
    NoSamplesOfClass(usize),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
