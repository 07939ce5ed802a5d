use std::path::PathBuf;

use crate::signal::EmotionQuadrant;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid signal: {0}")]
    InvalidSignal(String),

    #[error("invalid emotion label: {0}")]
    InvalidLabel(String),

    #[error("invalid synthesis profile: {0}")]
    InvalidProfile(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("truncated data at byte offset {offset}: {message}")]
    Truncated { offset: u64, message: String },

    #[error("unrecognized file format: {0}")]
    BadFormat(String),

    #[error("invalid analysis band: {0}")]
    InvalidBand(String),

    #[error("footstep window [{start}, {end}) lies outside signal of length {len}")]
    SegmentBounds { start: i64, end: i64, len: usize },

    #[error("insufficient events: need at least {needed}, found {found}")]
    InsufficientEvents { needed: usize, found: usize },

    #[error("shape mismatch in slot `{slot}`: expected {expected}, found {found}")]
    Shape {
        slot: String,
        expected: String,
        found: String,
    },

    #[error("length mismatch: expected {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("sample weights sum to zero")]
    DegenerateBatch,

    #[error("non-finite loss at epoch {epoch}, batch {batch}")]
    NonFiniteLoss { epoch: usize, batch: usize },

    #[error("invalid pruning schedule: {0}")]
    InvalidSchedule(String),

    #[error("empty input: {0}")]
    Empty(String),

    #[error("unknown person `{0}`")]
    UnknownPerson(String),

    #[error("target person `{0}` not present in dataset")]
    MissingTarget(String),

    #[error("insufficient target data: {0}")]
    InsufficientTargetData(String),

    #[error("classes absent from training data: {0:?}")]
    MissingClasses(Vec<EmotionQuadrant>),

    #[error("invalid configuration at `{path}`: {message}")]
    Config { path: String, message: String },

    #[error("inputs carry different configuration fingerprints: {0:?}")]
    FingerprintMismatch(Vec<String>),

    #[error("missing input file {}", .0.display())]
    MissingInput(PathBuf),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config { .. } | Error::InvalidSchedule(_) => 2,
            Error::MissingInput(_) => 3,
            Error::NonFiniteLoss { .. } => 4,
            _ => 1,
        }
    }
}
