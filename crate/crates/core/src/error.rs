use thiserror::Error;

/// Errors produced by dataset handling, modeling, and detection.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Malformed input text, positioned at a 1-based line number.
    #[error("parse error at line {line}: {reason}")]
    Parse { line: usize, reason: String },

    #[error("dataset has no records")]
    EmptyDataset,

    #[error("not enough samples: need at least {needed}, got {got}")]
    InsufficientData { needed: usize, got: usize },

    #[error("expected a {expected}-mode dataset, got {found}")]
    WrongMode {
        expected: &'static str,
        found: &'static str,
    },

    #[error("unknown variable {name:?}")]
    UnknownVariable { name: String },

    #[error("unknown traffic class {name:?}")]
    UnknownLabel { name: String },

    #[error("invalid configuration: {reason}")]
    InvalidConfig { reason: String },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("series timestamps disagree at index {index}")]
    MisalignedSeries { index: usize },

    #[error("training diverged at epoch {epoch}: loss is not finite")]
    Divergence { epoch: usize },

    #[error("MMRE is undefined: every observed value is zero")]
    MmreUndefined,

    #[error("{rate} is undefined: denominator is zero")]
    UndefinedRate { rate: &'static str },

    #[error("malformed model file: {field}")]
    ModelFormat { field: String },

    #[error("unsupported model version {found:?}")]
    UnsupportedModelVersion { found: String },

    #[error("attack episode starting at sample {start} overlaps an existing episode")]
    EpisodeOverlap { start: usize },

    #[error(
        "attack episode (start {start}, duration {duration}) does not fit a dataset of {len} samples"
    )]
    EpisodeOutOfBounds {
        start: usize,
        duration: usize,
        len: usize,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
