use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::corpus::CorpusError;
use crate::losses::LossReport;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("image: {0}")]
    Image(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("resolution mismatch: expected {expected}x{expected}, got {width}x{height}")]
    ResolutionMismatch {
        expected: usize,
        width: usize,
        height: usize,
    },
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error("record `{id}`: {source}")]
    Record {
        id: String,
        #[source]
        source: Box<Error>,
    },
    #[error("codebook: {0}")]
    Codebook(String),
    #[error("permutation count {count} exceeds {max} for {grid} tiles")]
    CountTooLarge {
        count: usize,
        grid: usize,
        max: usize,
    },
    #[error("class index {index} out of range for {classes} classes")]
    InvalidTarget { index: usize, classes: usize },
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error("checkpoint format version {found} is not supported (expected {expected})")]
    CheckpointVersionMismatch { found: u32, expected: u32 },
    #[error("config: {0}")]
    Config(String),
    #[error("non-finite loss at step {step}: {report}")]
    NonFiniteLoss {
        step: usize,
        report: Box<LossReport>,
    },
    #[error("non-finite fine-tuning loss at step {step}")]
    NonFiniteFinetuneLoss { step: usize },
    #[error("report: {0}")]
    Report(String),
    #[error("empty input: {0}")]
    EmptyInput(String),
    #[error("length mismatch: {hypotheses} hypotheses vs {references} references")]
    LengthMismatch {
        hypotheses: usize,
        references: usize,
    },
}

impl Error {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        Error::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub fn in_record(id: &str, err: Error) -> Self {
        Error::Record {
            id: id.to_string(),
            source: Box::new(err),
        }
    }

    /// Whether the error stems from bad input data rather than a failure of
    /// the computation itself.
    pub fn is_data_error(&self) -> bool {
        match self {
            Error::Io { .. }
            | Error::Image(_)
            | Error::Corpus(_)
            | Error::Codebook(_)
            | Error::Checkpoint(_)
            | Error::CheckpointVersionMismatch { .. }
            | Error::Config(_)
            | Error::Report(_)
            | Error::EmptyInput(_)
            | Error::ResolutionMismatch { .. }
            | Error::LengthMismatch { .. }
            | Error::CountTooLarge { .. } => true,
            Error::Record { source, .. } => source.is_data_error(),
            _ => false,
        }
    }
}

impl From<pretext_forge_autograd::Error> for Error {
    fn from(e: pretext_forge_autograd::Error) -> Self {
        match e {
            pretext_forge_autograd::Error::InvalidTarget { index, classes } => {
                Error::InvalidTarget { index, classes }
            }
            other => Error::Shape(other.to_string()),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
