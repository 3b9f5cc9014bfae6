use std::path::PathBuf;

use thiserror::Error;

use crate::expr::Violation;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed sequence: {0}")]
    MalformedSequence(Violation),

    #[error("cannot parse token `{0}`")]
    UnknownToken(String),

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("non-finite loss during training step (recon={recon}, kl={kl})")]
    NonFiniteLoss { recon: f64, kl: f64 },

    #[error("checkpoint error: {0}")]
    Checkpoint(String),

    #[error("invalid structure: {0}")]
    InvalidStructure(String),

    #[error("missing kernel for interaction type {0}")]
    MissingKernel(String),

    #[error("missing self energy for defect type {0}")]
    MissingSelfEnergy(String),

    #[error("missing gap entry for {0}")]
    MissingGap(String),

    #[error("missing target `{0}`")]
    MissingTarget(&'static str),

    #[error("mixed interaction types: expected {expected}, found {found}")]
    MixedInteraction { expected: String, found: String },

    #[error("structure {index} has {found} defects, expected exactly 2")]
    MixedArity { index: usize, found: usize },

    #[error("unknown kernel `{name}` (available: {available})")]
    UnknownKernel { name: String, available: String },

    #[error("kernel for {0} fails predicates on its domain: {1}")]
    KernelPredicate(String, String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
