use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid lattice: {0}")]
    InvalidLattice(String),

    #[error("{kind} id {id} out of range (count {count})")]
    OutOfRange {
        kind: &'static str,
        id: usize,
        count: usize,
    },

    #[error("invalid probability {value}: {reason}")]
    InvalidProbability { value: f64, reason: &'static str },

    #[error("model or lattice mismatch: {0}")]
    Mismatch(String),

    #[error("{vars} variables exceed the exact enumeration cap of {cap}")]
    TooManyVariables { vars: usize, cap: usize },

    #[error("invalid anneal schedule: {0}")]
    InvalidSchedule(String),

    #[error("invalid Wilson loop: {0}")]
    InvalidLoop(String),

    #[error("chain is not a cycle ({0} boundary sites)")]
    NotACycle(usize),

    #[error("error and correction chains have different boundaries")]
    BoundaryMismatch,

    #[error("syndrome has odd cardinality {0}")]
    OddSyndrome(usize),

    #[error("invalid statistics input: {0}")]
    InvalidInput(String),

    #[error("invalid scan config: {0}")]
    InvalidConfig(String),

    #[error("config hash mismatch: output was produced by {found}, current config is {expected}")]
    ConfigHashMismatch { expected: String, found: String },

    #[error("malformed file {path}: {reason}")]
    Format { path: PathBuf, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Toml(#[from] toml::de::Error),
}
