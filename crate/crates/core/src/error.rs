use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch in {context}: expected {expected}, found {found}")]
    Shape {
        context: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("activation trace does not belong to this network (stale or foreign cache)")]
    StaleCache,

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("target {target} out of range for a task with {classes} classes")]
    TargetOutOfRange { target: usize, classes: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("architecture mismatch: {0}")]
    ArchitectureMismatch(String),

    #[error("shape grid mismatch: {0}")]
    GridMismatch(String),

    #[error("{path}:{line}: {message}")]
    Parse { path: PathBuf, line: u64, message: String },

    #[error("schema error: {0}")]
    Schema(String),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("training failed on client {client}: {message}")]
    Training { client: usize, message: String },

    #[error("all {0} grid trials failed")]
    AllTrialsFailed(usize),

    #[error("model file schema version mismatch: expected {expected}, found {found}")]
    SchemaVersion { expected: u32, found: u32 },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn shape(context: &'static str, expected: usize, found: usize) -> Self {
        Error::Shape {
            context,
            expected,
            found,
        }
    }
}
