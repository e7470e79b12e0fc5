use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("file not found: {0}")]
    NotFound(PathBuf),

    #[error("malformed row at line {line}: {reason}")]
    MalformedRow { line: u64, reason: String },

    #[error("missing column `{0}`")]
    MissingColumn(String),

    #[error("non-uniform spacing: expected 1h between {prev} and {next}")]
    NonUniformSpacing { prev: String, next: String },

    #[error("series too short: {0}")]
    SeriesTooShort(String),

    #[error("invalid config at `{field}`: {reason}")]
    Config { field: String, reason: String },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("unstable discretization: dt/(R*C) = {ratio} must be < 1")]
    UnstableDiscretization { ratio: f64 },

    #[error("episode finished: step {k} called with horizon {horizon}")]
    EpisodeFinished { k: usize, horizon: usize },

    #[error("infeasible SESS input: {0}")]
    Infeasible(String),

    #[error("training diverged: {0}")]
    Divergence(String),

    #[error("replay buffer holds {size} transitions, batch needs {batch}")]
    Underfull { size: usize, batch: usize },

    #[error("empty trace")]
    EmptyTrace,

    #[error("{0}")]
    Invalid(String),

    #[error("enumeration bound exceeded: {nodes} nodes > {bound}; {hint}")]
    EnumerationBound { nodes: u128, bound: u128, hint: String },

    #[error("checkpoint error: {0}")]
    Checkpoint(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        let path = path.into();
        if source.kind() == std::io::ErrorKind::NotFound {
            Error::NotFound(path)
        } else {
            Error::Io { path, source }
        }
    }

    pub(crate) fn config(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            reason: reason.into(),
        }
    }
}
