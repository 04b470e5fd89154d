use std::path::PathBuf;

/// Errors produced by the library.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("i/o error reading {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// Malformed input bytes (bad magic, header/payload mismatch).
    #[error("format error: {0}")]
    Format(String),

    /// Inputs that parse individually but disagree with each other.
    #[error("consistency error: {0}")]
    Consistency(String),

    /// Structurally valid data that violates a domain requirement.
    #[error("data error: {0}")]
    Data(String),

    #[error("dimension mismatch: {0}")]
    DimMismatch(String),

    #[error("invalid perturbation spec: {0}")]
    InvalidSpec(String),

    #[error("training diverged at epoch {epoch}: {reason}")]
    Diverged { epoch: usize, reason: String },

    #[error("config error: {0}")]
    Config(String),

    #[error("missing checkpoint for epsilon {epsilon}: expected {path}")]
    MissingCheckpoint { epsilon: f64, path: PathBuf },

    #[error("eigensolver error: {0}")]
    Eigen(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
