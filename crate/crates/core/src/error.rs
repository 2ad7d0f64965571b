use std::path::PathBuf;

use crate::model::MeasurementKind;

pub type Result<T> = std::result::Result<T, Error>;

/// Broad failure class, used by the CLI to pick an exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Config,
    Data,
    Numerical,
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("need at least 2 rows, got {0}")]
    TooFewRows(usize),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("structural mismatch: {0}")]
    StructuralMismatch(String),

    #[error("manifest error: {0}")]
    Manifest(String),

    #[error("{file}: row {row}, column {col}: {msg}")]
    Parse {
        file: String,
        row: usize,
        col: usize,
        msg: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("decomposition did not converge: {0}")]
    Convergence(String),

    #[error("degenerate data: {0}")]
    DegenerateData(String),

    #[error("objective became non-finite after {iters} iterations")]
    NonFiniteLoss { iters: usize },

    #[error("profile is empty")]
    EmptyProfile,

    #[error("reference profile sums to zero")]
    ZeroReference,

    #[error("length mismatch: {0}")]
    LengthMismatch(String),

    #[error("bad split or combination spec: {0}")]
    BadSpec(String),

    #[error("bad generator config: {0}")]
    BadConfig(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("channel {0} is not present in the dataset")]
    MissingChannel(MeasurementKind),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn class(&self) -> ErrorClass {
        match self {
            Error::BadSpec(_) | Error::BadConfig(_) | Error::Config(_) => ErrorClass::Config,
            Error::Convergence(_) | Error::DegenerateData(_) | Error::NonFiniteLoss { .. } => {
                ErrorClass::Numerical
            }
            _ => ErrorClass::Data,
        }
    }
}
