use std::path::PathBuf;

use thiserror::Error;

/// Broad failure category, used by the command-line front end to pick an exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Usage,
    Data,
    Solver,
    Io,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid label {value:?} at line {line} (expected +1, 1 or -1)")]
    InvalidLabel { line: usize, value: String },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("input file not found: {}", .0.display())]
    MissingInput(PathBuf),

    #[error("empty dataset: {0}")]
    Empty(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("task {task} has no {class} samples")]
    MissingClass { task: i64, class: &'static str },

    #[error("duplicate task id {0}")]
    DuplicateTask(i64),

    #[error("unknown task id {0}")]
    UnknownTask(i64),

    #[error("cannot build {folds} folds: task {task} has only {available} {class} samples")]
    TooFewForFolds {
        folds: usize,
        task: i64,
        class: &'static str,
        available: usize,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("malformed table: {0}")]
    Table(String),

    #[error("friedman statistic undefined: {0}")]
    FriedmanUndefined(String),

    #[error("explicit hyperplanes only exist for the linear kernel; use decision_values instead")]
    NotLinear,

    #[error("cholesky factorization of the regularized quadratic form failed")]
    Factorization,

    #[error("non-finite iterate at ADMM iteration {0}")]
    Divergence(usize),

    #[error("reference solver did not reach tolerance after {iterations} iterations (projected gradient norm {gradient_norm:e})")]
    NotConverged {
        iterations: usize,
        gradient_norm: f64,
        best: Vec<f64>,
    },

    #[error("unsupported model format version {0}")]
    FormatVersion(u32),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::InvalidParameter(_) => ErrorKind::Usage,
            Error::Factorization | Error::Divergence(_) | Error::NotConverged { .. } => {
                ErrorKind::Solver
            }
            Error::Io { .. } => ErrorKind::Io,
            _ => ErrorKind::Data,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
