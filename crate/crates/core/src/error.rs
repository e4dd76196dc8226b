use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid mesh dimensions: {0}")]
    MeshDimensions(String),

    #[error("degenerate triangle {element}: signed area {area:e}")]
    DegenerateElement { element: usize, area: f64 },

    #[error("invalid material: {0}")]
    Material(String),

    #[error("node {0} is not a contact node")]
    NotContactNode(usize),

    #[error("matrix is not positive definite (pivot {pivot} = {value:e})")]
    NotPositiveDefinite { pivot: usize, value: f64 },

    #[error("power iteration did not converge after {iterations} iterations (relative change {change:e})")]
    PowerIteration { iterations: usize, change: f64 },

    #[error("solver diverged: energy {energy:e} fell below floor {floor:e} at iteration {iteration}")]
    Diverged {
        iteration: usize,
        energy: f64,
        floor: f64,
    },

    #[error("quadratic program did not converge: {0}")]
    QpNotConverged(String),

    #[error("active-set oracle: {0}")]
    Oracle(String),

    #[error("empty probe set")]
    EmptyProbes,

    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("config line {line}: {msg}")]
    Config { line: usize, msg: String },

    #[error("parse error in {what}: {msg}")]
    Parse { what: String, msg: String },

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(what: impl Into<String>, msg: impl Into<String>) -> Self {
        Error::Parse {
            what: what.into(),
            msg: msg.into(),
        }
    }
}
