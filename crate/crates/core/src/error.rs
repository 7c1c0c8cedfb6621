use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Coarse classification used by front ends to pick an exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Config,
    Data,
    Numerical,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("qubit index {index} out of range for width {width}")]
    QubitOutOfRange { index: usize, width: usize },

    #[error("invalid gate: {0}")]
    InvalidGate(String),

    #[error("parameter length mismatch: expected {expected}, got {got}")]
    ParamLength { expected: usize, got: usize },

    #[error("width mismatch: expected {expected} qubits, got {got}")]
    WidthMismatch { expected: usize, got: usize },

    #[error("width {width} exceeds the limit of {limit} qubits")]
    WidthTooLarge { width: usize, limit: usize },

    #[error("qasm line {line}: {msg}")]
    Qasm { line: usize, msg: String },

    #[error("unsupported gate `{0}`")]
    UnsupportedGate(String),

    #[error("topology error: {0}")]
    Topology(String),

    #[error("cannot partition qubits; stuck on residue {residue:?}")]
    InfeasibleCover { residue: Vec<usize> },

    #[error("graph is disconnected: no path between {from} and {to}")]
    Disconnected { from: usize, to: usize },

    #[error("library schema error: {0}")]
    Schema(String),

    #[error("library has no sub-circuit for {0}")]
    EmptyLibrary(String),

    #[error("metric evaluation failed on circuit {circuit}: {msg}")]
    Metric { circuit: String, msg: String },

    #[error("no appendable sub-circuit fits the ansatz")]
    NoAppendable,

    #[error("dataset error: {0}")]
    Dataset(String),

    #[error("training diverged at epoch {epoch}: loss is not finite")]
    Diverged { epoch: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn class(&self) -> ErrorClass {
        match self {
            Error::Diverged { .. } | Error::Metric { .. } => ErrorClass::Numerical,
            Error::Dataset(_) | Error::Io { .. } | Error::Json(_) | Error::Schema(_) => {
                ErrorClass::Data
            }
            _ => ErrorClass::Config,
        }
    }
}
