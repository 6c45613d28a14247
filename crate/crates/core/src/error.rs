use std::path::PathBuf;

use thiserror::Error;

/// Errors surfaced by evaluation, configuration validation, and output I/O.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("non-finite {kind} value {value} at u={point:?}{}", match .disturbance {
        Some(d) => format!(", delta={d:?}"),
        None => String::new(),
    })]
    NonFinite {
        kind: &'static str,
        value: f64,
        point: Vec<f64>,
        disturbance: Option<Vec<f64>>,
    },

    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    #[error("invalid {field}: {reason}")]
    InvalidConfig { field: &'static str, reason: String },

    #[error("empty disturbance batch")]
    EmptyBatch,

    #[error("empty candidate set")]
    EmptyCandidates,

    #[error("oracle sample count {got} is below the floor of {floor}")]
    OracleSampleFloor { got: u64, floor: u64 },

    #[error("iteration {iteration}: {source}")]
    Iteration {
        iteration: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("unsupported plot: {0}")]
    UnsupportedPlot(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed CSV at line {line}: {reason}")]
    Csv { line: usize, reason: String },
}

impl Error {
    /// True for errors caused by bad user input rather than runtime failure;
    /// the CLI maps these to exit status 2.
    pub fn is_config(&self) -> bool {
        matches!(
            self,
            Error::InvalidConfig { .. } | Error::InvalidDomain(_) | Error::OracleSampleFloor { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
