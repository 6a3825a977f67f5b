use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {op}: expected {expected}, got {got}")]
    Dimension {
        op: &'static str,
        expected: String,
        got: String,
    },

    #[error("non-finite value at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("matrix is not symmetric (max asymmetry {asymmetry:e})")]
    NotSymmetric { asymmetry: f64 },

    #[error(
        "matrix is singular or indefinite (smallest eigenvalue {min_eigenvalue:e}); \
         increase the ridge term"
    )]
    Singular { min_eigenvalue: f64 },

    #[error("{algorithm} did not converge after {iterations} sweeps")]
    NoConvergence {
        algorithm: &'static str,
        iterations: usize,
    },

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("calibration windows cannot be paired: {0}")]
    Pairing(String),

    #[error("insufficient calibration coverage for gestures {gestures:?}: {detail}")]
    CalibrationCoverage { gestures: Vec<usize>, detail: String },

    #[error("training failed: {0}")]
    Training(String),

    #[error("invalid data: {0}")]
    Data(String),

    #[error("{path}: row {row}: {message}")]
    Ingest {
        path: PathBuf,
        row: usize,
        message: String,
    },

    #[error("malformed model file: {0}")]
    ModelFormat(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("day {day}: {source}")]
    Day {
        day: String,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn dim(op: &'static str, expected: impl ToString, got: impl ToString) -> Self {
        Error::Dimension {
            op,
            expected: expected.to_string(),
            got: got.to_string(),
        }
    }

    /// Wraps an error with the session it occurred in.
    pub fn in_day(self, day: impl ToString) -> Self {
        Error::Day {
            day: day.to_string(),
            source: Box::new(self),
        }
    }
}
