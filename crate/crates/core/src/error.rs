use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

use crate::data::Slice;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dataset is empty")]
    EmptyDataset,

    #[error("no examples or mass in slice {0}")]
    EmptySlice(Slice),

    #[error("feature vector has length {found}, expected {expected}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid population: {0}")]
    InvalidPopulation(String),

    #[error("invalid noise parameters: {0}")]
    InvalidNoise(String),

    #[error("base rate {0} is outside (0, 1)")]
    InvalidBaseRate(f64),

    #[error("corrupted base rate {0} is degenerate (0 or 1)")]
    DegenerateBaseRate(f64),

    #[error("conditional base rates give a zero denominator")]
    DegenerateConditional,

    #[error("epsilon must be positive, got {0}")]
    NonPositiveEpsilon(f64),

    #[error("flip probability {0} is outside (0, 0.5)")]
    OutOfRangeRho(f64),

    #[error("group weight {0} is outside [0.5, 1]")]
    OutOfRangeWeight(f64),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("parse error at row {row}, column {column}: {message}")]
    Parse {
        row: usize,
        column: String,
        message: String,
    },

    #[error("schema error{}: {message}", row.map(|r| format!(" at row {r}")).unwrap_or_default())]
    Schema { row: Option<usize>, message: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by the contents of an input file or dataset
    /// rather than by the caller's parameters or by numerics.
    pub fn is_data_error(&self) -> bool {
        matches!(
            self,
            Error::EmptyDataset
                | Error::EmptySlice(_)
                | Error::DimensionMismatch { .. }
                | Error::InvalidPopulation(_)
                | Error::Parse { .. }
                | Error::Schema { .. }
                | Error::Io { .. }
        )
    }

    /// True for failures of the numerical pipeline on otherwise valid input.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::DegenerateBaseRate(_) | Error::DegenerateConditional)
    }
}
