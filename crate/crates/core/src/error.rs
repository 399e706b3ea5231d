use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("file not found: {}", .0.display())]
    MissingFile(PathBuf),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("label column not found: {0}")]
    LabelColumnNotFound(String),

    #[error("non-numeric value {value:?} in column {column:?} at data row {row}")]
    NonNumericCell { row: usize, column: String, value: String },

    #[error("empty dataset")]
    EmptyDataset,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("label vector contains ABSTAIN at position {0}")]
    AbstainPresent(usize),

    #[error("model is not trained")]
    Untrained,

    #[error("learner kind {0} is not parameter-aggregable")]
    NotParameterAggregable(&'static str),

    #[error("partition failed: {0}")]
    Partition(String),

    #[error("invalid configuration ({key}): {message}")]
    Config { key: String, message: String },

    #[error("client {client}: {source}")]
    Client {
        client: usize,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn config(key: &str, message: impl Into<String>) -> Self {
        Error::Config { key: key.to_string(), message: message.into() }
    }

    pub(crate) fn invalid(message: impl Into<String>) -> Self {
        Error::InvalidArgument(message.into())
    }

    pub(crate) fn for_client(client: usize, source: Error) -> Self {
        Error::Client { client, source: Box::new(source) }
    }
}
