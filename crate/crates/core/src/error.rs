use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// A malformed or non-finite value in an input file. `row` counts data rows
    /// from 1 (the header is not a row); `line` is the physical line number.
    #[error("parse error at row {row} (line {line}): {message}")]
    Parse {
        row: usize,
        line: usize,
        message: String,
    },

    #[error("timestamps out of order at row {row}: {prev} followed by {next}")]
    Ordering { row: usize, prev: f64, next: f64 },

    #[error("schema error: {0}")]
    Schema(String),

    #[error("frame error: {0}")]
    Frame(String),

    #[error("alignment error: {0}")]
    Alignment(String),

    #[error("empty window")]
    EmptyWindow,

    #[error("shape mismatch: expected {expected}, got {actual}")]
    Shape { expected: usize, actual: usize },

    #[error("degenerate data: {0}")]
    DegenerateData(String),

    #[error("training diverged at epoch {epoch}: loss is {loss}")]
    Divergence { epoch: usize, loss: f64 },

    #[error("empty data: {0}")]
    EmptyData(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("serialization error: {0}")]
    Serialization(String),
}

impl Error {
    /// I/O failure tagged with the path involved.
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
