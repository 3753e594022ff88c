use std::path::PathBuf;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("empty input file")]
    EmptyFile,

    #[error("ragged rows: line {line} has {found} fields, expected {expected}")]
    RaggedRows {
        line: usize,
        expected: usize,
        found: usize,
    },

    #[error("non-numeric feature field {value:?} at line {line}, column {column}")]
    NonNumericField {
        line: usize,
        column: usize,
        value: String,
    },

    #[error("unknown generator kind {0:?}")]
    UnknownKind(String),

    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("cluster {0} has zero total membership weight")]
    DeadCluster(usize),

    #[error("label sequences have different lengths ({0} vs {1})")]
    LengthMismatch(usize, usize),

    #[error("empty label sequence")]
    EmptyInput,

    #[error("metric requires at least {0} samples")]
    TooFewSamples(usize),

    #[error("no candidate plateau in the path; shrink epsilon or raise max_levels")]
    NoPlateau,
}

pub type Result<T> = std::result::Result<T, Error>;
