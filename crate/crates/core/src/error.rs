use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("empty dataset")]
    EmptyDataset,
    #[error("ragged row {row}: expected {expected} columns, found {found}")]
    RaggedRow {
        row: usize,
        expected: usize,
        found: usize,
    },
    #[error("non-numeric feature at row {row}, column {column}: {value:?}")]
    NonNumeric {
        row: usize,
        column: usize,
        value: String,
    },
    #[error("label column {0} not found")]
    MissingLabelColumn(String),
    #[error("need at least {needed} items, have {found}")]
    TooFewItems { needed: usize, found: usize },
    #[error("class {class} has {available} available items, need {needed}")]
    InsufficientClass {
        class: usize,
        available: usize,
        needed: usize,
    },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("item {index} out of range for {len} items")]
    OutOfRange { index: usize, len: usize },
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("label {label} is not mapped")]
    UnmappedLabel { label: usize },
    #[error("mismatched label spaces: {0} vs {1}")]
    LabelSpaceMismatch(usize, usize),
    #[error("truncated payload: expected {expected} bytes, found {found}")]
    TruncatedPayload { expected: usize, found: usize },
    #[error("bad magic bytes")]
    BadMagic,
    #[error("unsupported version {0}")]
    BadVersion(u16),
    #[error("header mismatch: {0}")]
    HeaderMismatch(String),
}
