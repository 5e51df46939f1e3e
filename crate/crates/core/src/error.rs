//! Error type shared by all modules of the toolkit.

use std::path::PathBuf;

use thiserror::Error;

use crate::volume::{Grid, ScalarKind};

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o failure on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("unsupported NIfTI datatype code {0}")]
    UnsupportedDatatype(i16),

    #[error("corrupt NIfTI header: {0}")]
    CorruptHeader(String),

    #[error("dimension mismatch: header promises {expected} voxels, payload holds {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("non-finite values in {0}")]
    NonFiniteData(String),

    #[error("value {value} does not fit scalar kind {kind}")]
    RangeOverflow { value: f64, kind: ScalarKind },

    #[error("grid mismatch: {left} vs {right}")]
    GridMismatch { left: Grid, right: Grid },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("duplicate region entry: {0}")]
    DuplicateRegion(String),

    #[error("unknown category token {token:?} at line {line} (expected C1, C2 or C3)")]
    UnknownCategoryToken { line: usize, token: String },

    #[error("label map has no nonzero labels")]
    EmptyLabelMap,

    #[error("empty input: {0}")]
    EmptyInput(String),

    #[error("input contains a single class only; need both labels")]
    SingleClassInput,

    #[error("no positive records in input")]
    NoPositives,

    #[error("crop {requested:?} does not fit inside volume dims {available:?}")]
    CropTooLarge {
        requested: (usize, usize, usize),
        available: (usize, usize, usize),
    },

    #[error("geometry for region {region:?} out of bounds: {detail}")]
    OutOfBoundsGeometry { region: String, detail: String },

    #[error("unknown region: {0}")]
    UnknownRegion(String),

    #[error("empty group: {0}")]
    EmptyGroup(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid volume: {0}")]
    InvalidVolume(String),

    #[error("malformed JSON in {path}: {message}")]
    MalformedJson { path: PathBuf, message: String },
}

impl Error {
    /// Wrap an `std::io::Error` together with the offending path.
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
