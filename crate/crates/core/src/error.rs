//! Crate-wide error type.
//!
//! Every fallible public operation returns [`Result`]. Variants carry enough
//! context (file, row, column, expected/actual shapes) to diagnose a failure
//! without a debugger; row numbers refer to 1-based *data* rows, i.e. the
//! header line of a CSV file is not counted.

use std::path::PathBuf;

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// All errors produced by this crate.
#[derive(Debug, Error)]
pub enum Error {
    /// Filesystem problem while reading or writing `path`.
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// Low-level CSV syntax problem (unbalanced quotes, ragged rows, ...).
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    /// A column requested by name does not exist in the header.
    #[error("column {name:?} not found in header")]
    MissingColumn { name: String },

    /// The header lists the same column name twice.
    #[error("duplicate column {name:?} in header")]
    DuplicateColumn { name: String },

    /// A cell could not be parsed as a number.
    #[error("row {row}, column {column:?}: cannot parse {value:?} as a number")]
    NonNumericCell {
        row: usize,
        column: String,
        value: String,
    },

    /// A timestamp cell could not be parsed.
    #[error("row {row}: cannot parse {value:?} as an ISO-8601 timestamp")]
    BadTimestamp { row: usize, value: String },

    /// A non-finite value (NaN or infinity) showed up where finite data is required.
    #[error("non-finite value in {context}")]
    NonFinite { context: String },

    /// Two containers that must agree in shape do not.
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    /// A parameter or configuration value is out of its documented domain.
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    /// A requested split would leave one of the partitions empty.
    #[error("split would leave {name:?} empty ({rows} rows total)")]
    EmptySplit { name: &'static str, rows: usize },

    /// A mask operation would remove every feature.
    #[error("mask would remove every feature")]
    EmptyMask,

    /// A mask bit-vector contained something other than 0 or 1.
    #[error("mask bits must be 0 or 1 (found {found})")]
    NotBinary { found: f64 },

    /// A mask update tried to re-activate a feature that was already removed.
    #[error("masks may only remove features; bit {index} went from 0 back to 1")]
    MaskRegrew { index: usize },

    /// Training was asked to fit on an empty matrix.
    #[error("cannot fit on an empty dataset")]
    EmptyTrainingData,

    /// Binary-classification training data contained a single class.
    #[error("classification targets contain a single class")]
    SingleClass,

    /// Classification targets must be 0 or 1.
    #[error("row {row}: classification target {value} is not 0 or 1")]
    BadLabel { row: usize, value: f64 },

    /// A model was applied to a matrix with the wrong number of columns.
    #[error("model expects {expected} feature columns, got {got}")]
    FeatureCountMismatch { expected: usize, got: usize },

    /// A probability left [0, 1] by more than the documented tolerance.
    #[error("probability {value} outside [0, 1] in {context}")]
    ProbabilityRange { value: f64, context: String },

    /// Feature importance was requested from a model without split gains.
    #[error("feature importance requires a tree model, got {got}")]
    ImportanceUnsupported { got: &'static str },

    /// A grid search was started with no candidates.
    #[error("grid search over an empty grid")]
    EmptyGrid,

    /// Every cell of an experiment failed; carries the first failure.
    #[error("all {cells} experiment cells failed; first error: {first}")]
    AllCellsFailed { cells: usize, first: String },

    /// Report verification found a mismatch between stored and recomputed values.
    #[error("report verification failed: {0}")]
    ReportMismatch(String),

    /// JSON (de)serialization failure for models, reports, or configs.
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    /// TOML configuration parse failure.
    #[error("config parse error: {0}")]
    TomlParse(#[from] toml::de::Error),
}

impl Error {
    /// Convenience constructor for [`Error::Io`].
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Convenience constructor for [`Error::NonFinite`].
    pub fn non_finite(context: impl Into<String>) -> Self {
        Error::NonFinite {
            context: context.into(),
        }
    }

    /// Convenience constructor for [`Error::InvalidConfig`].
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidConfig(msg.into())
    }

    /// Convenience constructor for [`Error::ShapeMismatch`].
    pub fn shape(msg: impl Into<String>) -> Self {
        Error::ShapeMismatch(msg.into())
    }
}
