use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: file is empty (no header row)")]
    EmptyFile { path: PathBuf },

    #[error("{path}: row {row} has {found} cells, header has {expected}")]
    RaggedRow {
        path: PathBuf,
        row: usize,
        found: usize,
        expected: usize,
    },

    #[error("{path}: malformed CSV: {message}")]
    Csv { path: PathBuf, message: String },

    #[error("label column `{0}` not found in header")]
    MissingLabelColumn(String),

    #[error("duplicate column name `{0}` in header")]
    DuplicateColumn(String),

    #[error("column `{0}` not found")]
    MissingColumn(String),

    #[error("column mismatch: {0}")]
    ColumnMismatch(String),

    #[error("unseen category `{value}` in column `{column}`")]
    UnseenCategory { column: String, value: String },

    #[error("row {row}: column `{column}` holds a missing or non-finite value")]
    NonFiniteInput { row: usize, column: String },

    #[error("empty row set")]
    EmptyRows,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("class id {id} out of range for {classes} classes")]
    ClassOutOfRange { id: usize, classes: usize },

    #[error("AUC undefined: no class has both positive and negative samples")]
    AucUndefined,

    #[error("model format error: {0}")]
    Format(String),

    #[error("unsupported model version {found} (this build reads version {supported})")]
    UnsupportedVersion { found: u32, supported: u32 },

    #[error("model file corrupt: checksum mismatch")]
    ChecksumMismatch,
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit status for this error: 1 usage, 2 data, 3 I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Io { .. } => 3,
            Error::InvalidParameter(_) => 1,
            _ => 2,
        }
    }
}
