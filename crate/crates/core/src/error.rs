use std::path::PathBuf;

/// Error type shared by ingestion, indexing, scoring, learning, and the CLI.
///
/// The CLI maps these onto exit codes: usage problems are caught by the
/// argument parser (exit 1), everything here is a data error (exit 2) except
/// `VerificationFailed` (exit 3).
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed record in {path} at byte {offset}, doc ordinal {ordinal}: {msg}")]
    MalformedRecord {
        path: PathBuf,
        offset: u64,
        ordinal: usize,
        msg: String,
    },

    #[error("duplicate doc id {doc_id:?}")]
    DuplicateDocId { doc_id: String },

    #[error("parse error in {path} at line {line}: {msg}")]
    ParseLine {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("unknown doc id {doc_id:?}")]
    UnknownDocId { doc_id: String },

    #[error("empty collection: no tokens indexed")]
    EmptyCollection,

    #[error("empty query")]
    EmptyQuery,

    #[error("query has fewer than two terms; factor graph is degenerate")]
    DegenerateFactorGraph,

    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    #[error("empty training set")]
    EmptyTrainSet,

    #[error("fold assignment problem: {0}")]
    BadFolds(String),

    #[error("index file {path}: {msg}")]
    BadIndexFile { path: PathBuf, msg: String },

    #[error("verification failed: {0}")]
    VerificationFailed(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
