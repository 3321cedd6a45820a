use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("node universe is empty")]
    EmptyUniverse,

    #[error("observation set has no records")]
    NoRecords,

    #[error("duplicate node name {name:?} in node universe")]
    DuplicateNode { name: String },

    #[error("unknown node {name} in record {record}")]
    UnknownNode { record: usize, name: String },

    #[error("{count} empty record(s) rejected (first at record {first})")]
    EmptyRecords { count: usize, first: usize },

    #[error("record index {index} out of range for {len} records")]
    RecordOutOfRange { index: usize, len: usize },

    #[error("record {record} has zero probability under the current parameters")]
    ZeroProbability { record: usize },

    #[error("dimension mismatch: {what} (expected {expected}, got {actual})")]
    Dimension {
        what: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("invalid parameters: {0}")]
    InvalidTheta(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("brute-force enumeration limited to {max} nodes, got {n}")]
    TooManyNodes { n: usize, max: usize },

    #[error("degree Gini coefficient is undefined when every degree is zero")]
    AllDegreesZero,

    #[error("no connected graph found after {attempts} attempts")]
    NotConnected { attempts: usize },

    #[error("covert set covers every node; no overt node remains")]
    NoOvertNodes,

    #[error("node {node} out of range for a network of {n} nodes")]
    NodeOutOfRange { node: usize, n: usize },

    #[error("no relevant records (D_t = 0); recall is undefined")]
    NoRelevantRecords,

    #[error("retrieved count {dr} outside 1..={d}")]
    RetrievedOutOfRange { dr: usize, d: usize },

    #[error("{0}")]
    Selection(String),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    /// The message already carries the cause, so no source is chained.
    #[error("{path}: {cause}")]
    Io { path: PathBuf, cause: std::io::Error },

    #[error("{stage}: {inner}")]
    Stage {
        stage: &'static str,
        inner: Box<Error>,
    },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("toml decode: {0}")]
    TomlDecode(#[from] toml::de::Error),

    #[error("toml encode: {0}")]
    TomlEncode(#[from] toml::ser::Error),
}

impl Error {
    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, cause: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            cause,
        }
    }

    pub(crate) fn at_stage(self, stage: &'static str) -> Self {
        Error::Stage {
            stage,
            inner: Box::new(self),
        }
    }
}

pub(crate) fn read_to_string(path: &std::path::Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

pub(crate) fn write_string(path: &std::path::Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).map_err(|e| Error::io(path, e))
}
