//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("operation {index} rejected: {reason}")]
    BadOperation { index: usize, reason: String },

    #[error("knowledge file corrupt at line {line}: {reason}")]
    CorruptKnowledgeFile { line: usize, reason: String },

    #[error("unparseable url {input:?}: {reason}")]
    BadUrl { input: String, reason: String },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("world spec invalid: {0}")]
    WorldSpec(String),

    #[error("oracle script invalid: {0}")]
    OracleScript(String),

    #[error("backend transport failure: {0}")]
    Transport(String),

    #[error("backend unreachable at startup: {0}")]
    Startup(String),

    #[error("model refused and gateway.on_refusal=abort")]
    RefusalAbort,

    #[error("verification file references unknown keys: {}", .0.join(", "))]
    UnknownVerificationKeys(Vec<String>),

    #[error("schema version mismatch: expected {expected}, found {found}")]
    SchemaMismatch { expected: String, found: String },

    #[error("not a supported media container: {0}")]
    UnsupportedMedia(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
