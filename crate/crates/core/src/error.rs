//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// The training corpus yielded no documents.
    #[error("corpus is empty: no documents")]
    CorpusEmpty,

    /// A configuration value violates its invariants.
    #[error("invalid config: {0}")]
    ConfigInvalid(String),

    /// The same special token was registered twice.
    #[error("duplicate special token: {0:?}")]
    DuplicateSpecial(String),

    /// A token id does not exist in the model.
    #[error("token id {id} out of range (vocab size {vocab_size})")]
    IdOutOfRange { id: u32, vocab_size: u32 },

    /// A conversation violates a structural invariant; the violated rule is named.
    #[error("invalid conversation: {0}")]
    InvalidConversation(String),

    /// Template text does not conform to the rendering grammar.
    #[error("grammar error at byte {offset}: {message}")]
    Grammar { offset: usize, message: String },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    /// A corpus record does not match the expected schema.
    #[error("schema error in {path}: {message}")]
    Schema { path: String, message: String },

    /// A mixture source ran out of documents before meeting its byte share.
    #[error("source {name:?} exhausted before meeting its share (achieved {achieved_bytes} of ~{target_bytes} bytes)")]
    SourceExhausted {
        name: String,
        achieved_bytes: u64,
        target_bytes: u64,
    },

    /// Worker rank outside `[0, world_size)`.
    #[error("invalid rank {rank} for world size {world_size}")]
    InvalidRank { rank: usize, world_size: usize },

    /// bytes-per-token is undefined for an empty encoding.
    #[error("empty encoding: bytes-per-token is undefined for empty text")]
    EmptyEncoding,

    /// A benchmark slice produced no measurable documents.
    #[error("empty corpus for benchmark slice {0:?}")]
    EmptyCorpus(String),

    /// Relative gain against a zero baseline.
    #[error("divide by zero: baseline bytes-per-token must be positive")]
    DivideByZero,

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    /// A model file failed well-formedness validation.
    #[error("malformed model: {0}")]
    ModelInvalid(String),
}
