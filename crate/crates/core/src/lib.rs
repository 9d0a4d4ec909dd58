//! Byte-level BPE tokenizer toolkit.
//!
//! A trainer, codec, chat-template engine, weighted corpus sampler, and
//! bytes-per-token benchmark harness built around one design: start from the
//! 256 raw bytes so any input round-trips exactly, isolate every digit
//! codepoint, preserve whitespace runs, and oversample target languages in
//! the training mixture so the learned vocabulary favors them.
//!
//! ```no_run
//! use tokkit::{codec, trainer::{train, TrainerConfig}};
//!
//! # fn main() -> Result<(), tokkit::Error> {
//! let config = TrainerConfig { target_vocab: 4096, ..TrainerConfig::default() };
//! let model = train([("안녕하세요 world", 1.0)], &config)?;
//! let ids = codec::encode("안녕하세요".as_bytes(), &model, false);
//! assert_eq!(codec::decode(&ids, &model)?, "안녕하세요".as_bytes());
//! # Ok(())
//! # }
//! ```

pub mod bench;
pub mod codec;
pub mod corpus;
pub mod error;
pub mod model;
pub mod pretokenize;
pub mod template;
pub mod trainer;

pub use error::{Error, Result};
pub use model::TokenizerModel;
