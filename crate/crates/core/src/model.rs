//! Trained tokenizer artifact: byte alphabet, ordered merge list, special tokens.
//!
//! Token id layout is total and gap-free: the 256 raw bytes occupy `[0, 256)`,
//! merged tokens occupy `[256, 256 + merges)` in rank order, and special tokens
//! sit at the top of the id space in table order.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use aho_corasick::{AhoCorasick, MatchKind};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One learned pair replacement. Rank is the position in learning order and
/// governs encoding priority.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Merge {
    pub left: Vec<u8>,
    pub right: Vec<u8>,
    pub rank: u32,
}

impl Merge {
    pub fn merged(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.left.len() + self.right.len());
        out.extend_from_slice(&self.left);
        out.extend_from_slice(&self.right);
        out
    }
}

/// A special token together with its assigned id.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpecialEntry {
    pub text: String,
    pub id: u32,
}

/// Immutable trained model. Safe to share across threads.
#[derive(Debug)]
pub struct TokenizerModel {
    merges: Vec<Merge>,
    specials: Vec<String>,
    unicode_version: String,
    config_digest: String,
    // Derived lookup state, rebuilt on construction.
    vocab: Vec<Vec<u8>>,
    pair_ranks: HashMap<(u32, u32), u32>,
    merge_targets: Vec<u32>,
    special_ids: HashMap<String, u32>,
    special_matcher: Option<AhoCorasick>,
}

/// On-disk JSON schema. Field order is fixed so that identical models always
/// serialize to byte-identical files.
#[derive(Serialize, Deserialize)]
struct ModelFile {
    version: u32,
    unicode_version: String,
    base: String,
    merges: Vec<(String, String)>,
    specials: Vec<String>,
    config_digest: String,
}

const MODEL_FILE_VERSION: u32 = 1;
const MODEL_BASE: &str = "bytes-256";

impl TokenizerModel {
    /// Builds a model from a rank-ordered merge pair list and a special-token
    /// table, validating well-formedness.
    pub fn from_parts(
        pairs: Vec<(Vec<u8>, Vec<u8>)>,
        specials: Vec<String>,
        unicode_version: String,
        config_digest: String,
    ) -> Result<Self> {
        let merges: Vec<Merge> = pairs
            .into_iter()
            .enumerate()
            .map(|(rank, (left, right))| Merge {
                left,
                right,
                rank: rank as u32,
            })
            .collect();

        // Replay merges in rank order: every constituent must be a single byte
        // or the output of an earlier merge.
        let mut vocab: Vec<Vec<u8>> = (0u16..256).map(|b| vec![b as u8]).collect();
        let mut canonical: HashMap<Vec<u8>, u32> = vocab
            .iter()
            .enumerate()
            .map(|(id, bytes)| (bytes.clone(), id as u32))
            .collect();
        let mut pair_ranks = HashMap::with_capacity(merges.len());
        let mut merge_targets = Vec::with_capacity(merges.len());
        for merge in &merges {
            if merge.left.is_empty() || merge.right.is_empty() {
                return Err(Error::ModelInvalid(format!(
                    "merge {} has an empty side",
                    merge.rank
                )));
            }
            let left_id = *canonical.get(&merge.left).ok_or_else(|| {
                Error::ModelInvalid(format!(
                    "merge {} left side is not constructible from earlier merges",
                    merge.rank
                ))
            })?;
            let right_id = *canonical.get(&merge.right).ok_or_else(|| {
                Error::ModelInvalid(format!(
                    "merge {} right side is not constructible from earlier merges",
                    merge.rank
                ))
            })?;
            if pair_ranks.insert((left_id, right_id), merge.rank).is_some() {
                return Err(Error::ModelInvalid(format!(
                    "merge {} duplicates an earlier pair",
                    merge.rank
                )));
            }
            let new_id = 256 + merge.rank;
            let merged = merge.merged();
            vocab.push(merged.clone());
            // Two different pairs may concatenate to the same byte-string; the
            // earliest id for a given byte-string is the one merges produce.
            let target = *canonical.entry(merged).or_insert(new_id);
            merge_targets.push(target);
        }

        let mut special_ids = HashMap::with_capacity(specials.len());
        for (i, text) in specials.iter().enumerate() {
            if text.is_empty() {
                return Err(Error::ConfigInvalid("special token is empty".into()));
            }
            let id = 256 + merges.len() as u32 + i as u32;
            if special_ids.insert(text.clone(), id).is_some() {
                return Err(Error::DuplicateSpecial(text.clone()));
            }
            vocab.push(text.as_bytes().to_vec());
        }

        let special_matcher = if specials.is_empty() {
            None
        } else {
            Some(
                AhoCorasick::builder()
                    .match_kind(MatchKind::LeftmostLongest)
                    .build(&specials)
                    .map_err(|e| Error::ModelInvalid(format!("special matcher: {e}")))?,
            )
        };

        Ok(Self {
            merges,
            specials,
            unicode_version,
            config_digest,
            vocab,
            pair_ranks,
            merge_targets,
            special_ids,
            special_matcher,
        })
    }

    pub fn vocab_size(&self) -> u32 {
        self.vocab.len() as u32
    }

    pub fn merges(&self) -> &[Merge] {
        &self.merges
    }

    pub fn specials(&self) -> &[String] {
        &self.specials
    }

    pub fn special_entries(&self) -> Vec<SpecialEntry> {
        self.specials
            .iter()
            .map(|text| SpecialEntry {
                text: text.clone(),
                id: self.special_ids[text],
            })
            .collect()
    }

    pub fn unicode_version(&self) -> &str {
        &self.unicode_version
    }

    pub fn config_digest(&self) -> &str {
        &self.config_digest
    }

    /// Byte-string for a token id; specials render as their literal text.
    pub fn token_bytes(&self, id: u32) -> Result<&[u8]> {
        self.vocab.get(id as usize).map(Vec::as_slice).ok_or(Error::IdOutOfRange {
            id,
            vocab_size: self.vocab_size(),
        })
    }

    pub fn special_id(&self, text: &str) -> Option<u32> {
        self.special_ids.get(text).copied()
    }

    pub fn is_special_id(&self, id: u32) -> bool {
        id >= 256 + self.merges.len() as u32 && id < self.vocab_size()
    }

    pub(crate) fn pair_rank(&self, left: u32, right: u32) -> Option<u32> {
        self.pair_ranks.get(&(left, right)).copied()
    }

    pub(crate) fn merge_target(&self, rank: u32) -> u32 {
        self.merge_targets[rank as usize]
    }

    pub(crate) fn special_matcher(&self) -> Option<&AhoCorasick> {
        self.special_matcher.as_ref()
    }

    /// Canonical serialization: identical models produce byte-identical text.
    pub fn to_canonical_json(&self) -> String {
        let file = ModelFile {
            version: MODEL_FILE_VERSION,
            unicode_version: self.unicode_version.clone(),
            base: MODEL_BASE.into(),
            merges: self
                .merges
                .iter()
                .map(|m| (hex::encode(&m.left), hex::encode(&m.right)))
                .collect(),
            specials: self.specials.clone(),
            config_digest: self.config_digest.clone(),
        };
        let mut out = serde_json::to_string(&file).expect("model serialization is infallible");
        out.push('\n');
        out
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: ModelFile = serde_json::from_str(text)?;
        if file.version != MODEL_FILE_VERSION {
            return Err(Error::ModelInvalid(format!(
                "unsupported model file version {}",
                file.version
            )));
        }
        if file.base != MODEL_BASE {
            return Err(Error::ModelInvalid(format!("unsupported base {:?}", file.base)));
        }
        let mut pairs = Vec::with_capacity(file.merges.len());
        for (rank, (left, right)) in file.merges.iter().enumerate() {
            let decode = |side: &str| {
                hex::decode(side)
                    .map_err(|e| Error::ModelInvalid(format!("merge {rank}: bad hex: {e}")))
            };
            pairs.push((decode(left)?, decode(right)?));
        }
        Self::from_parts(pairs, file.specials, file.unicode_version, file.config_digest)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_canonical_json())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        Self::from_json(&text)
    }
}
