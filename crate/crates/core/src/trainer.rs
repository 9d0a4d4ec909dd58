//! BPE trainer: learns an ordered merge list from a weighted corpus stream.
//!
//! The corpus is pre-tokenized once and reduced to a word-frequency map; the
//! merge loop then operates on that map. Pair counts are maintained
//! incrementally (only pairs adjacent to a merged occurrence are updated per
//! round) with a lazily-invalidated max-heap, which is what makes large
//! vocabulary targets tractable. A full-recount oracle built from
//! [`count_pairs`] and [`select_merge`] is used by the test suite to pin the
//! incremental path's behavior.
//!
//! Selection order is a total order: highest weighted count first, ties broken
//! by the lexicographically smallest (left, right) byte-strings. Training is
//! therefore deterministic for a fixed corpus order and configuration, and the
//! first `m` merges do not depend on the target vocabulary size.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap, HashSet};

use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::model::{SpecialEntry, TokenizerModel};
use crate::pretokenize;
use crate::template;

/// Pair of token byte-strings, the unit of merge selection.
pub type TokenPair = (Vec<u8>, Vec<u8>);

/// Documents per parallel word-counting chunk.
const COUNT_CHUNK_DOCS: usize = 256;

#[derive(Debug, Clone)]
pub struct TrainerConfig {
    /// Total vocabulary budget including the 256 byte tokens and specials.
    pub target_vocab: u32,
    /// Special tokens reserved at the top of the id space, in order.
    pub specials: Vec<String>,
    /// Pairs seen fewer (weighted) times than this are never merged.
    pub min_pair_frequency: u64,
    /// Recorded for reproducibility; reserved for sampling.
    pub seed: u64,
    /// Pre-tokens longer than this are excluded from the word-frequency map.
    pub max_pretoken_bytes: usize,
}

impl Default for TrainerConfig {
    fn default() -> Self {
        Self {
            target_vocab: 196_608,
            specials: template::SPECIAL_TOKENS.iter().map(|s| s.to_string()).collect(),
            min_pair_frequency: 2,
            seed: 0,
            max_pretoken_bytes: 1024,
        }
    }
}

impl TrainerConfig {
    pub fn validate(&self) -> Result<()> {
        let floor = 256 + self.specials.len() as u32;
        if self.target_vocab < floor {
            return Err(Error::ConfigInvalid(format!(
                "target_vocab {} below floor {} (256 bytes + {} specials)",
                self.target_vocab,
                floor,
                self.specials.len()
            )));
        }
        if self.min_pair_frequency < 1 {
            return Err(Error::ConfigInvalid("min_pair_frequency must be >= 1".into()));
        }
        if self.max_pretoken_bytes == 0 {
            return Err(Error::ConfigInvalid("max_pretoken_bytes must be positive".into()));
        }
        let mut seen = HashSet::new();
        for s in &self.specials {
            if s.is_empty() {
                return Err(Error::ConfigInvalid("special token is empty".into()));
            }
            if !seen.insert(s.as_bytes()) {
                return Err(Error::DuplicateSpecial(s.clone()));
            }
        }
        Ok(())
    }

    /// Digest of the creation config, recorded in the model file.
    pub fn digest(&self) -> String {
        #[derive(Serialize)]
        struct Canonical<'a> {
            target_vocab: u32,
            specials: &'a [String],
            min_pair_frequency: u64,
            seed: u64,
            max_pretoken_bytes: usize,
        }
        let canonical = serde_json::to_vec(&Canonical {
            target_vocab: self.target_vocab,
            specials: &self.specials,
            min_pair_frequency: self.min_pair_frequency,
            seed: self.seed,
            max_pretoken_bytes: self.max_pretoken_bytes,
        })
        .expect("config serialization is infallible");
        hex::encode(Sha256::digest(canonical))
    }
}

/// Counts every adjacent token pair within every word, weighted by the word's
/// count. Pairs never span word boundaries.
pub fn count_pairs<'a, I>(words: I) -> HashMap<TokenPair, f64>
where
    I: IntoIterator<Item = (&'a [Vec<u8>], f64)>,
{
    let mut counts: HashMap<TokenPair, f64> = HashMap::new();
    for (tokens, count) in words {
        for window in tokens.windows(2) {
            *counts
                .entry((window[0].clone(), window[1].clone()))
                .or_insert(0.0) += count;
        }
    }
    counts
}

/// Picks the pair with the maximal count; ties break to the lexicographically
/// smallest (left, right) byte-strings. Returns `None` when no pair reaches
/// `min_pair_frequency`.
pub fn select_merge(
    pair_counts: &HashMap<TokenPair, f64>,
    min_pair_frequency: u64,
) -> Option<(TokenPair, f64)> {
    let mut best: Option<(&TokenPair, f64)> = None;
    for (pair, &count) in pair_counts {
        match best {
            None => best = Some((pair, count)),
            Some((best_pair, best_count)) => {
                if count > best_count || (count == best_count && pair < best_pair) {
                    best = Some((pair, count));
                }
            }
        }
    }
    match best {
        Some((pair, count)) if count >= min_pair_frequency as f64 => Some((pair.clone(), count)),
        _ => None,
    }
}

/// Assigns each special a unique id at the top of the id space, in order.
pub fn reserve_specials(specials: &[String], merge_count: usize) -> Result<Vec<SpecialEntry>> {
    let mut seen = HashSet::new();
    let mut table = Vec::with_capacity(specials.len());
    for (i, text) in specials.iter().enumerate() {
        if text.is_empty() {
            return Err(Error::ConfigInvalid("special token is empty".into()));
        }
        if !seen.insert(text.as_str()) {
            return Err(Error::DuplicateSpecial(text.clone()));
        }
        table.push(SpecialEntry {
            text: text.clone(),
            id: (256 + merge_count + i) as u32,
        });
    }
    Ok(table)
}

/// Heap entry ordered by count, then by smallest pair bytes. Entries carry the
/// count observed at push time; stale entries are corrected on pop.
struct Candidate {
    count: f64,
    pair: (u32, u32),
    left_bytes: Vec<u8>,
    right_bytes: Vec<u8>,
}

impl PartialEq for Candidate {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Candidate {}
impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        self.count.total_cmp(&other.count).then_with(|| {
            // Reversed: the lexicographically smaller pair wins the max-heap.
            (&other.left_bytes, &other.right_bytes).cmp(&(&self.left_bytes, &self.right_bytes))
        })
    }
}

struct Word {
    tokens: Vec<u32>,
    count: f64,
}

/// Replaces every non-overlapping occurrence of `(left, right)` in `tokens`
/// (leftmost first) with `target`, returning the adjacent-pair count deltas.
fn merge_in_word(tokens: &mut Vec<u32>, left: u32, right: u32, target: u32) -> Vec<((u32, u32), i32)> {
    let mut deltas = Vec::new();
    let mut i = 0;
    while i < tokens.len() {
        if tokens[i] == left && i + 1 < tokens.len() && tokens[i + 1] == right {
            if i > 0 {
                deltas.push(((tokens[i - 1], left), -1));
                deltas.push(((tokens[i - 1], target), 1));
            }
            tokens[i] = target;
            tokens.remove(i + 1);
            if i + 1 < tokens.len() {
                deltas.push(((right, tokens[i + 1]), -1));
                deltas.push(((target, tokens[i + 1]), 1));
            }
            deltas.push(((left, right), -1));
        }
        i += 1;
    }
    deltas
}

/// Reduces documents to a (pre-token bytes -> weighted count) map.
///
/// Chunks are counted in parallel and folded in document order, so the result
/// is independent of thread scheduling.
fn count_words<D: AsRef<[u8]> + Sync>(
    corpus: &[(D, f64)],
    max_pretoken_bytes: usize,
) -> HashMap<Vec<u8>, f64> {
    let chunk_maps: Vec<HashMap<Vec<u8>, f64>> = corpus
        .par_chunks(COUNT_CHUNK_DOCS)
        .map(|chunk| {
            let mut map: HashMap<Vec<u8>, f64> = HashMap::new();
            for (doc, weight) in chunk {
                for pretoken in pretokenize::split(doc.as_ref()) {
                    if pretoken.bytes.len() > max_pretoken_bytes {
                        continue;
                    }
                    match map.get_mut(pretoken.bytes) {
                        Some(count) => *count += weight,
                        None => {
                            map.insert(pretoken.bytes.to_vec(), *weight);
                        }
                    }
                }
            }
            map
        })
        .collect();

    let mut word_freqs: HashMap<Vec<u8>, f64> = HashMap::new();
    for map in chunk_maps {
        for (word, count) in map {
            *word_freqs.entry(word).or_insert(0.0) += count;
        }
    }
    word_freqs
}

/// Learns a merge list from weighted documents up to `config.target_vocab`.
///
/// Stops early when no pair reaches `min_pair_frequency`. Deterministic for a
/// fixed corpus order and config; the serialized model is byte-identical
/// across runs.
pub fn train<D, I>(corpus: I, config: &TrainerConfig) -> Result<TokenizerModel>
where
    D: AsRef<[u8]> + Sync,
    I: IntoIterator<Item = (D, f64)>,
{
    config.validate()?;
    let docs: Vec<(D, f64)> = corpus.into_iter().collect();
    if docs.is_empty() {
        return Err(Error::CorpusEmpty);
    }
    for (_, weight) in &docs {
        if !weight.is_finite() || *weight <= 0.0 {
            return Err(Error::ConfigInvalid(format!("document weight {weight} must be positive")));
        }
    }

    let word_freqs = count_words(&docs, config.max_pretoken_bytes);
    drop(docs);

    let max_merges = (config.target_vocab as usize) - 256 - config.specials.len();
    let pairs = merge_loop(word_freqs, max_merges, config.min_pair_frequency);

    TokenizerModel::from_parts(
        pairs,
        config.specials.clone(),
        pretokenize::unicode_version(),
        config.digest(),
    )
}

fn merge_loop(
    word_freqs: HashMap<Vec<u8>, f64>,
    max_merges: usize,
    min_pair_frequency: u64,
) -> Vec<(Vec<u8>, Vec<u8>)> {
    // Word index order must not depend on hash iteration order.
    let mut entries: Vec<(Vec<u8>, f64)> = word_freqs.into_iter().collect();
    entries.sort_unstable_by(|a, b| a.0.cmp(&b.0));
    let mut words: Vec<Word> = entries
        .into_iter()
        .map(|(bytes, count)| Word {
            tokens: bytes.iter().map(|&b| u32::from(b)).collect(),
            count,
        })
        .collect();

    let mut vocab_bytes: Vec<Vec<u8>> = (0u16..256).map(|b| vec![b as u8]).collect();
    let mut canonical: HashMap<Vec<u8>, u32> = vocab_bytes
        .iter()
        .enumerate()
        .map(|(id, bytes)| (bytes.clone(), id as u32))
        .collect();

    let mut pair_counts: HashMap<(u32, u32), f64> = HashMap::new();
    let mut where_to_update: HashMap<(u32, u32), HashSet<usize>> = HashMap::new();
    for (w, word) in words.iter().enumerate() {
        for pair in word.tokens.windows(2) {
            let pair = (pair[0], pair[1]);
            *pair_counts.entry(pair).or_insert(0.0) += word.count;
            where_to_update.entry(pair).or_default().insert(w);
        }
    }

    let min_count = min_pair_frequency as f64;
    let mut heap: BinaryHeap<Candidate> = pair_counts
        .iter()
        .map(|(&pair, &count)| Candidate {
            count,
            pair,
            left_bytes: vocab_bytes[pair.0 as usize].clone(),
            right_bytes: vocab_bytes[pair.1 as usize].clone(),
        })
        .collect();

    let mut merges: Vec<(Vec<u8>, Vec<u8>)> = Vec::new();
    // Pairs already merged are never selected again, even if token
    // canonicalization later makes the same pair adjacent somewhere new.
    let mut merged_pairs: HashSet<(u32, u32)> = HashSet::new();
    while merges.len() < max_merges {
        // Surface the pair with the current maximal count.
        let top = loop {
            let Some(mut top) = heap.pop() else { break None };
            if merged_pairs.contains(&top.pair) {
                continue;
            }
            let current = pair_counts.get(&top.pair).copied().unwrap_or(0.0);
            if current != top.count {
                if current > 0.0 {
                    top.count = current;
                    heap.push(top);
                }
                continue;
            }
            break Some(top);
        };
        let Some(top) = top else { break };
        if top.count < min_count {
            break;
        }

        let (left, right) = top.pair;
        let new_id = 256 + merges.len() as u32;
        let merged_bytes: Vec<u8> = {
            let mut m = vocab_bytes[left as usize].clone();
            m.extend_from_slice(&vocab_bytes[right as usize]);
            m
        };
        vocab_bytes.push(merged_bytes.clone());
        let target = *canonical.entry(merged_bytes).or_insert(new_id);
        merges.push((top.left_bytes, top.right_bytes));
        merged_pairs.insert(top.pair);

        let mut positions: Vec<usize> = where_to_update
            .remove(&top.pair)
            .map(|set| set.into_iter().collect())
            .unwrap_or_default();
        positions.sort_unstable();

        let mut touched: HashSet<(u32, u32)> = HashSet::new();
        for w in positions {
            let count = words[w].count;
            for (pair, sign) in merge_in_word(&mut words[w].tokens, left, right, target) {
                let entry = pair_counts.entry(pair).or_insert(0.0);
                *entry += f64::from(sign) * count;
                if *entry <= 0.0 {
                    pair_counts.remove(&pair);
                } else if sign > 0 {
                    where_to_update.entry(pair).or_default().insert(w);
                    touched.insert(pair);
                }
            }
        }
        pair_counts.remove(&top.pair);

        // Re-queue pairs whose counts grew, at their settled totals.
        for pair in touched {
            if merged_pairs.contains(&pair) {
                continue;
            }
            if let Some(&count) = pair_counts.get(&pair) {
                heap.push(Candidate {
                    count,
                    pair,
                    left_bytes: vocab_bytes[pair.0 as usize].clone(),
                    right_bytes: vocab_bytes[pair.1 as usize].clone(),
                });
            }
        }
    }
    merges
}
