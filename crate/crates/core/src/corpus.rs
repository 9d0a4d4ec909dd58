//! Corpus ingestion, weighted mixture sampling, and file-level sharding.
//!
//! Documents come from `.jsonl` files (one object per line with a `"text"`
//! field) or plain `.txt` files (one document per file), always in
//! deterministic path-sorted, line-ordered order. Mixture sampling interleaves
//! per-source streams with a weighted round-robin over byte accumulators:
//! the next document always comes from the source furthest behind its
//! normalized byte share, so achieved shares track the requested weights
//! without random draws and the stream is reproducible byte-for-byte.
//!
//! Sharding partitions corpus files (not records) across workers so loading
//! is embarrassingly parallel: each worker stats and reads only its own file
//! subset.

use std::collections::VecDeque;
use std::fs;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One corpus source in a mixture, with its sampling weight and slice tags.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CorpusSource {
    pub name: String,
    pub paths: Vec<PathBuf>,
    /// Raw mixture weight in (0, 1]; normalized across the mixture.
    pub weight: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub language: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub domain: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reasoning: Option<bool>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MixtureSpec {
    pub sources: Vec<CorpusSource>,
    /// Stop once this many bytes have been emitted.
    pub total_bytes: u64,
    #[serde(default)]
    pub seed: u64,
}

impl MixtureSpec {
    pub fn load(path: &Path) -> Result<Self> {
        Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.sources.is_empty() {
            return Err(Error::ConfigInvalid("mixture has no sources".into()));
        }
        if self.total_bytes == 0 {
            return Err(Error::ConfigInvalid("total_bytes must be positive".into()));
        }
        for source in &self.sources {
            if !(source.weight > 0.0 && source.weight <= 1.0) {
                return Err(Error::ConfigInvalid(format!(
                    "source {:?} weight {} outside (0, 1]",
                    source.name, source.weight
                )));
            }
            if source.paths.is_empty() {
                return Err(Error::ConfigInvalid(format!("source {:?} has no paths", source.name)));
            }
        }
        Ok(())
    }
}

/// A document drawn by the mixture sampler.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledDocument {
    pub text: String,
    /// Training weight. The interleaving sampler achieves oversampling by
    /// selection frequency, so emitted weights are 1.0.
    pub weight: f64,
    pub source: String,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct SourceStats {
    pub name: String,
    pub requested_weight: f64,
    pub normalized_weight: f64,
    pub achieved_bytes: u64,
    pub achieved_share: f64,
    pub malformed_count: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct MixtureStats {
    pub sources: Vec<SourceStats>,
    pub total_bytes: u64,
    pub seed: u64,
}

/// Streams documents from files in path-sorted, line-ordered order.
///
/// Malformed JSONL lines (bad JSON, or no string `"text"` field) are skipped
/// and counted rather than failing the stream; empty documents are skipped
/// silently.
pub struct DocumentIter {
    pending: VecDeque<PathBuf>,
    lines: Option<std::io::Lines<BufReader<fs::File>>>,
    current_path: PathBuf,
    malformed: u64,
}

/// Opens the given files as a document stream. Paths are sorted first, so the
/// stream order does not depend on the argument order.
pub fn load_documents(paths: &[PathBuf]) -> DocumentIter {
    let mut sorted: Vec<PathBuf> = paths.to_vec();
    sorted.sort();
    DocumentIter {
        pending: sorted.into(),
        lines: None,
        current_path: PathBuf::new(),
        malformed: 0,
    }
}

impl DocumentIter {
    /// Malformed-line count observed so far.
    pub fn malformed_count(&self) -> u64 {
        self.malformed
    }

    fn next_document(&mut self) -> Option<Result<String>> {
        loop {
            if let Some(lines) = &mut self.lines {
                match lines.next() {
                    Some(Ok(line)) => {
                        if line.trim().is_empty() {
                            continue;
                        }
                        match parse_jsonl_line(&line) {
                            Some(text) if !text.is_empty() => return Some(Ok(text)),
                            Some(_) => continue,
                            None => {
                                self.malformed += 1;
                                continue;
                            }
                        }
                    }
                    Some(Err(e)) => return Some(Err(e.into())),
                    None => {
                        self.lines = None;
                        continue;
                    }
                }
            }
            let path = self.pending.pop_front()?;
            let is_jsonl = matches!(
                path.extension().and_then(|e| e.to_str()),
                Some("jsonl") | Some("ndjson")
            );
            if is_jsonl {
                match fs::File::open(&path) {
                    Ok(file) => {
                        self.current_path = path;
                        self.lines = Some(BufReader::new(file).lines());
                    }
                    Err(e) => return Some(Err(e.into())),
                }
            } else {
                // Any other extension: the whole file is one document.
                match fs::read_to_string(&path) {
                    Ok(text) if text.is_empty() => continue,
                    Ok(text) => return Some(Ok(text)),
                    Err(e) => return Some(Err(e.into())),
                }
            }
        }
    }
}

fn parse_jsonl_line(line: &str) -> Option<String> {
    let value: serde_json::Value = serde_json::from_str(line).ok()?;
    Some(value.get("text")?.as_str()?.to_owned())
}

impl Iterator for DocumentIter {
    type Item = Result<String>;

    fn next(&mut self) -> Option<Self::Item> {
        self.next_document()
    }
}

/// Draws documents source-interleaved until the byte budget is met.
///
/// Deterministic for a fixed spec: the next document always comes from the
/// source with the smallest consumed-bytes-to-weight ratio. Errors with
/// `SourceExhausted` if any source empties before the budget is reached.
pub fn sample_mixture(spec: &MixtureSpec) -> Result<(Vec<SampledDocument>, MixtureStats)> {
    spec.validate()?;
    let weight_sum: f64 = spec.sources.iter().map(|s| s.weight).sum();
    let normalized: Vec<f64> = spec.sources.iter().map(|s| s.weight / weight_sum).collect();

    let mut readers: Vec<DocumentIter> =
        spec.sources.iter().map(|s| load_documents(&s.paths)).collect();
    let mut consumed: Vec<u64> = vec![0; spec.sources.len()];
    let mut emitted: u64 = 0;
    let mut out = Vec::new();

    while emitted < spec.total_bytes {
        // Furthest-behind source: smallest bytes/weight, ties to lowest index.
        let mut pick = 0;
        let mut best = f64::INFINITY;
        for (i, &bytes) in consumed.iter().enumerate() {
            let virtual_time = bytes as f64 / normalized[i];
            if virtual_time < best {
                best = virtual_time;
                pick = i;
            }
        }
        match readers[pick].next() {
            Some(Ok(text)) => {
                let bytes = text.len() as u64;
                consumed[pick] += bytes;
                emitted += bytes;
                out.push(SampledDocument {
                    text,
                    weight: 1.0,
                    source: spec.sources[pick].name.clone(),
                });
            }
            Some(Err(e)) => return Err(e),
            None => {
                return Err(Error::SourceExhausted {
                    name: spec.sources[pick].name.clone(),
                    achieved_bytes: consumed[pick],
                    target_bytes: (normalized[pick] * spec.total_bytes as f64) as u64,
                });
            }
        }
    }

    let stats = MixtureStats {
        sources: spec
            .sources
            .iter()
            .enumerate()
            .map(|(i, source)| SourceStats {
                name: source.name.clone(),
                requested_weight: source.weight,
                normalized_weight: normalized[i],
                achieved_bytes: consumed[i],
                achieved_share: if emitted > 0 {
                    consumed[i] as f64 / emitted as f64
                } else {
                    0.0
                },
                malformed_count: readers[i].malformed_count(),
            })
            .collect(),
        total_bytes: emitted,
        seed: spec.seed,
    };
    Ok((out, stats))
}

/// Assigns corpus files to one worker of `world_size`, balancing total file
/// bytes greedily: largest file first, onto the currently lightest worker.
///
/// Subsets across all workers are disjoint and cover the input. Deterministic.
pub fn shard_files(
    paths: &[PathBuf],
    worker_index: usize,
    world_size: usize,
) -> Result<Vec<PathBuf>> {
    if world_size == 0 || worker_index >= world_size {
        return Err(Error::InvalidRank {
            rank: worker_index,
            world_size,
        });
    }
    let mut sized: Vec<(u64, PathBuf)> = Vec::with_capacity(paths.len());
    for path in paths {
        sized.push((fs::metadata(path)?.len(), path.clone()));
    }
    // Largest first; path order breaks size ties deterministically.
    sized.sort_by(|a, b| b.0.cmp(&a.0).then_with(|| a.1.cmp(&b.1)));

    let mut loads: Vec<u64> = vec![0; world_size];
    let mut mine = Vec::new();
    for (bytes, path) in sized {
        let lightest = (0..world_size).min_by_key(|&w| (loads[w], w)).expect("world_size > 0");
        loads[lightest] += bytes;
        if lightest == worker_index {
            mine.push(path);
        }
    }
    mine.sort();
    Ok(mine)
}
