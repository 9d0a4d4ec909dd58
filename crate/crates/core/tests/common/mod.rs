//! Shared fixtures for the integration suites: deterministic synthetic
//! corpora, a full-recount trainer oracle, and random structure generators.

#![allow(dead_code)]

use std::collections::{HashMap, HashSet};
use std::fs;
use std::path::{Path, PathBuf};

use rand::distributions::WeightedIndex;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use tokkit::pretokenize;
use tokkit::template::{Conversation, Message, Role, Segment};
use tokkit::trainer::{count_pairs, select_merge, TokenPair};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

// ---------------------------------------------------------------------------
// Synthetic corpora
// ---------------------------------------------------------------------------

/// Pool of Hangul syllables spread across the U+AC00 block.
fn hangul_syllables(n: usize) -> Vec<char> {
    (0..n)
        .map(|i| char::from_u32(0xAC00 + (i as u32 * 47) % 11_172).unwrap())
        .collect()
}

/// Zipf-ish word pool: `words[i]` is sampled with weight 1/(i+1).
struct WordPool {
    words: Vec<String>,
    dist: WeightedIndex<f64>,
}

impl WordPool {
    fn new(words: Vec<String>) -> Self {
        let dist = WeightedIndex::new((1..=words.len()).map(|i| 1.0 / i as f64)).unwrap();
        Self { words, dist }
    }

    fn korean(rng: &mut ChaCha8Rng) -> Self {
        let syllables = hangul_syllables(300);
        let words = (0..500)
            .map(|_| {
                let len = rng.gen_range(1..=4);
                (0..len).map(|_| *syllables.choose(rng).unwrap()).collect()
            })
            .collect();
        Self::new(words)
    }

    fn english(rng: &mut ChaCha8Rng) -> Self {
        const STEMS: [&str; 40] = [
            "the", "of", "and", "to", "in", "is", "was", "for", "on", "are", "with", "as", "at",
            "by", "be", "this", "have", "from", "or", "had", "not", "but", "what", "all", "were",
            "when", "we", "there", "can", "an", "your", "which", "their", "said", "if", "will",
            "way", "about", "many", "then",
        ];
        let mut words: Vec<String> = STEMS.iter().map(|s| s.to_string()).collect();
        // Longer content words, deterministic nonsense.
        for _ in 0..2_000 {
            let len = rng.gen_range(3..=11);
            let word: String = (0..len)
                .map(|_| (b'a' + rng.gen_range(0..26u8)) as char)
                .collect();
            words.push(word);
        }
        Self::new(words)
    }

    fn multilingual(rng: &mut ChaCha8Rng) -> Self {
        let mut words = Vec::new();
        for _ in 0..160 {
            let len = rng.gen_range(1..=3);
            let word: String = (0..len)
                .map(|_| char::from_u32(0x3040 + rng.gen_range(0..0x60)).unwrap())
                .collect();
            words.push(word);
        }
        for _ in 0..160 {
            let len = rng.gen_range(1..=2);
            let word: String = (0..len)
                .map(|_| char::from_u32(0x4E00 + rng.gen_range(0..0x400)).unwrap())
                .collect();
            words.push(word);
        }
        for _ in 0..180 {
            let len = rng.gen_range(3..=8);
            let word: String = (0..len)
                .map(|_| {
                    let alphabet = "abcdefghijklmnopqrstuvwxyzäöüéèàçßñ";
                    alphabet.chars().nth(rng.gen_range(0..alphabet.chars().count())).unwrap()
                })
                .collect();
            words.push(word);
        }
        Self::new(words)
    }

    fn sentence(&self, rng: &mut ChaCha8Rng, words: usize) -> String {
        let mut out = String::new();
        for i in 0..words {
            if i > 0 {
                out.push(' ');
            }
            out.push_str(&self.words[self.dist.sample(rng)]);
        }
        out.push('.');
        out
    }

    /// Documents totalling at least `min_bytes`.
    fn documents(&self, rng: &mut ChaCha8Rng, min_bytes: usize) -> Vec<String> {
        let mut docs = Vec::new();
        let mut total = 0;
        while total < min_bytes {
            let sentences = rng.gen_range(2..=6);
            let doc: Vec<String> = (0..sentences)
                .map(|_| {
                    let words = rng.gen_range(4..=12);
                    self.sentence(rng, words)
                })
                .collect();
            let doc = doc.join(" ");
            total += doc.len();
            docs.push(doc);
        }
        docs
    }
}

pub fn korean_documents(seed: u64, min_bytes: usize) -> Vec<String> {
    let mut rng = rng(seed);
    let pool = WordPool::korean(&mut rng);
    pool.documents(&mut rng, min_bytes)
}

/// Korean documents from the same word distribution as
/// `korean_documents(pool_seed, ..)` but drawn with a fresh sampling stream,
/// for held-out evaluation slices.
pub fn korean_heldout_documents(pool_seed: u64, sample_seed: u64, min_bytes: usize) -> Vec<String> {
    let pool = WordPool::korean(&mut rng(pool_seed));
    pool.documents(&mut rng(sample_seed), min_bytes)
}

pub fn english_documents(seed: u64, min_bytes: usize) -> Vec<String> {
    let mut rng = rng(seed);
    let pool = WordPool::english(&mut rng);
    pool.documents(&mut rng, min_bytes)
}

pub fn multilingual_documents(seed: u64, min_bytes: usize) -> Vec<String> {
    let mut rng = rng(seed);
    let pool = WordPool::multilingual(&mut rng);
    pool.documents(&mut rng, min_bytes)
}

pub fn code_documents(seed: u64, min_bytes: usize) -> Vec<String> {
    let mut rng = rng(seed);
    let names = ["total", "value", "items", "result", "index", "count", "limit", "offset"];
    let mut docs = Vec::new();
    let mut total = 0;
    while total < min_bytes {
        let a = names.choose(&mut rng).unwrap();
        let b = names.choose(&mut rng).unwrap();
        let n = rng.gen_range(0..100);
        let doc = format!(
            "def compute_{a}({b}):\n    {a} = {n}\n    for item in {b}:\n        {a} += item\n    return {a}\n\nprint(compute_{a}([{m}]))\n",
            a = a,
            b = b,
            n = n,
            m = rng.gen_range(0..1000),
        );
        total += doc.len();
        docs.push(doc);
    }
    docs
}

pub fn math_documents(seed: u64, min_bytes: usize) -> Vec<String> {
    let mut rng = rng(seed);
    let mut docs = Vec::new();
    let mut total = 0;
    while total < min_bytes {
        let terms = rng.gen_range(2..=5);
        let mut expr = String::new();
        let mut sum: i64 = 0;
        for i in 0..terms {
            let v = rng.gen_range(0..10_000i64);
            sum += v;
            if i > 0 {
                expr.push_str(" + ");
            }
            expr.push_str(&v.to_string());
        }
        let doc = format!("solve: {expr} = {sum} and verify the remainder modulo {}", rng.gen_range(2..97));
        total += doc.len();
        docs.push(doc);
    }
    docs
}

pub fn domain_documents(seed: u64, min_bytes: usize) -> Vec<String> {
    let mut rng = rng(seed);
    let terms = [
        "liability", "covenant", "diagnosis", "prognosis", "liquidity", "collateral",
        "jurisdiction", "pathology", "derivative", "indemnity",
    ];
    let mut docs = Vec::new();
    let mut total = 0;
    while total < min_bytes {
        let n = rng.gen_range(5..=12);
        let doc: Vec<&str> = (0..n).map(|_| *terms.choose(&mut rng).unwrap()).collect();
        let doc = format!("the {} shall govern the {}", doc[..n / 2].join(" "), doc[n / 2..].join(" "));
        total += doc.len();
        docs.push(doc);
    }
    docs
}

pub fn write_jsonl(path: &Path, docs: &[String]) {
    let body: String = docs
        .iter()
        .map(|d| format!("{}\n", serde_json::json!({ "text": d })))
        .collect();
    fs::write(path, body).unwrap();
}

/// Writes a six-source fixture mixture (weights 0.40/0.22/0.12/0.10/0.08/0.04)
/// whose sources comfortably cover `total_bytes`, returning the spec path.
pub fn write_mixture_fixture(dir: &Path, total_bytes: u64, seed: u64) -> PathBuf {
    let budget = total_bytes as usize;
    // Weights normalize over 0.96; each source gets a 1.4x safety margin.
    let sized = |weight: f64| ((weight / 0.96) * budget as f64 * 1.4) as usize;
    let sources = [
        ("english", 0.40, english_documents(seed ^ 0xE1, sized(0.40))),
        ("korean", 0.22, korean_documents(seed ^ 0x40, sized(0.22))),
        ("code", 0.12, code_documents(seed ^ 0xC0, sized(0.12))),
        ("math", 0.10, math_documents(seed ^ 0x3A, sized(0.10))),
        ("multilingual", 0.08, multilingual_documents(seed ^ 0x31, sized(0.08))),
        ("domain_specific", 0.04, domain_documents(seed ^ 0xD0, sized(0.04))),
    ];
    let mut spec_sources = Vec::new();
    for (name, weight, docs) in &sources {
        let path = dir.join(format!("{name}.jsonl"));
        write_jsonl(&path, docs);
        spec_sources.push(serde_json::json!({
            "name": name,
            "paths": [path],
            "weight": weight,
            "language": if *name == "korean" { "ko" } else if *name == "english" { "en" } else { "other" },
        }));
    }
    let spec = serde_json::json!({
        "sources": spec_sources,
        "total_bytes": total_bytes,
        "seed": seed,
    });
    let path = dir.join("mixture.json");
    fs::write(&path, serde_json::to_string_pretty(&spec).unwrap()).unwrap();
    path
}

// ---------------------------------------------------------------------------
// Trainer oracle: full recount after every single merge
// ---------------------------------------------------------------------------

/// Word-frequency map built the same way the trainer builds it.
pub fn word_freqs(docs: &[String], max_pretoken_bytes: usize) -> HashMap<Vec<u8>, f64> {
    let mut map: HashMap<Vec<u8>, f64> = HashMap::new();
    for doc in docs {
        for pretoken in pretokenize::split(doc.as_bytes()) {
            if pretoken.bytes.len() > max_pretoken_bytes {
                continue;
            }
            *map.entry(pretoken.bytes.to_vec()).or_insert(0.0) += 1.0;
        }
    }
    map
}

/// Naive trainer: recounts every pair after every merge via the public
/// counting and selection operations. Independent of the incremental path.
pub fn oracle_train(
    word_freqs: &HashMap<Vec<u8>, f64>,
    max_merges: usize,
    min_pair_frequency: u64,
) -> Vec<TokenPair> {
    let mut words: Vec<(Vec<Vec<u8>>, f64)> = word_freqs
        .iter()
        .map(|(bytes, &count)| (bytes.iter().map(|&b| vec![b]).collect(), count))
        .collect();
    words.sort_by(|a, b| a.0.cmp(&b.0));

    let mut merges: Vec<TokenPair> = Vec::new();
    let mut already: HashSet<TokenPair> = HashSet::new();
    while merges.len() < max_merges {
        let mut counts = count_pairs(words.iter().map(|(t, c)| (t.as_slice(), *c)));
        counts.retain(|pair, _| !already.contains(pair));
        let Some(((left, right), _count)) = select_merge(&counts, min_pair_frequency) else {
            break;
        };
        let mut merged = left.clone();
        merged.extend_from_slice(&right);
        for (tokens, _) in &mut words {
            let mut i = 0;
            while i < tokens.len() {
                if tokens[i] == left && i + 1 < tokens.len() && tokens[i + 1] == right {
                    tokens[i] = merged.clone();
                    tokens.remove(i + 1);
                }
                i += 1;
            }
        }
        already.insert((left.clone(), right.clone()));
        merges.push((left, right));
    }
    merges
}

/// Small random corpus (total <= 1 KB) over a deliberately tiny alphabet so
/// merge ties and duplicate byte-strings actually occur.
pub fn small_corpus(rng: &mut ChaCha8Rng) -> Vec<String> {
    const ALPHABETS: [&str; 5] = ["ab", "abc", "한국", "ab1", "ab ."];
    let alphabet: Vec<char> = ALPHABETS.choose(rng).unwrap().chars().collect();
    let budget = rng.gen_range(64..=1000usize);
    let n_docs = rng.gen_range(1..=4usize);
    let mut docs = Vec::new();
    let mut total = 0;
    for _ in 0..n_docs {
        let mut doc = String::new();
        while doc.len() < budget / n_docs {
            for _ in 0..rng.gen_range(1..=6) {
                doc.push(*alphabet.choose(rng).unwrap());
            }
            doc.push(' ');
        }
        // Trim so the whole corpus stays within 1 KB even after UTF-8 growth.
        while total + doc.len() > 1024 {
            doc.pop();
        }
        total += doc.len();
        if !doc.is_empty() {
            docs.push(doc);
        }
    }
    if docs.is_empty() {
        docs.push("ab".into());
    }
    docs
}

// ---------------------------------------------------------------------------
// Random structures
// ---------------------------------------------------------------------------

/// Byte-string generator mixing uniform bytes, random Unicode (Hangul, emoji,
/// controls, CJK), and code snippets.
pub fn random_test_string(rng: &mut ChaCha8Rng) -> Vec<u8> {
    match rng.gen_range(0..4) {
        0 => {
            let len = rng.gen_range(0..300);
            (0..len).map(|_| rng.gen::<u8>()).collect()
        }
        1 => {
            let len = rng.gen_range(0..120);
            let mut out = String::new();
            for _ in 0..len {
                let c = match rng.gen_range(0..6) {
                    0 => char::from(rng.gen_range(0x20..0x7Fu8)),
                    1 => char::from_u32(0xAC00 + rng.gen_range(0..11_172)).unwrap(),
                    2 => char::from_u32(0x1F300 + rng.gen_range(0..0x200)).unwrap(),
                    3 => char::from(rng.gen_range(0x00..0x20u8)),
                    4 => char::from_u32(0x4E00 + rng.gen_range(0..0x1000)).unwrap(),
                    _ => char::from_u32(0x0300 + rng.gen_range(0..0x40)).unwrap(),
                };
                out.push(c);
            }
            out.into_bytes()
        }
        2 => {
            let n = rng.gen_range(0..1000);
            format!(
                "for i in range({n}):\n    total += values[i] * {f:.3}\n    print(total)\n",
                f = rng.gen_range(0.0..10.0)
            )
            .into_bytes()
        }
        _ => {
            let words = rng.gen_range(0..30);
            let mut out = String::new();
            for _ in 0..words {
                out.push_str(match rng.gen_range(0..5) {
                    0 => "한국어",
                    1 => "text",
                    2 => "12345",
                    3 => "🎉",
                    _ => " \n\t ",
                });
            }
            out.into_bytes()
        }
    }
}

fn safe_text(rng: &mut ChaCha8Rng, max_words: usize) -> String {
    const WORDS: [&str; 12] = [
        "answer", "question", "검색", "결과", "value", "because", "따라서", "model", "tool",
        "output", "reason", "step",
    ];
    let n = rng.gen_range(1..=max_words);
    let words: Vec<&str> = (0..n).map(|_| *WORDS.choose(rng).unwrap()).collect();
    words.join(" ")
}

fn canonical_args(rng: &mut ChaCha8Rng) -> String {
    let value = serde_json::json!({
        "query": safe_text(rng, 3),
        "limit": rng.gen_range(1..100),
    });
    value.to_string()
}

/// Valid random conversation: up to 6 turn blocks, at most 3 parallel tool
/// calls per assistant turn, optional think segments.
pub fn random_conversation(rng: &mut ChaCha8Rng) -> Conversation {
    let mut messages = Vec::new();
    if rng.gen_bool(0.5) {
        messages.push(Message {
            role: Role::System,
            segments: vec![Segment::Text { text: safe_text(rng, 6) }],
        });
    }
    let turns = rng.gen_range(1..=6);
    let mut next_call_id = 0;
    for _ in 0..turns {
        messages.push(Message {
            role: Role::User,
            segments: vec![Segment::Text { text: safe_text(rng, 8) }],
        });

        let mut assistant_segments = Vec::new();
        for _ in 0..rng.gen_range(0..=2) {
            assistant_segments.push(Segment::Think { text: safe_text(rng, 10) });
        }
        let tool_calls = if rng.gen_bool(0.4) { rng.gen_range(1..=3) } else { 0 };
        let mut call_ids = Vec::new();
        for _ in 0..tool_calls {
            let call_id = format!("call_{next_call_id}");
            next_call_id += 1;
            call_ids.push(call_id.clone());
            assistant_segments.push(Segment::ToolCall {
                name: format!("tool_{}", rng.gen_range(0..4)),
                args: canonical_args(rng),
                call_id,
            });
        }
        if tool_calls == 0 || rng.gen_bool(0.5) {
            assistant_segments.push(Segment::Text { text: safe_text(rng, 12) });
        }
        messages.push(Message {
            role: Role::Assistant,
            segments: assistant_segments,
        });

        if !call_ids.is_empty() {
            messages.push(Message {
                role: Role::Tool,
                segments: call_ids
                    .iter()
                    .map(|id| Segment::ToolResult {
                        call_id: id.clone(),
                        payload: safe_text(rng, 6),
                    })
                    .collect(),
            });
            messages.push(Message {
                role: Role::Assistant,
                segments: vec![Segment::Text { text: safe_text(rng, 10) }],
            });
        }
    }
    Conversation { messages }
}
