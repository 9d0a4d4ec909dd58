//! Bytes-per-token compression benchmarking.
//!
//! Bytes per token is UTF-8 bytes divided by token count; higher is more
//! efficient. Rows aggregate as the ratio of sums (total bytes over total
//! tokens), not the mean of per-document ratios, because the corpus-level
//! compression rate is what deployment cost tracks. Each row stores the exact
//! integer pair, so `bytes_per_token * tokens == bytes` holds in rational
//! arithmetic.
//!
//! Externally reported baseline values ship as a data file of cited constants
//! and are never recomputed here; relative gain against a baseline is
//! `a / b - 1`.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::codec;
use crate::error::{Error, Result};
use crate::model::TokenizerModel;
use crate::template::{Conversation, Role, Segment};

/// Slice coordinates for a benchmark row; absent tags are wildcards.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SliceTags {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub domain: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub language: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reasoning: Option<bool>,
}

impl SliceTags {
    /// Canonical string key, e.g. `language=ko,reasoning=false`; `all` when
    /// no tags are set. Baseline files are keyed by this format.
    pub fn key(&self) -> String {
        let mut parts = Vec::new();
        if let Some(domain) = &self.domain {
            parts.push(format!("domain={domain}"));
        }
        if let Some(language) = &self.language {
            parts.push(format!("language={language}"));
        }
        if let Some(reasoning) = self.reasoning {
            parts.push(format!("reasoning={reasoning}"));
        }
        if parts.is_empty() {
            "all".into()
        } else {
            parts.join(",")
        }
    }
}

/// One (tokenizer, slice) measurement. `bytes_per_token` is derived from the
/// integer pair at construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub tokenizer: String,
    pub slice: SliceTags,
    pub documents: u64,
    pub bytes: u64,
    pub tokens: u64,
    pub bytes_per_token: f64,
}

impl ReportRow {
    pub fn new(tokenizer: String, slice: SliceTags, documents: u64, bytes: u64, tokens: u64) -> Self {
        Self {
            tokenizer,
            slice,
            documents,
            bytes,
            tokens,
            bytes_per_token: bytes as f64 / tokens as f64,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Gain {
    pub tokenizer: String,
    pub baseline: String,
    pub slice: SliceTags,
    pub relative_gain: f64,
}

/// Externally reported values for one tokenizer: bytes-per-token keyed by
/// slice key, plus its published vocabulary size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineEntry {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vocab_size: Option<u64>,
    #[serde(flatten)]
    pub slices: BTreeMap<String, f64>,
}

pub type Baselines = BTreeMap<String, BaselineEntry>;

pub fn load_baselines(path: &Path) -> Result<Baselines> {
    Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub rows: Vec<ReportRow>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub baselines: Option<Baselines>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub gains: Vec<Gain>,
}

/// Exact byte and token counts for one document.
pub fn measure(text: &[u8], model: &TokenizerModel) -> Result<(u64, u64)> {
    let tokens = codec::encode(text, model, false).len() as u64;
    if tokens == 0 {
        return Err(Error::EmptyEncoding);
    }
    Ok((text.len() as u64, tokens))
}

/// UTF-8 bytes of `text` divided by its token count.
pub fn bytes_per_token(text: &[u8], model: &TokenizerModel) -> Result<f64> {
    let (bytes, tokens) = measure(text, model)?;
    Ok(bytes as f64 / tokens as f64)
}

/// Relative gain of `a` over `b`: `a / b - 1`.
pub fn relative_gain(a: f64, b: f64) -> Result<f64> {
    if b == 0.0 {
        return Err(Error::DivideByZero);
    }
    Ok(a / b - 1.0)
}

/// Renders a gain fraction as a signed percentage with one decimal, e.g.
/// `+35.9%`.
pub fn format_percent(gain: f64) -> String {
    format!("{:+.1}%", gain * 100.0)
}

/// A slice of documents to measure.
#[derive(Debug, Clone)]
pub struct SliceCorpus {
    pub slice: SliceTags,
    pub documents: Vec<String>,
}

/// Measures every model over every slice, aggregating the first `sample_cap`
/// documents per slice as total bytes over total tokens.
pub fn run_benchmark(
    corpora: &[SliceCorpus],
    models: &[(String, &TokenizerModel)],
    sample_cap: usize,
    baselines: Option<Baselines>,
) -> Result<BenchmarkReport> {
    if sample_cap == 0 {
        return Err(Error::ConfigInvalid("sample_cap must be >= 1".into()));
    }
    let mut rows = Vec::new();
    for corpus in corpora {
        for (name, model) in models {
            let mut documents = 0u64;
            let mut bytes = 0u64;
            let mut tokens = 0u64;
            for doc in corpus.documents.iter().filter(|d| !d.is_empty()).take(sample_cap) {
                let (b, t) = measure(doc.as_bytes(), model)?;
                documents += 1;
                bytes += b;
                tokens += t;
            }
            if documents == 0 {
                return Err(Error::EmptyCorpus(corpus.slice.key()));
            }
            rows.push(ReportRow::new(name.clone(), corpus.slice.clone(), documents, bytes, tokens));
        }
    }
    rows.sort_by(|a, b| (&a.tokenizer, &a.slice).cmp(&(&b.tokenizer, &b.slice)));

    let mut gains = Vec::new();
    if let Some(baselines) = &baselines {
        for row in &rows {
            let key = row.slice.key();
            for (baseline_name, entry) in baselines {
                if baseline_name == &row.tokenizer {
                    continue;
                }
                if let Some(&baseline_bpt) = entry.slices.get(&key) {
                    gains.push(Gain {
                        tokenizer: row.tokenizer.clone(),
                        baseline: baseline_name.clone(),
                        slice: row.slice.clone(),
                        relative_gain: relative_gain(row.bytes_per_token, baseline_bpt)?,
                    });
                }
            }
        }
    }

    Ok(BenchmarkReport {
        rows,
        baselines,
        gains,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    Csv,
}

pub fn report_to_json(report: &BenchmarkReport) -> Result<String> {
    let mut out = serde_json::to_string_pretty(report)?;
    out.push('\n');
    Ok(out)
}

pub fn report_from_json(text: &str) -> Result<BenchmarkReport> {
    Ok(serde_json::from_str(text)?)
}

/// Plot-ready CSV with the fixed column set
/// `tokenizer,domain,language,reasoning,documents,bytes,tokens,bytes_per_token`.
pub fn report_to_csv(report: &BenchmarkReport) -> Result<String> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer
        .write_record([
            "tokenizer",
            "domain",
            "language",
            "reasoning",
            "documents",
            "bytes",
            "tokens",
            "bytes_per_token",
        ])
        .map_err(csv_error)?;
    for row in &report.rows {
        writer
            .write_record([
                row.tokenizer.as_str(),
                row.slice.domain.as_deref().unwrap_or(""),
                row.slice.language.as_deref().unwrap_or(""),
                &row.slice.reasoning.map(|r| r.to_string()).unwrap_or_default(),
                &row.documents.to_string(),
                &row.bytes.to_string(),
                &row.tokens.to_string(),
                &row.bytes_per_token.to_string(),
            ])
            .map_err(csv_error)?;
    }
    let buf = writer.into_inner().map_err(|e| csv_error(e.into_error().into()))?;
    Ok(String::from_utf8(buf).expect("csv output is UTF-8"))
}

fn csv_error(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Io(std::io::Error::other(format!("csv: {other:?}"))),
    }
}

pub fn emit_report(report: &BenchmarkReport, format: ReportFormat, path: &Path) -> Result<()> {
    let rendered = match format {
        ReportFormat::Json => report_to_json(report)?,
        ReportFormat::Csv => report_to_csv(report)?,
    };
    fs::write(path, rendered)?;
    Ok(())
}

/// Concatenated assistant output of a conversation: plain text, tool-call
/// envelopes, and (when `include_reasoning`) think content, without any role
/// headers or delimiters. This is the measured text for inference-style
/// slices.
pub fn assistant_output_text(conv: &Conversation, include_reasoning: bool) -> String {
    let mut out = String::new();
    for message in &conv.messages {
        if message.role != Role::Assistant {
            continue;
        }
        for segment in &message.segments {
            match segment {
                Segment::Text { text } => out.push_str(text),
                Segment::Think { text } if include_reasoning => out.push_str(text),
                Segment::Think { .. } => {}
                Segment::ToolCall { args, .. } => out.push_str(args),
                Segment::ToolResult { .. } => {}
            }
        }
    }
    out
}

/// Loads benchmark documents for a slice. JSONL lines with a `"messages"`
/// field are treated as conversations and reduced to assistant output text
/// (reasoning included only for `reasoning=true` slices); lines with a
/// `"text"` field are measured verbatim. Other files contribute one document
/// each.
pub fn load_slice_documents(paths: &[PathBuf], slice: &SliceTags) -> Result<Vec<String>> {
    let include_reasoning = slice.reasoning == Some(true);
    let mut sorted: Vec<PathBuf> = paths.to_vec();
    sorted.sort();
    let mut docs = Vec::new();
    for path in &sorted {
        let is_jsonl = matches!(
            path.extension().and_then(|e| e.to_str()),
            Some("jsonl") | Some("ndjson")
        );
        if !is_jsonl {
            let text = fs::read_to_string(path)?;
            if !text.is_empty() {
                docs.push(text);
            }
            continue;
        }
        for line in fs::read_to_string(path)?.lines() {
            if line.trim().is_empty() {
                continue;
            }
            let Ok(value) = serde_json::from_str::<serde_json::Value>(line) else {
                continue;
            };
            let doc = if value.get("messages").is_some() {
                serde_json::from_value::<Conversation>(value)
                    .ok()
                    .map(|conv| assistant_output_text(&conv, include_reasoning))
            } else {
                value.get("text").and_then(|t| t.as_str()).map(str::to_owned)
            };
            match doc {
                Some(text) if !text.is_empty() => docs.push(text),
                _ => {}
            }
        }
    }
    Ok(docs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pretokenize;
    use crate::template::Message;

    fn toy_model(pairs: &[(&[u8], &[u8])]) -> TokenizerModel {
        TokenizerModel::from_parts(
            pairs.iter().map(|(l, r)| (l.to_vec(), r.to_vec())).collect(),
            vec![],
            pretokenize::unicode_version(),
            "test".into(),
        )
        .unwrap()
    }

    #[test]
    fn three_bytes_one_token() {
        let model = toy_model(&[(b"a", b"b"), (b"ab", b"c")]);
        assert_eq!(bytes_per_token(b"abc", &model).unwrap(), 3.0);
    }

    #[test]
    fn hangul_six_bytes_two_tokens() {
        // One merge chain per syllable collapses each to a single token.
        let model = toy_model(&[
            (b"\xed", b"\x95"),
            (b"\xed\x95", b"\x9c"),
            (b"\xea", b"\xb5"),
            (b"\xea\xb5", b"\xad"),
        ]);
        let text = "한국";
        assert_eq!(text.len(), 6);
        assert_eq!(codec::encode(text.as_bytes(), &model, false).len(), 2);
        assert_eq!(bytes_per_token(text.as_bytes(), &model).unwrap(), 3.0);
    }

    #[test]
    fn empty_text_is_empty_encoding() {
        let model = toy_model(&[]);
        assert!(matches!(bytes_per_token(b"", &model), Err(Error::EmptyEncoding)));
    }

    #[test]
    fn aggregate_is_ratio_of_sums_not_mean_of_ratios() {
        // "ab" -> 2 tokens (ratio 1.0); "aaaa" -> 1 token (ratio 4.0).
        // Aggregate (2+4)/(2+1) = 2.0; mean of ratios would be 2.5.
        let model = toy_model(&[(b"a", b"a"), (b"aa", b"aa")]);
        let corpora = [SliceCorpus {
            slice: SliceTags::default(),
            documents: vec!["ab".into(), "aaaa".into()],
        }];
        let report =
            run_benchmark(&corpora, &[("toy".into(), &model)], 10_000, None).unwrap();
        let row = &report.rows[0];
        assert_eq!((row.bytes, row.tokens, row.documents), (6, 3, 2));
        assert_eq!(row.bytes_per_token, 2.0);
    }

    #[test]
    fn single_doc_row() {
        let model = toy_model(&[(b"a", b"b"), (b"c", b"d")]);
        let corpora = [SliceCorpus {
            slice: SliceTags {
                language: Some("en".into()),
                ..SliceTags::default()
            },
            documents: vec!["abcd".into()],
        }];
        let report =
            run_benchmark(&corpora, &[("toy".into(), &model)], 10_000, None).unwrap();
        let row = &report.rows[0];
        assert_eq!((row.bytes, row.tokens), (4, 2));
        assert_eq!(row.bytes_per_token, 2.0);
    }

    #[test]
    fn empty_slice_errors() {
        let model = toy_model(&[]);
        let corpora = [SliceCorpus {
            slice: SliceTags::default(),
            documents: vec!["".into()],
        }];
        let err = run_benchmark(&corpora, &[("toy".into(), &model)], 100, None).unwrap_err();
        assert!(matches!(err, Error::EmptyCorpus(_)));
    }

    #[test]
    fn aggregation_is_order_invariant() {
        let model = toy_model(&[(b"a", b"a")]);
        let docs = vec!["aa".to_string(), "abc".to_string(), "aaaa".to_string()];
        let mut reversed = docs.clone();
        reversed.reverse();
        let run = |documents: Vec<String>| {
            let corpora = [SliceCorpus {
                slice: SliceTags::default(),
                documents,
            }];
            run_benchmark(&corpora, &[("toy".into(), &model)], 100, None).unwrap().rows
        };
        assert_eq!(run(docs), run(reversed));
    }

    #[test]
    fn relative_gain_matches_reported_arithmetic() {
        let close = |a: f64, b: f64| (a - b).abs() < 0.01;
        assert!(close(relative_gain(4.69, 3.45).unwrap(), 0.359));
        assert!(close(relative_gain(4.69, 3.19).unwrap(), 0.470));
        assert_eq!(relative_gain(2.5, 2.5).unwrap(), 0.0);
        assert!(matches!(relative_gain(1.0, 0.0), Err(Error::DivideByZero)));
    }

    #[test]
    fn percent_renders_with_one_decimal() {
        assert_eq!(format_percent(0.3594), "+35.9%");
        assert_eq!(format_percent(-0.02), "-2.0%");
    }

    #[test]
    fn slice_keys_are_canonical() {
        assert_eq!(SliceTags::default().key(), "all");
        let tags = SliceTags {
            domain: None,
            language: Some("ko".into()),
            reasoning: Some(false),
        };
        assert_eq!(tags.key(), "language=ko,reasoning=false");
    }

    #[test]
    fn json_report_round_trips() {
        let model = toy_model(&[(b"a", b"b")]);
        let corpora = [SliceCorpus {
            slice: SliceTags {
                language: Some("en".into()),
                ..SliceTags::default()
            },
            documents: vec!["ab ab".into()],
        }];
        let mut baselines = Baselines::new();
        baselines.insert(
            "other".into(),
            BaselineEntry {
                vocab_size: Some(1000),
                slices: [("language=en".to_string(), 1.2)].into_iter().collect(),
            },
        );
        let report =
            run_benchmark(&corpora, &[("toy".into(), &model)], 100, Some(baselines)).unwrap();
        assert_eq!(report.gains.len(), 1);
        let json = report_to_json(&report).unwrap();
        assert_eq!(report_from_json(&json).unwrap(), report);
    }

    #[test]
    fn csv_has_header_and_rows() {
        let report = BenchmarkReport {
            rows: vec![ReportRow::new(
                "toy".into(),
                SliceTags {
                    domain: Some("code".into()),
                    language: Some("en".into()),
                    reasoning: Some(false),
                },
                1,
                4,
                2,
            )],
            baselines: None,
            gains: vec![],
        };
        let csv = report_to_csv(&report).unwrap();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 2);
        assert_eq!(
            lines[0],
            "tokenizer,domain,language,reasoning,documents,bytes,tokens,bytes_per_token"
        );
        assert_eq!(lines[1], "toy,code,en,false,1,4,2,2");
    }

    #[test]
    fn assistant_text_respects_reasoning_flag() {
        let conv = Conversation {
            messages: vec![
                Message {
                    role: Role::User,
                    segments: vec![Segment::Text { text: "q".into() }],
                },
                Message {
                    role: Role::Assistant,
                    segments: vec![
                        Segment::Think { text: "reasoning ".into() },
                        Segment::Text { text: "answer".into() },
                    ],
                },
            ],
        };
        assert_eq!(assistant_output_text(&conv, true), "reasoning answer");
        assert_eq!(assistant_output_text(&conv, false), "answer");
    }
}
