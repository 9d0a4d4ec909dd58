//! Lossless byte-level encoder/decoder over a trained model.
//!
//! Encoding splits the input with the pre-tokenizer, starts each pre-token as
//! raw byte tokens, and applies merges strictly in ascending rank order until
//! none applies: the lowest-rank applicable merge first, ties in position
//! resolved leftmost. This matches training-time construction, so words from
//! the training corpus re-encode to their trained forms. Because the base
//! alphabet is the raw bytes, any byte sequence encodes and
//! `decode(encode(s)) == s` holds for arbitrary input, including invalid
//! UTF-8.
//!
//! Special tokens are only recognized when `parse_specials` is on; keep it off
//! for untrusted user text so control tokens cannot be injected.

use crate::error::Result;
use crate::model::TokenizerModel;
use crate::pretokenize;

/// Encodes arbitrary bytes to token ids.
pub fn encode(text: &[u8], model: &TokenizerModel, parse_specials: bool) -> Vec<u32> {
    let mut ids = Vec::new();
    match model.special_matcher() {
        Some(matcher) if parse_specials => {
            let mut cursor = 0;
            for m in matcher.find_iter(text) {
                encode_plain(&text[cursor..m.start()], model, &mut ids);
                let special = &model.specials()[m.pattern().as_usize()];
                ids.push(model.special_id(special).expect("matcher patterns are specials"));
                cursor = m.end();
            }
            encode_plain(&text[cursor..], model, &mut ids);
        }
        _ => encode_plain(text, model, &mut ids),
    }
    ids
}

fn encode_plain(span: &[u8], model: &TokenizerModel, out: &mut Vec<u32>) {
    for pretoken in pretokenize::split(span) {
        merge_pretoken(pretoken.bytes, model, out);
    }
}

/// Applies merges to one pre-token, appending the resulting ids.
fn merge_pretoken(bytes: &[u8], model: &TokenizerModel, out: &mut Vec<u32>) {
    let start = out.len();
    out.extend(bytes.iter().map(|&b| u32::from(b)));
    let ids = &mut out[start..];
    let mut len = ids.len();
    loop {
        let mut best: Option<(u32, usize)> = None;
        for i in 0..len.saturating_sub(1) {
            if let Some(rank) = model.pair_rank(ids[i], ids[i + 1]) {
                // Strict < keeps the leftmost position among equal ranks.
                if best.is_none_or(|(best_rank, _)| rank < best_rank) {
                    best = Some((rank, i));
                }
            }
        }
        let Some((rank, i)) = best else { break };
        ids[i] = model.merge_target(rank);
        ids.copy_within(i + 2..len, i + 1);
        len -= 1;
    }
    out.truncate(start + len);
}

/// Decodes token ids back to bytes; specials render as their literal text.
pub fn decode(ids: &[u32], model: &TokenizerModel) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    for &id in ids {
        out.extend_from_slice(model.token_bytes(id)?);
    }
    Ok(out)
}

/// Runs the merge fixpoint on a single pre-token and returns the token
/// byte-strings. The input is treated as one unit: no pre-tokenizer split,
/// no special-token parsing.
pub fn apply_merges(pretoken: &[u8], model: &TokenizerModel) -> Vec<Vec<u8>> {
    let mut ids = Vec::new();
    merge_pretoken(pretoken, model, &mut ids);
    ids.iter()
        .map(|&id| model.token_bytes(id).expect("merge output ids are in vocab").to_vec())
        .collect()
}
