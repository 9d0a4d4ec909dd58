//! Chat template: renders role-structured conversations to token-ready text
//! and parses such text back.
//!
//! The grammar is a closed special-token protocol. A role header token opens
//! a message and `<|eot|>` closes it. Within an assistant message, reasoning
//! is delimited by `<|think|>`...`<|/think|>` and must precede all other
//! content; tool calls serialize as `<|tool_call|>` + a canonical-JSON
//! envelope (sorted keys, no extra whitespace) + `<|/tool_call|>`, with
//! distinct call ids enabling parallel calls. Tool messages carry matching
//! `<|tool_result|>` envelopes. Render and parse are mutual inverses on valid
//! conversations (generation prompt off), which is what lets training
//! pipelines manipulate reasoning spans without touching the visible history.
//!
//! Validity is stricter than the type system: segment text must not contain
//! any of the protocol's token strings, adjacent plain-text segments must be
//! fused, and tool-call arguments must already be canonical JSON. These rules
//! are exactly what make the byte-level round trip exact.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const SYSTEM: &str = "<|system|>";
pub const USER: &str = "<|user|>";
pub const ASSISTANT: &str = "<|assistant|>";
pub const TOOL: &str = "<|tool|>";
pub const EOT: &str = "<|eot|>";
pub const THINK_OPEN: &str = "<|think|>";
pub const THINK_CLOSE: &str = "<|/think|>";
pub const TOOL_CALL_OPEN: &str = "<|tool_call|>";
pub const TOOL_CALL_CLOSE: &str = "<|/tool_call|>";
pub const TOOL_RESULT_OPEN: &str = "<|tool_result|>";
pub const TOOL_RESULT_CLOSE: &str = "<|/tool_result|>";
pub const PAD: &str = "<|pad|>";

/// The full special-token inventory, in id-assignment order.
pub const SPECIAL_TOKENS: [&str; 12] = [
    SYSTEM,
    USER,
    ASSISTANT,
    TOOL,
    EOT,
    THINK_OPEN,
    THINK_CLOSE,
    TOOL_CALL_OPEN,
    TOOL_CALL_CLOSE,
    TOOL_RESULT_OPEN,
    TOOL_RESULT_CLOSE,
    PAD,
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    System,
    User,
    Assistant,
    Tool,
}

impl Role {
    pub fn header(self) -> &'static str {
        match self {
            Role::System => SYSTEM,
            Role::User => USER,
            Role::Assistant => ASSISTANT,
            Role::Tool => TOOL,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Segment {
    Text { text: String },
    Think { text: String },
    ToolCall {
        name: String,
        /// Canonical JSON (sorted keys, no extra whitespace).
        args: String,
        call_id: String,
    },
    ToolResult { call_id: String, payload: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Message {
    pub role: Role,
    pub segments: Vec<Segment>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Conversation {
    pub messages: Vec<Message>,
}

/// Canonicalizes a JSON document: parsed and re-serialized compactly with
/// object keys sorted.
pub fn canonical_json(text: &str) -> Result<String> {
    let value: serde_json::Value = serde_json::from_str(text)?;
    Ok(value.to_string())
}

/// Envelope serialized between tool-call delimiters. Keys are already in
/// sorted order; `args` embeds the canonical argument JSON verbatim.
#[derive(Serialize)]
struct CallEnvelopeOut<'a> {
    args: &'a serde_json::value::RawValue,
    id: &'a str,
    name: &'a str,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CallEnvelopeIn {
    args: serde_json::Value,
    id: String,
    name: String,
}

#[derive(Serialize)]
struct ResultEnvelopeOut<'a> {
    id: &'a str,
    payload: &'a str,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ResultEnvelopeIn {
    id: String,
    payload: String,
}

fn contains_special(text: &str) -> Option<&'static str> {
    SPECIAL_TOKENS.iter().find(|t| text.contains(*t)).copied()
}

impl Conversation {
    /// Checks every structural invariant, naming the violated rule.
    pub fn validate(&self) -> Result<()> {
        let invalid = |rule: &str| Err(Error::InvalidConversation(rule.to_string()));
        let mut last_assistant_calls: Option<HashSet<&str>> = None;
        for (index, message) in self.messages.iter().enumerate() {
            if message.role == Role::System && index != 0 {
                return invalid("system message only allowed at the start");
            }
            let mut seen_non_think = false;
            let mut prev_was_text = false;
            let mut call_ids: HashSet<&str> = HashSet::new();
            for segment in &message.segments {
                for field in segment_strings(segment) {
                    if let Some(token) = contains_special(field) {
                        return Err(Error::InvalidConversation(format!(
                            "segment content contains reserved token {token}"
                        )));
                    }
                }
                match segment {
                    Segment::Text { text } => {
                        if !matches!(message.role, Role::System | Role::User | Role::Assistant) {
                            return invalid("text segments not allowed in tool messages");
                        }
                        if text.is_empty() {
                            return invalid("text segments must be non-empty");
                        }
                        if prev_was_text {
                            return invalid("adjacent text segments must be fused");
                        }
                        seen_non_think = true;
                        prev_was_text = true;
                        continue;
                    }
                    Segment::Think { .. } => {
                        if message.role != Role::Assistant {
                            return invalid("think segments only allowed in assistant messages");
                        }
                        if seen_non_think {
                            return invalid("think segments must precede other content");
                        }
                    }
                    Segment::ToolCall { args, call_id, .. } => {
                        if message.role != Role::Assistant {
                            return invalid("tool calls only allowed in assistant messages");
                        }
                        if !call_ids.insert(call_id) {
                            return invalid("duplicate tool call id within one message");
                        }
                        match canonical_json(args) {
                            Ok(canonical) if canonical == *args => {}
                            _ => return invalid("tool call args must be canonical JSON"),
                        }
                        seen_non_think = true;
                    }
                    Segment::ToolResult { call_id, .. } => {
                        if message.role != Role::Tool {
                            return invalid("tool results only allowed in tool messages");
                        }
                        let known = last_assistant_calls
                            .as_ref()
                            .is_some_and(|ids| ids.contains(call_id.as_str()));
                        if !known {
                            return invalid(
                                "tool result id has no matching call in the preceding assistant message",
                            );
                        }
                    }
                }
                prev_was_text = false;
            }
            if message.role == Role::Assistant {
                last_assistant_calls = Some(
                    message
                        .segments
                        .iter()
                        .filter_map(|s| match s {
                            Segment::ToolCall { call_id, .. } => Some(call_id.as_str()),
                            _ => None,
                        })
                        .collect(),
                );
            }
        }
        Ok(())
    }
}

fn segment_strings(segment: &Segment) -> Vec<&str> {
    match segment {
        Segment::Text { text } | Segment::Think { text } => vec![text],
        Segment::ToolCall { name, args, call_id } => vec![name, args, call_id],
        Segment::ToolResult { call_id, payload } => vec![call_id, payload],
    }
}

/// Renders a conversation with the special-token grammar. With
/// `add_generation_prompt`, the output ends with the assistant header.
pub fn render(conv: &Conversation, add_generation_prompt: bool) -> Result<String> {
    conv.validate()?;
    let mut out = String::new();
    for message in &conv.messages {
        out.push_str(message.role.header());
        for segment in &message.segments {
            match segment {
                Segment::Text { text } => out.push_str(text),
                Segment::Think { text } => {
                    out.push_str(THINK_OPEN);
                    out.push_str(text);
                    out.push_str(THINK_CLOSE);
                }
                Segment::ToolCall { name, args, call_id } => {
                    let raw = serde_json::value::RawValue::from_string(args.clone())?;
                    let envelope = serde_json::to_string(&CallEnvelopeOut {
                        args: &raw,
                        id: call_id,
                        name,
                    })?;
                    out.push_str(TOOL_CALL_OPEN);
                    out.push_str(&envelope);
                    out.push_str(TOOL_CALL_CLOSE);
                }
                Segment::ToolResult { call_id, payload } => {
                    let envelope = serde_json::to_string(&ResultEnvelopeOut {
                        id: call_id,
                        payload,
                    })?;
                    out.push_str(TOOL_RESULT_OPEN);
                    out.push_str(&envelope);
                    out.push_str(TOOL_RESULT_CLOSE);
                }
            }
        }
        out.push_str(EOT);
    }
    if add_generation_prompt {
        out.push_str(ASSISTANT);
    }
    Ok(out)
}

/// Removes think segments from all assistant messages except the last
/// `keep_last_n`; every other segment is left byte-identical.
pub fn strip_reasoning(conv: &Conversation, keep_last_n: usize) -> Conversation {
    let assistant_total = conv
        .messages
        .iter()
        .filter(|m| m.role == Role::Assistant)
        .count();
    let strip_first = assistant_total.saturating_sub(keep_last_n);
    let mut seen_assistant = 0;
    let messages = conv
        .messages
        .iter()
        .map(|message| {
            if message.role != Role::Assistant {
                return message.clone();
            }
            seen_assistant += 1;
            if seen_assistant > strip_first {
                return message.clone();
            }
            Message {
                role: message.role,
                segments: message
                    .segments
                    .iter()
                    .filter(|s| !matches!(s, Segment::Think { .. }))
                    .cloned()
                    .collect(),
            }
        })
        .collect();
    Conversation { messages }
}

/// Scanner over the fixed token inventory. None of the inventory strings is a
/// prefix of another, so the first match at a position is the only match.
fn find_special(text: &[u8], from: usize) -> Option<(usize, &'static str)> {
    let mut pos = from;
    while pos < text.len() {
        match text[pos..].iter().position(|&b| b == b'<') {
            Some(delta) => {
                pos += delta;
                for token in SPECIAL_TOKENS {
                    if text[pos..].starts_with(token.as_bytes()) {
                        return Some((pos, token));
                    }
                }
                pos += 1;
            }
            None => break,
        }
    }
    None
}

fn utf8_span(text: &[u8], start: usize, end: usize) -> Result<String> {
    std::str::from_utf8(&text[start..end])
        .map(str::to_owned)
        .map_err(|e| Error::Grammar {
            offset: start + e.valid_up_to(),
            message: "content is not valid UTF-8".into(),
        })
}

fn grammar_error<T>(offset: usize, message: impl Into<String>) -> Result<T> {
    Err(Error::Grammar {
        offset,
        message: message.into(),
    })
}

/// Reads a delimited block: content from `pos` to the next special, which
/// must be `close`. Returns (content, position after the closing token).
fn read_block(text: &[u8], pos: usize, open: &str, close: &'static str) -> Result<(String, usize)> {
    match find_special(text, pos) {
        Some((off, tok)) if tok == close => Ok((utf8_span(text, pos, off)?, off + close.len())),
        Some((off, tok)) => grammar_error(off, format!("expected {close} to close {open}, found {tok}")),
        None => grammar_error(text.len(), format!("unclosed {open}")),
    }
}

/// Parses template text back into a conversation. Inverse of [`render`] (with
/// the generation prompt off) on valid conversations.
pub fn parse(text: &[u8]) -> Result<Conversation> {
    let mut messages: Vec<Message> = Vec::new();
    let mut last_assistant_calls: HashSet<String> = HashSet::new();
    let mut pos = 0;

    while pos < text.len() {
        let (header_off, header) = match find_special(text, pos) {
            Some(found) => found,
            None => return grammar_error(pos, "expected a role header token"),
        };
        if header_off != pos {
            return grammar_error(pos, "text outside of any message");
        }
        let role = match header {
            SYSTEM => Role::System,
            USER => Role::User,
            ASSISTANT => Role::Assistant,
            TOOL => Role::Tool,
            other => return grammar_error(pos, format!("expected a role header token, found {other}")),
        };
        if role == Role::System && !messages.is_empty() {
            return grammar_error(pos, "system message only allowed at the start");
        }
        pos += header.len();

        let mut segments: Vec<Segment> = Vec::new();
        let mut seen_non_think = false;
        let mut call_ids: HashSet<String> = HashSet::new();
        loop {
            let (off, token) = match find_special(text, pos) {
                Some(found) => found,
                None => return grammar_error(text.len(), format!("missing {EOT}")),
            };
            if off > pos {
                if role == Role::Tool {
                    return grammar_error(pos, "text segments not allowed in tool messages");
                }
                segments.push(Segment::Text {
                    text: utf8_span(text, pos, off)?,
                });
                seen_non_think = true;
                pos = off;
                continue;
            }
            match token {
                EOT => {
                    pos = off + EOT.len();
                    break;
                }
                THINK_OPEN => {
                    if role != Role::Assistant {
                        return grammar_error(off, "think segments only allowed in assistant messages");
                    }
                    if seen_non_think {
                        return grammar_error(off, "think segments must precede other content");
                    }
                    let (content, next) =
                        read_block(text, off + THINK_OPEN.len(), THINK_OPEN, THINK_CLOSE)?;
                    segments.push(Segment::Think { text: content });
                    pos = next;
                }
                TOOL_CALL_OPEN => {
                    if role != Role::Assistant {
                        return grammar_error(off, "tool calls only allowed in assistant messages");
                    }
                    let body_start = off + TOOL_CALL_OPEN.len();
                    let (content, next) =
                        read_block(text, body_start, TOOL_CALL_OPEN, TOOL_CALL_CLOSE)?;
                    let envelope: CallEnvelopeIn = serde_json::from_str(&content).map_err(|e| {
                        Error::Grammar {
                            offset: body_start,
                            message: format!("malformed tool call envelope: {e}"),
                        }
                    })?;
                    let args = envelope.args.to_string();
                    let raw = serde_json::value::RawValue::from_string(args.clone())?;
                    let canonical = serde_json::to_string(&CallEnvelopeOut {
                        args: &raw,
                        id: &envelope.id,
                        name: &envelope.name,
                    })?;
                    if canonical != content {
                        return grammar_error(body_start, "tool call envelope is not canonical JSON");
                    }
                    if !call_ids.insert(envelope.id.clone()) {
                        return grammar_error(off, "duplicate tool call id within one message");
                    }
                    segments.push(Segment::ToolCall {
                        name: envelope.name,
                        args,
                        call_id: envelope.id,
                    });
                    seen_non_think = true;
                    pos = next;
                }
                TOOL_RESULT_OPEN => {
                    if role != Role::Tool {
                        return grammar_error(off, "tool results only allowed in tool messages");
                    }
                    let body_start = off + TOOL_RESULT_OPEN.len();
                    let (content, next) =
                        read_block(text, body_start, TOOL_RESULT_OPEN, TOOL_RESULT_CLOSE)?;
                    let envelope: ResultEnvelopeIn = serde_json::from_str(&content).map_err(|e| {
                        Error::Grammar {
                            offset: body_start,
                            message: format!("malformed tool result envelope: {e}"),
                        }
                    })?;
                    let canonical = serde_json::to_string(&ResultEnvelopeOut {
                        id: &envelope.id,
                        payload: &envelope.payload,
                    })?;
                    if canonical != content {
                        return grammar_error(body_start, "tool result envelope is not canonical JSON");
                    }
                    if !last_assistant_calls.contains(&envelope.id) {
                        return grammar_error(
                            off,
                            "tool result id has no matching call in the preceding assistant message",
                        );
                    }
                    segments.push(Segment::ToolResult {
                        call_id: envelope.id,
                        payload: envelope.payload,
                    });
                    pos = next;
                }
                other => {
                    return grammar_error(off, format!("unexpected token {other} inside message"))
                }
            }
        }

        if role == Role::Assistant {
            last_assistant_calls = call_ids;
        }
        messages.push(Message { role, segments });
    }

    Ok(Conversation { messages })
}
