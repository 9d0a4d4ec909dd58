//! Rule-based pre-tokenizer.
//!
//! Splits raw input bytes into a lossless sequence of categorized pre-tokens.
//! BPE merges never cross pre-token boundaries, so these rules shape the
//! vocabulary: every digit codepoint is isolated into its own pre-token (so
//! numbers always decompose the same way), and whitespace runs are kept intact
//! (so code indentation survives as dedicated tokens).
//!
//! Category rules, applied left to right over codepoints:
//! - each codepoint of Unicode general category N becomes its own `Digit`
//!   pre-token and never absorbs a leading space;
//! - maximal whitespace runs of length >= 2, or containing any non-space
//!   whitespace such as `\n`/`\r`/`\t`, become `Whitespace` pre-tokens;
//! - an optional single leading ASCII space attaches to a following run of
//!   letters/marks (`Letters`) or punctuation/symbols (`Punctuation`);
//! - anything else, including bytes that are not valid UTF-8, becomes an
//!   `Other` pre-token of one codepoint (or one raw byte).
//!
//! No normalization is applied: concatenating the produced pre-tokens always
//! reproduces the input byte-for-byte.

use unicode_properties::general_category::GeneralCategoryGroup;
use unicode_properties::UnicodeGeneralCategory;

/// Version of the vendored Unicode category tables, recorded in model files.
pub fn unicode_version() -> String {
    let (major, minor, patch) = unicode_properties::UNICODE_VERSION;
    format!("{major}.{minor}.{patch}")
}

/// Coarse category assigned to a pre-token.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Category {
    Letters,
    Digit,
    Whitespace,
    Punctuation,
    Other,
}

/// A contiguous byte span of the input, the unit BPE merges operate within.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PreToken<'a> {
    /// Raw slice of the source text.
    pub bytes: &'a [u8],
    pub category: Category,
    /// Byte index of `bytes` within the source text.
    pub offset: usize,
}

/// Per-codepoint class driving the run grouping.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Class {
    /// Exactly U+0020; the only whitespace that may attach to a following run.
    Space,
    /// Any other whitespace codepoint.
    Ws,
    Digit,
    Letter,
    Punct,
    Other,
}

fn classify(c: char) -> Class {
    if c == ' ' {
        return Class::Space;
    }
    if c.is_whitespace() {
        return Class::Ws;
    }
    match c.general_category_group() {
        GeneralCategoryGroup::Number => Class::Digit,
        GeneralCategoryGroup::Letter | GeneralCategoryGroup::Mark => Class::Letter,
        GeneralCategoryGroup::Punctuation | GeneralCategoryGroup::Symbol => Class::Punct,
        _ => Class::Other,
    }
}

/// One classified codepoint (or one invalid byte).
struct Atom {
    offset: usize,
    len: usize,
    class: Class,
}

fn atoms(text: &[u8]) -> impl Iterator<Item = Atom> + '_ {
    let mut offset = 0;
    text.utf8_chunks().flat_map(move |chunk| {
        let valid_start = offset;
        let valid = chunk.valid();
        let invalid_start = valid_start + valid.len();
        offset = invalid_start + chunk.invalid().len();
        let valid_atoms = valid.char_indices().map(move |(i, c)| Atom {
            offset: valid_start + i,
            len: c.len_utf8(),
            class: classify(c),
        });
        // Invalid UTF-8 falls through one byte at a time.
        let invalid_atoms = (0..chunk.invalid().len()).map(move |i| Atom {
            offset: invalid_start + i,
            len: 1,
            class: Class::Other,
        });
        valid_atoms.chain(invalid_atoms)
    })
}

fn take_run(
    atoms: &mut std::iter::Peekable<impl Iterator<Item = Atom>>,
    end: &mut usize,
    pred: impl Fn(Class) -> bool,
) {
    while let Some(next) = atoms.peek() {
        if pred(next.class) {
            *end = next.offset + next.len;
            atoms.next();
        } else {
            break;
        }
    }
}

/// Splits `text` into a lossless, deterministic sequence of pre-tokens.
///
/// Total over arbitrary bytes: invalid UTF-8 degrades to single-byte `Other`
/// pre-tokens and the concatenation of all pre-tokens equals `text`.
pub fn split(text: &[u8]) -> Vec<PreToken<'_>> {
    let mut out = Vec::new();
    let mut atoms = atoms(text).peekable();

    while let Some(atom) = atoms.next() {
        let start = atom.offset;
        let mut end = atom.offset + atom.len;
        let category = match atom.class {
            Class::Digit => Category::Digit,
            Class::Letter => {
                take_run(&mut atoms, &mut end, |c| c == Class::Letter);
                Category::Letters
            }
            Class::Punct => {
                take_run(&mut atoms, &mut end, |c| c == Class::Punct);
                Category::Punctuation
            }
            Class::Ws => {
                take_run(&mut atoms, &mut end, |c| matches!(c, Class::Space | Class::Ws));
                Category::Whitespace
            }
            Class::Space => match atoms.peek().map(|a| a.class) {
                // Part of a longer whitespace run: keep the whole run together.
                Some(Class::Space) | Some(Class::Ws) => {
                    take_run(&mut atoms, &mut end, |c| matches!(c, Class::Space | Class::Ws));
                    Category::Whitespace
                }
                // A single leading space attaches to a letters or punctuation run.
                Some(Class::Letter) => {
                    take_run(&mut atoms, &mut end, |c| c == Class::Letter);
                    Category::Letters
                }
                Some(Class::Punct) => {
                    take_run(&mut atoms, &mut end, |c| c == Class::Punct);
                    Category::Punctuation
                }
                // Digits never absorb a leading space; neither does anything else.
                _ => Category::Whitespace,
            },
            Class::Other => Category::Other,
        };
        out.push(PreToken {
            bytes: &text[start..end],
            category,
            offset: start,
        });
    }
    out
}
