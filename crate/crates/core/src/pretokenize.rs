//! Pre-tokenization: splitting text into the spans inside which BPE merges
//! are confined.
//!
//! No Unicode normalization is applied before splitting.

use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use fancy_regex::Regex;
use serde::{Deserialize, Serialize};

use crate::span::Span;

/// The GPT-2 pre-tokenization pattern.
pub const GPT2_PATTERN: &str =
    r"'s|'t|'re|'ve|'m|'ll|'d| ?\p{L}+| ?\p{N}+| ?[^\s\p{L}\p{N}]+|\s+(?!\S)|\s+";

/// Registered splitting patterns.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Pattern {
    /// GPT-2 regex; a single leading space attaches to the following run.
    #[default]
    Gpt2,
    /// Runs of whitespace and runs of non-whitespace, each their own span.
    Whitespace,
    /// Every code point is its own span.
    Char,
}

impl Pattern {
    pub fn name(self) -> &'static str {
        match self {
            Pattern::Gpt2 => "gpt2",
            Pattern::Whitespace => "whitespace",
            Pattern::Char => "char",
        }
    }
}

impl fmt::Display for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Pattern {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "gpt2" => Ok(Pattern::Gpt2),
            "whitespace" => Ok(Pattern::Whitespace),
            "char" => Ok(Pattern::Char),
            other => Err(format!("unknown pre-tokenizer pattern `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PreTokenKind {
    Word,
    Number,
    Punctuation,
    Whitespace,
    Contraction,
    /// Bytes that are not valid UTF-8 (byte-level encoding only).
    Raw,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PreToken {
    pub span: Span,
    pub kind: PreTokenKind,
}

#[derive(Debug, thiserror::Error)]
#[error("input is not valid UTF-8 (first invalid byte at offset {offset})")]
pub struct InvalidUtf8 {
    pub offset: usize,
}

fn gpt2_regex() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(GPT2_PATTERN).expect("GPT-2 pattern compiles"))
}

fn classify(piece: &str) -> PreTokenKind {
    if piece.starts_with('\'') && piece.len() > 1 && piece[1..].chars().all(char::is_alphabetic)
    {
        return PreTokenKind::Contraction;
    }
    let body = piece.strip_prefix(' ').filter(|b| !b.is_empty()).unwrap_or(piece);
    match body.chars().next() {
        None => PreTokenKind::Whitespace,
        Some(c) if c.is_whitespace() => PreTokenKind::Whitespace,
        Some(c) if c.is_alphabetic() => PreTokenKind::Word,
        Some(c) if c.is_numeric() => PreTokenKind::Number,
        Some(_) => PreTokenKind::Punctuation,
    }
}

fn push(out: &mut Vec<PreToken>, text: &str, start: usize, end: usize) {
    out.push(PreToken {
        span: Span::new(start, end),
        kind: classify(&text[start..end]),
    });
}

/// Split `text` into pre-tokens whose spans tile the input.
pub fn pretokenize(text: &str, pattern: Pattern) -> Vec<PreToken> {
    let mut out = Vec::new();
    match pattern {
        Pattern::Gpt2 => {
            let mut pos = 0;
            for m in gpt2_regex().find_iter(text) {
                let m = m.expect("GPT-2 pattern has bounded backtracking");
                if m.start() > pos {
                    push(&mut out, text, pos, m.start());
                }
                push(&mut out, text, m.start(), m.end());
                pos = m.end();
            }
            if pos < text.len() {
                push(&mut out, text, pos, text.len());
            }
        }
        Pattern::Whitespace => {
            let mut start = 0;
            let mut in_space = None;
            for (i, c) in text.char_indices() {
                let space = c.is_whitespace();
                if in_space.is_some_and(|prev| prev != space) {
                    push(&mut out, text, start, i);
                    start = i;
                }
                in_space = Some(space);
            }
            if start < text.len() {
                push(&mut out, text, start, text.len());
            }
        }
        Pattern::Char => {
            for (i, c) in text.char_indices() {
                push(&mut out, text, i, i + c.len_utf8());
            }
        }
    }
    out
}

/// Pre-tokenize raw bytes, failing on invalid UTF-8.
pub fn pretokenize_bytes(bytes: &[u8], pattern: Pattern) -> Result<Vec<PreToken>, InvalidUtf8> {
    let text = std::str::from_utf8(bytes).map_err(|e| InvalidUtf8 {
        offset: e.valid_up_to(),
    })?;
    Ok(pretokenize(text, pattern))
}

/// Pre-tokenize arbitrary bytes: valid UTF-8 stretches are split with
/// `pattern`, each invalid sequence becomes a [`PreTokenKind::Raw`] span.
pub(crate) fn pretokenize_lossless(bytes: &[u8], pattern: Pattern) -> Vec<PreToken> {
    let mut out = Vec::new();
    let mut offset = 0;
    for chunk in bytes.utf8_chunks() {
        let valid = chunk.valid();
        out.extend(pretokenize(valid, pattern).into_iter().map(|p| PreToken {
            span: p.span.shift(offset),
            kind: p.kind,
        }));
        offset += valid.len();
        let invalid = chunk.invalid();
        if !invalid.is_empty() {
            out.push(PreToken {
                span: Span::new(offset, offset + invalid.len()),
                kind: PreTokenKind::Raw,
            });
            offset += invalid.len();
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::span::tiles;
    use proptest::prelude::*;

    fn pieces(text: &str, pattern: Pattern) -> Vec<&str> {
        pretokenize(text, pattern)
            .into_iter()
            .map(|p| &text[p.span.range()])
            .collect()
    }

    #[test]
    fn comma_list_attaches_space_to_numbers() {
        assert_eq!(
            pieces("480, 481, 482", Pattern::Gpt2),
            ["480", ",", " 481", ",", " 482"]
        );
    }

    #[test]
    fn trailing_space_is_its_own_pretoken() {
        let with = pieces("the first step is ", Pattern::Gpt2);
        assert_eq!(with, ["the", " first", " step", " is", " "]);
        let without = pieces("the first step is", Pattern::Gpt2);
        assert_eq!(without, ["the", " first", " step", " is"]);
    }

    #[test]
    fn empty_input() {
        assert!(pretokenize("", Pattern::Gpt2).is_empty());
        assert!(pretokenize("", Pattern::Whitespace).is_empty());
        assert!(pretokenize("", Pattern::Char).is_empty());
    }

    #[test]
    fn gpt2_contractions_and_whitespace_runs() {
        assert_eq!(
            pieces("I'll go   now", Pattern::Gpt2),
            ["I", "'ll", " go", "  ", " now"]
        );
        let kinds: Vec<_> = pretokenize("I'll 42 ,-", Pattern::Gpt2)
            .into_iter()
            .map(|p| p.kind)
            .collect();
        assert_eq!(
            kinds,
            [
                PreTokenKind::Word,
                PreTokenKind::Contraction,
                PreTokenKind::Number,
                PreTokenKind::Punctuation
            ]
        );
    }

    #[test]
    fn sensor_row_splits_sign_with_comma() {
        assert_eq!(
            pieces("26000,-0.69", Pattern::Gpt2),
            ["26000", ",-", "0", ".", "69"]
        );
    }

    #[test]
    fn whitespace_and_char_patterns() {
        assert_eq!(pieces("ab  c\td", Pattern::Whitespace), ["ab", "  ", "c", "\t", "d"]);
        assert_eq!(pieces("aé1", Pattern::Char), ["a", "é", "1"]);
    }

    #[test]
    fn invalid_utf8_is_rejected() {
        let err = pretokenize_bytes(b"ab\xffc", Pattern::Gpt2).unwrap_err();
        assert_eq!(err.offset, 2);
    }

    #[test]
    fn lossless_marks_raw_bytes() {
        let toks = pretokenize_lossless(b"ab\xff\xfec", Pattern::Gpt2);
        assert!(tiles(toks.iter().map(|p| p.span), 5));
        assert!(toks.iter().any(|p| p.kind == PreTokenKind::Raw));
    }

    #[test]
    fn pattern_names_parse() {
        for p in [Pattern::Gpt2, Pattern::Whitespace, Pattern::Char] {
            assert_eq!(p.name().parse::<Pattern>().unwrap(), p);
        }
        assert!("bert".parse::<Pattern>().is_err());
    }

    proptest! {
        #[test]
        fn spans_tile_input(text in "\\PC{0,40}", idx in 0usize..3) {
            let pattern = [Pattern::Gpt2, Pattern::Whitespace, Pattern::Char][idx];
            let toks = pretokenize(&text, pattern);
            prop_assert!(tiles(toks.iter().map(|p| p.span), text.len()));
            prop_assert_eq!(toks, pretokenize(&text, pattern));
        }

        #[test]
        fn gpt2_never_mixes_letters_and_digits(text in "[a-zA-Z0-9 ,.'é٣-]{0,40}") {
            for piece in pieces(&text, Pattern::Gpt2) {
                let letter = piece.chars().any(char::is_alphabetic);
                let digit = piece.chars().any(char::is_numeric);
                prop_assert!(!(letter && digit), "{piece:?}");
            }
        }

        #[test]
        fn lossless_tiles_any_bytes(bytes in proptest::collection::vec(any::<u8>(), 0..64)) {
            let toks = pretokenize_lossless(&bytes, Pattern::Gpt2);
            prop_assert!(tiles(toks.iter().map(|p| p.span), bytes.len()));
        }
    }
}
