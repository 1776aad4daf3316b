use serde::{Deserialize, Serialize};

use super::alignment::{sign_merge_tokens, signed_minus_positions};
use super::{evidence, AuditError, Finding, PitfallKind, Severity, TokenEvidence};
use crate::encoding::{Encoding, TokenId, Tokenize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CaseMode {
    /// Uppercase the first code point only.
    #[default]
    First,
    /// Uppercase every code point.
    Full,
}

fn case_variant(word: &str, mode: CaseMode) -> String {
    match mode {
        CaseMode::Full => word.to_uppercase(),
        CaseMode::First => {
            let mut chars = word.chars();
            match chars.next() {
                Some(c) => c.to_uppercase().chain(chars).collect(),
                None => String::new(),
            }
        }
    }
}

/// Encode `word` and its capitalized variant; triggered iff the ID sequences
/// differ.
pub fn probe_case<T: Tokenize + ?Sized>(tok: &T, word: &str, mode: CaseMode) -> Result<Finding, AuditError> {
    if word.is_empty() {
        return Err(AuditError::EmptyInput("case probe word"));
    }
    let variant = case_variant(word, mode);
    let enc = tok.encode(word)?;
    let var_enc = tok.encode(&variant)?;
    let differ = enc.ids() != var_enc.ids();
    let mut finding = Finding::new(PitfallKind::Case, word, Severity::from_triggered(differ))
        .with_tokens(evidence(word, &enc))
        .metric("mode", mode)
        .metric("variant", &variant)
        .metric("variant_tokens", evidence(&variant, &var_enc));
    if variant == word {
        finding = finding.metric("note", "variant is identical to the input");
    }
    Ok(finding)
}

/// Continuation used to expose a stranded trailing space.
pub const DEFAULT_CONTINUATION: &str = "the";

fn is_prefix(prefix: &[TokenId], of: &[TokenId]) -> bool {
    of.len() >= prefix.len() && of[..prefix.len()] == *prefix
}

/// Compare `text` with `text + " "`.
///
/// Triggered iff either
/// * the IDs of `text` are not a prefix of the IDs of `text + " "`, or
/// * the trailing space becomes a token of its own that the next word would
///   have absorbed: the IDs of `text + " "` are not a prefix of the IDs of
///   `text + " " + continuation`.
///
/// An empty `continuation` disables the second check.
pub fn probe_whitespace<T: Tokenize + ?Sized>(
    tok: &T,
    text: &str,
    continuation: &str,
) -> Result<Finding, AuditError> {
    if text.is_empty() {
        return Ok(Finding::new(PitfallKind::Whitespace, text, Severity::Clean)
            .metric("note", "empty input: nothing precedes the appended space"));
    }
    let base = tok.encode(text)?;
    let spaced_text = format!("{text} ");
    let spaced = tok.encode(&spaced_text)?;
    let prefix_changed = !is_prefix(&base.ids(), &spaced.ids());
    let mut finding = Finding::new(PitfallKind::Whitespace, text, Severity::Clean)
        .with_tokens(evidence(text, &base))
        .metric("prefix_changed", prefix_changed)
        .metric("spaced_tokens", evidence(&spaced_text, &spaced));
    let mut stranded = false;
    if !continuation.is_empty() {
        let continued_text = format!("{spaced_text}{continuation}");
        let continued = tok.encode(&continued_text)?;
        stranded = !is_prefix(&spaced.ids(), &continued.ids());
        finding = finding
            .metric("continuation", continuation)
            .metric("continued_tokens", evidence(&continued_text, &continued));
    }
    finding.severity = Severity::from_triggered(prefix_changed || stranded);
    Ok(finding.metric("stranded_space", stranded))
}

/// `[+-]digits[.digits]`
fn is_decimal_number(text: &str) -> bool {
    let body = text.strip_prefix(['-', '+']).unwrap_or(text);
    let (int_part, frac_part) = match body.split_once('.') {
        Some((i, f)) => (i, Some(f)),
        None => (body, None),
    };
    let digits = |s: &str| !s.is_empty() && s.bytes().all(|b| b.is_ascii_digit());
    digits(int_part) && frac_part.is_none_or(digits)
}

fn merged_with_digit(enc: &Encoding, text: &str, mark: u8) -> bool {
    enc.spans().iter().any(|s| {
        let piece = &text.as_bytes()[s.range()];
        piece.contains(&mark) && piece.iter().any(u8::is_ascii_digit)
    })
}

/// Isolated encoding of a numeric literal; triggered iff more than one token.
pub(crate) fn fragmentation_finding<T: Tokenize + ?Sized>(
    tok: &T,
    literal: &str,
    pitfall: PitfallKind,
) -> Result<Finding, AuditError> {
    let enc = tok.encode(literal)?;
    let segments: Vec<TokenEvidence> = evidence(literal, &enc);
    let texts: Vec<&str> = segments.iter().map(|t| t.text.as_str()).collect();
    Ok(Finding::new(pitfall, literal, Severity::from_triggered(enc.len() > 1))
        .metric("token_count", enc.len())
        .metric("segments", &texts)
        .metric("sign_merged", merged_with_digit(&enc, literal, b'-'))
        .metric("point_merged", merged_with_digit(&enc, literal, b'.'))
        .with_tokens(segments))
}

/// Segment a decimal number; triggered iff it takes more than one token.
pub fn analyze_float<T: Tokenize + ?Sized>(tok: &T, text: &str) -> Result<Finding, AuditError> {
    if !is_decimal_number(text) {
        return Err(AuditError::NotANumber(text.to_owned()));
    }
    fragmentation_finding(tok, text, PitfallKind::FloatFragmentation)
}

/// Flag tokens that fuse a separator (`,` `;` space) with a minus sign that
/// directly precedes a digit.
pub fn detect_sign_merges<T: Tokenize + ?Sized>(tok: &T, text: &str) -> Result<Finding, AuditError> {
    let enc = tok.encode(text)?;
    let merged = sign_merge_tokens(text, &enc);
    let minus = signed_minus_positions(text);
    let absorbed = minus
        .iter()
        .filter(|&&p| merged.iter().any(|t| t.span.contains(p)))
        .count();
    let tokens: Vec<TokenEvidence> = merged
        .iter()
        .map(|t| TokenEvidence::new(text, t.id, t.span))
        .collect();
    Ok(Finding::new(PitfallKind::SignMerge, text, Severity::from_triggered(!tokens.is_empty()))
        .metric("sign_merge_count", tokens.len())
        .metric("negative_numbers", minus.len())
        .metric("merged_signs", absorbed)
        .with_tokens(tokens))
}
