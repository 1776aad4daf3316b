//! Digit-level tokenization for numbers.
//!
//! Numeric spans are emitted one reserved token per character: each digit,
//! the minus sign, the decimal point, and the exponent marker. Everything else
//! goes to a base tokenizer (or is spelled byte by byte). Token counts for a
//! number therefore depend only on its digit count and sign.
//!
//! Numeric grammar, matched greedily left to right on ASCII:
//!
//! ```text
//! number   = ["-"] digits ["." digits] [("e" | "E") ["-"] digits]
//! digits   = 1*("0".."9")
//! ```
//!
//! Thousands separators are not part of the grammar: in CSV data a comma is a
//! field delimiter.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::encoding::{DecodeError, EncodeError, Encoding, TokenId, Tokenize};
use crate::span::Span;

/// How text outside numeric spans is tokenized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Fallback {
    #[default]
    DelegateToBase,
    /// One reserved token per byte, starting at `byte_tokens_start`.
    PerByte,
}

/// Reserved token IDs for numeric characters.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NumericPolicy {
    pub sign_token: TokenId,
    pub point_token: TokenId,
    /// Marker for lowercase `e`.
    pub exponent_token: TokenId,
    /// Marker for uppercase `E`.
    pub exponent_upper_token: TokenId,
    pub digit_tokens: [TokenId; 10],
    pub fallback: Fallback,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub byte_tokens_start: Option<TokenId>,
}

impl NumericPolicy {
    /// Contiguous reserved block starting at `start`: digits 0–9, sign, point,
    /// `e`, `E`, then 256 byte tokens when `fallback` is per-byte.
    pub fn reserved_from(start: TokenId, fallback: Fallback) -> Self {
        let mut digit_tokens = [0; 10];
        for (d, slot) in digit_tokens.iter_mut().enumerate() {
            *slot = start + d as TokenId;
        }
        Self {
            digit_tokens,
            sign_token: start + 10,
            point_token: start + 11,
            exponent_token: start + 12,
            exponent_upper_token: start + 13,
            fallback,
            byte_tokens_start: (fallback == Fallback::PerByte).then_some(start + 14),
        }
    }

    /// Default block placed directly above the base tokenizer's ID range.
    pub fn above<B: Tokenize>(base: &B, fallback: Fallback) -> Self {
        Self::reserved_from(base.id_bound(), fallback)
    }

    /// Every reserved ID with the byte it spells.
    fn reserved(&self) -> Vec<(TokenId, u8)> {
        let mut out: Vec<(TokenId, u8)> = self
            .digit_tokens
            .iter()
            .enumerate()
            .map(|(d, &id)| (id, b'0' + d as u8))
            .collect();
        out.push((self.sign_token, b'-'));
        out.push((self.point_token, b'.'));
        out.push((self.exponent_token, b'e'));
        out.push((self.exponent_upper_token, b'E'));
        if let Some(start) = self.byte_tokens_start {
            out.extend((0..=255u8).map(|b| (start + b as TokenId, b)));
        }
        out
    }

    /// Smallest and one-past-largest reserved ID.
    pub fn reserved_range(&self) -> (TokenId, TokenId) {
        let ids = self.reserved();
        let lo = ids.iter().map(|&(id, _)| id).min().unwrap_or(0);
        let hi = ids.iter().map(|&(id, _)| id).max().map_or(0, |m| m + 1);
        (lo, hi)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum NumtokError {
    #[error("reserved token id {0} is used twice in the numeric policy")]
    DuplicateReserved(TokenId),
    #[error("reserved token id {id} collides with the base vocabulary (ids below {bound})")]
    Collision { id: TokenId, bound: TokenId },
    #[error("per-byte fallback requires byte_tokens_start")]
    MissingByteTokens,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NumberKind {
    Integer,
    Decimal,
    Scientific,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct NumericLiteral {
    pub span: Span,
    pub kind: NumberKind,
    pub negative: bool,
}

fn digits_end(bytes: &[u8], mut i: usize) -> usize {
    while i < bytes.len() && bytes[i].is_ascii_digit() {
        i += 1;
    }
    i
}

/// Match the numeric grammar at `start`; returns the end offset and kind.
fn match_number(bytes: &[u8], start: usize) -> Option<(usize, NumberKind)> {
    let mut i = start;
    if bytes.get(i) == Some(&b'-') {
        i += 1;
    }
    let int_end = digits_end(bytes, i);
    if int_end == i {
        return None;
    }
    i = int_end;
    let mut kind = NumberKind::Integer;
    if bytes.get(i) == Some(&b'.') {
        let frac_end = digits_end(bytes, i + 1);
        if frac_end > i + 1 {
            i = frac_end;
            kind = NumberKind::Decimal;
        }
    }
    if matches!(bytes.get(i), Some(b'e' | b'E')) {
        let mut j = i + 1;
        if bytes.get(j) == Some(&b'-') {
            j += 1;
        }
        let exp_end = digits_end(bytes, j);
        if exp_end > j {
            i = exp_end;
            kind = NumberKind::Scientific;
        }
    }
    Some((i, kind))
}

/// Maximal numeric literals in `text`, left to right.
pub fn scan_numbers(text: &str) -> Vec<NumericLiteral> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        match match_number(bytes, i) {
            Some((end, kind)) => {
                out.push(NumericLiteral {
                    span: Span::new(i, end),
                    kind,
                    negative: bytes[i] == b'-',
                });
                i = end;
            }
            None => i += 1,
        }
    }
    out
}

/// Digit-level tokenizer layered over a base tokenizer.
pub struct NumericTokenizer<B> {
    base: B,
    policy: NumericPolicy,
    by_byte: [Option<TokenId>; 256],
    by_id: HashMap<TokenId, u8>,
    name: String,
}

impl<B: Tokenize> NumericTokenizer<B> {
    /// Reserved IDs are placed directly above the base vocabulary.
    pub fn new(base: B) -> Self {
        let policy = NumericPolicy::above(&base, Fallback::DelegateToBase);
        Self::with_policy(base, policy).expect("default policy sits above the base range")
    }

    pub fn with_policy(base: B, policy: NumericPolicy) -> Result<Self, NumtokError> {
        if policy.fallback == Fallback::PerByte && policy.byte_tokens_start.is_none() {
            return Err(NumtokError::MissingByteTokens);
        }
        let bound = base.id_bound();
        let mut by_id = HashMap::new();
        let mut by_byte = [None; 256];
        for (id, byte) in policy.reserved() {
            if id < bound {
                return Err(NumtokError::Collision { id, bound });
            }
            if by_id.insert(id, byte).is_some() {
                return Err(NumtokError::DuplicateReserved(id));
            }
            // Numeric characters come first, so they keep their numeric token.
            by_byte[byte as usize].get_or_insert(id);
        }
        let name = format!("numtok+{}", base.name());
        Ok(Self {
            base,
            policy,
            by_byte,
            by_id,
            name,
        })
    }

    pub fn policy(&self) -> &NumericPolicy {
        &self.policy
    }

    pub fn base(&self) -> &B {
        &self.base
    }

    fn numeric_id(&self, byte: u8) -> TokenId {
        match byte {
            b'0'..=b'9' => self.policy.digit_tokens[(byte - b'0') as usize],
            b'-' => self.policy.sign_token,
            b'.' => self.policy.point_token,
            b'e' => self.policy.exponent_token,
            b'E' => self.policy.exponent_upper_token,
            _ => unreachable!("not a numeric character"),
        }
    }

    fn encode_other(&self, text: &str, offset: usize, out: &mut Encoding) -> Result<(), EncodeError> {
        if text.is_empty() {
            return Ok(());
        }
        match self.policy.fallback {
            Fallback::DelegateToBase => out.extend_shifted(self.base.encode(text)?, offset),
            Fallback::PerByte => {
                for (i, b) in text.bytes().enumerate() {
                    let id = self.by_byte[b as usize].expect("per-byte policy covers all bytes");
                    out.push(id, Span::new(offset + i, offset + i + 1));
                }
            }
        }
        Ok(())
    }

    /// Check the digit-count guarantee on every integer in `[lo, hi]`.
    pub fn verify_consistency(&self, lo: i64, hi: i64) -> ConsistencyReport {
        verify_consistency(self, lo, hi)
    }
}

/// Check, for every integer `n` in `[lo, hi]`, that `tok` spends exactly
/// one token per digit plus one for a minus sign.
///
/// Equal counts for every integer imply that two integers with the same digit
/// count and sign never differ, so a clean pass also means zero adjacent
/// inconsistencies.
pub fn verify_consistency<T: Tokenize + ?Sized>(tok: &T, lo: i64, hi: i64) -> ConsistencyReport {
    const CHUNK: i64 = 4096;
    let chunks: Vec<(i64, i64)> = (0..)
        .map(|k| lo.saturating_add(k * CHUNK))
        .take_while(|&s| s <= hi)
        .map(|s| (s, s.saturating_add(CHUNK - 1).min(hi)))
        .collect();
    let results: Vec<(Option<Counterexample>, u64)> = chunks
        .par_iter()
        .map(|&(s, e)| {
            let mut first = None;
            let mut failures = 0;
            for n in s..=e {
                let actual = tok.encode(&n.to_string()).map_or(usize::MAX, |enc| enc.len());
                let expected = expected_token_count(n);
                if actual != expected {
                    failures += 1;
                    first.get_or_insert(Counterexample { n, expected, actual });
                }
            }
            (first, failures)
        })
        .collect();
    let count_failures: u64 = results.iter().map(|(_, f)| f).sum();
    ConsistencyReport {
        lo,
        hi,
        checked: if hi >= lo { hi.abs_diff(lo) + 1 } else { 0 },
        count_failures,
        passed: count_failures == 0,
        counterexample: results.into_iter().find_map(|(c, _)| c),
    }
}

/// Digits plus one for a minus sign.
pub fn expected_token_count(n: i64) -> usize {
    let digits = n.unsigned_abs().checked_ilog10().map_or(1, |l| l as usize + 1);
    digits + usize::from(n < 0)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counterexample {
    pub n: i64,
    pub expected: usize,
    pub actual: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConsistencyReport {
    pub lo: i64,
    pub hi: i64,
    pub checked: u64,
    pub count_failures: u64,
    pub passed: bool,
    pub counterexample: Option<Counterexample>,
}

impl<B: Tokenize> Tokenize for NumericTokenizer<B> {
    fn name(&self) -> &str {
        &self.name
    }

    fn encode(&self, text: &str) -> Result<Encoding, EncodeError> {
        let mut out = Encoding::default();
        let mut pos = 0;
        for lit in scan_numbers(text) {
            self.encode_other(&text[pos..lit.span.start], pos, &mut out)?;
            for (i, b) in text[lit.span.range()].bytes().enumerate() {
                let at = lit.span.start + i;
                out.push(self.numeric_id(b), Span::new(at, at + 1));
            }
            pos = lit.span.end;
        }
        self.encode_other(&text[pos..], pos, &mut out)?;
        Ok(out)
    }

    fn id_bound(&self) -> TokenId {
        self.policy.reserved_range().1.max(self.base.id_bound())
    }

    fn decode_bytes(&self, ids: &[TokenId]) -> Result<Vec<u8>, DecodeError> {
        let mut out = Vec::new();
        let mut run: Vec<TokenId> = Vec::new();
        for &id in ids {
            match self.by_id.get(&id) {
                Some(&b) => {
                    if !run.is_empty() {
                        out.extend(self.base.decode_bytes(&run)?);
                        run.clear();
                    }
                    out.push(b);
                }
                None => run.push(id),
            }
        }
        if !run.is_empty() {
            out.extend(self.base.decode_bytes(&run)?);
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reference;

    fn tok() -> NumericTokenizer<std::sync::Arc<crate::bpe::BpeTokenizer>> {
        NumericTokenizer::new(reference::r50k())
    }

    fn pieces(t: &impl Tokenize, text: &str) -> Vec<String> {
        t.encode(text)
            .unwrap()
            .spans()
            .into_iter()
            .map(|s| text[s.range()].to_owned())
            .collect()
    }

    #[test]
    fn grammar() {
        let lits = |t: &str| -> Vec<(String, NumberKind)> {
            scan_numbers(t)
                .into_iter()
                .map(|l| (t[l.span.range()].to_owned(), l.kind))
                .collect()
        };
        assert_eq!(lits("3.14159"), [("3.14159".into(), NumberKind::Decimal)]);
        assert_eq!(
            lits("a-0.69;1e-5,2E3"),
            [
                ("-0.69".into(), NumberKind::Decimal),
                ("1e-5".into(), NumberKind::Scientific),
                ("2E3".into(), NumberKind::Scientific)
            ]
        );
        assert_eq!(
            lits("5-3 1.2.3 3. .5 1,000"),
            [
                ("5".into(), NumberKind::Integer),
                ("-3".into(), NumberKind::Integer),
                ("1.2".into(), NumberKind::Decimal),
                ("3".into(), NumberKind::Integer),
                ("3".into(), NumberKind::Integer),
                ("5".into(), NumberKind::Integer),
                ("1".into(), NumberKind::Integer),
                ("000".into(), NumberKind::Integer)
            ]
        );
        assert!(lits("1e").iter().all(|(_, k)| *k == NumberKind::Integer));
    }

    #[test]
    fn float_is_one_token_per_character() {
        let t = tok();
        assert_eq!(pieces(&t, "3.14159"), ["3", ".", "1", "4", "1", "5", "9"]);
        let enc = t.encode("3.14159").unwrap();
        let p = t.policy();
        assert_eq!(
            enc.ids(),
            [
                p.digit_tokens[3],
                p.point_token,
                p.digit_tokens[1],
                p.digit_tokens[4],
                p.digit_tokens[1],
                p.digit_tokens[5],
                p.digit_tokens[9]
            ]
        );
    }

    #[test]
    fn empty_input() {
        assert!(tok().encode("").unwrap().is_empty());
        assert_eq!(tok().decode(&[]).unwrap(), "");
    }

    #[test]
    fn sign_never_merges_with_separator() {
        let t = tok();
        assert_eq!(pieces(&t, "a-0.69;"), ["a", "-", "0", ".", "6", "9", ";"]);
        let enc = t.encode("a-0.69;").unwrap();
        let base = reference::r50k();
        assert_eq!(enc.ids()[0], base.encode("a").unwrap().ids()[0]);
        assert_eq!(enc.ids()[1], t.policy().sign_token);
        assert_eq!(*enc.ids().last().unwrap(), base.encode(";").unwrap().ids()[0]);
    }

    #[test]
    fn decode_examples() {
        let t = tok();
        let p = t.policy().clone();
        assert_eq!(
            t.decode(&[p.sign_token, p.digit_tokens[4], p.digit_tokens[8], p.digit_tokens[0]]).unwrap(),
            "-480"
        );
        let ids = t.encode("49105962326000").unwrap().ids();
        assert_eq!(t.decode(&ids).unwrap(), "49105962326000");
        assert_eq!(t.decode(&[999_999]), Err(DecodeError::UnknownId(999_999)));
    }

    #[test]
    fn reserved_block_sits_above_base() {
        let t = tok();
        let (lo, hi) = t.policy().reserved_range();
        assert_eq!(lo, 50_257);
        assert_eq!(hi, 50_257 + 14);
        assert_eq!(t.id_bound(), hi);
    }

    #[test]
    fn policy_validation() {
        let base = reference::r50k();
        let colliding = NumericPolicy::reserved_from(100, Fallback::DelegateToBase);
        assert!(matches!(
            NumericTokenizer::with_policy(base.clone(), colliding),
            Err(NumtokError::Collision { id: 100, .. })
        ));
        let mut dup = NumericPolicy::above(&base, Fallback::DelegateToBase);
        dup.point_token = dup.sign_token;
        assert!(matches!(
            NumericTokenizer::with_policy(base.clone(), dup),
            Err(NumtokError::DuplicateReserved(_))
        ));
        let mut missing = NumericPolicy::above(&base, Fallback::PerByte);
        missing.byte_tokens_start = None;
        assert_eq!(
            NumericTokenizer::with_policy(base, missing).err(),
            Some(NumtokError::MissingByteTokens)
        );
    }

    #[test]
    fn per_byte_fallback_roundtrips() {
        let base = reference::r50k();
        let policy = NumericPolicy::above(&base, Fallback::PerByte);
        let t = NumericTokenizer::with_policy(base, policy).unwrap();
        let text = "x=-1.5e-3; ünï";
        let enc = t.encode(text).unwrap();
        assert_eq!(enc.len(), text.len());
        assert_eq!(t.decode(&enc.ids()).unwrap(), text);
    }

    #[test]
    fn policy_json_shape() {
        let json = serde_json::to_value(NumericPolicy::reserved_from(10, Fallback::DelegateToBase)).unwrap();
        assert_eq!(json["sign_token"], 20);
        assert_eq!(json["point_token"], 21);
        assert_eq!(json["exponent_token"], 22);
        assert_eq!(json["digit_tokens"].as_array().unwrap().len(), 10);
        assert_eq!(json["fallback"], "delegate-to-base");
        let back: NumericPolicy = serde_json::from_value(json).unwrap();
        assert_eq!(back, NumericPolicy::reserved_from(10, Fallback::DelegateToBase));
    }

    #[test]
    fn expected_counts() {
        assert_eq!(expected_token_count(0), 1);
        assert_eq!(expected_token_count(9), 1);
        assert_eq!(expected_token_count(10), 2);
        assert_eq!(expected_token_count(-1000), 5);
        assert_eq!(expected_token_count(i64::MIN), 20);
    }

    #[test]
    fn verify_small_ranges() {
        let t = tok();
        let r = t.verify_consistency(0, 0);
        assert!(r.passed);
        assert_eq!(r.checked, 1);
        let r = t.verify_consistency(-1000, 1000);
        assert!(r.passed && r.count_failures == 0 && r.checked == 2001);
        for n in [480, 481, 482] {
            assert_eq!(t.encode(&n.to_string()).unwrap().len(), 3);
        }
    }

    #[test]
    fn verify_reports_counterexample_for_bpe() {
        let r50k = reference::r50k();
        let report = verify_consistency(&*r50k, 480, 482);
        assert!(!report.passed);
        assert_eq!(report.count_failures, 3);
        assert_eq!(
            report.counterexample,
            Some(Counterexample {
                n: 480,
                expected: 3,
                actual: 1
            })
        );
    }
}
