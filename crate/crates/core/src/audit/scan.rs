use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::AuditError;
use crate::encoding::{Encoding, Tokenize};
use crate::span::Span;

pub const DEFAULT_RANGE_CAP: u64 = 1_000_000;

const CHUNK: i64 = 2048;
const MAX_EXAMPLES: usize = 16;

/// Textual context an integer is encoded in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum IntegerFormat {
    /// The bare decimal string.
    #[default]
    Plain,
    /// `lo, lo+1, ..., hi` as one list; every integer after the first is
    /// preceded by `", "`.
    CommaSpaceList,
    /// A single leading space, as for a number inside running text.
    SpacePrefixed,
}

impl IntegerFormat {
    pub fn name(self) -> &'static str {
        match self {
            IntegerFormat::Plain => "plain",
            IntegerFormat::CommaSpaceList => "comma-space-list",
            IntegerFormat::SpacePrefixed => "space-prefixed",
        }
    }

    /// Render `nums` in this context, returning the text and the span of
    /// each number (sign and digits, without surrounding separators).
    ///
    /// Plain and space-prefixed numbers are put on separate lines, which the
    /// GPT-2 pre-tokenizer never merges across.
    pub fn render(self, nums: &[i64]) -> (String, Vec<Span>) {
        let (sep, prefix) = match self {
            IntegerFormat::Plain => ("\n", ""),
            IntegerFormat::SpacePrefixed => ("\n", " "),
            IntegerFormat::CommaSpaceList => (", ", ""),
        };
        let mut text = String::new();
        let mut spans = Vec::with_capacity(nums.len());
        for (i, n) in nums.iter().enumerate() {
            if i > 0 {
                text.push_str(sep);
            }
            text.push_str(prefix);
            let start = text.len();
            text.push_str(&n.to_string());
            spans.push(Span::new(start, text.len()));
        }
        (text, spans)
    }
}

impl fmt::Display for IntegerFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for IntegerFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "plain" => Ok(IntegerFormat::Plain),
            "comma-space-list" | "comma-space" => Ok(IntegerFormat::CommaSpaceList),
            "space-prefixed" => Ok(IntegerFormat::SpacePrefixed),
            other => Err(format!(
                "unknown integer format `{other}` (expected plain, comma-space-list, or space-prefixed)"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AdjacentPair {
    pub a: i64,
    pub b: i64,
    pub count_a: u32,
    pub count_b: u32,
    /// Sorted per-token overlap lengths with the number.
    pub shape_a: Vec<u8>,
    pub shape_b: Vec<u8>,
}

/// Token counts for every integer in `[lo, hi]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntegerChunkingProfile {
    pub lo: i64,
    pub hi: i64,
    pub format: IntegerFormat,
    /// `counts[i]` is the token count of `lo + i`.
    pub counts: Vec<u32>,
    pub fraction_single_token: f64,
    /// Pairs `(n, n + 1)` with the same digit count and sign whose token
    /// counts or split shapes differ.
    pub adjacent_inconsistency: u64,
    /// Maximal inclusive ranges of single-token integers.
    pub single_token_runs: Vec<[i64; 2]>,
    /// The first few inconsistent pairs.
    pub inconsistent_examples: Vec<AdjacentPair>,
}

impl IntegerChunkingProfile {
    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn count(&self, n: i64) -> Option<u32> {
        if n < self.lo || n > self.hi {
            return None;
        }
        self.counts.get(n.abs_diff(self.lo) as usize).copied()
    }

    pub fn single_token_count(&self) -> usize {
        self.counts.iter().filter(|&&c| c == 1).count()
    }

    /// Token count to number of integers with that count.
    pub fn histogram(&self) -> BTreeMap<u32, u64> {
        let mut h = BTreeMap::new();
        for &c in &self.counts {
            *h.entry(c).or_default() += 1;
        }
        h
    }
}

fn digit_count(n: i64) -> u32 {
    n.unsigned_abs().checked_ilog10().map_or(1, |l| l + 1)
}

fn measure(enc: &Encoding, span: Span) -> (u32, Vec<u8>) {
    let mut shape: Vec<u8> = enc
        .covering(span)
        .map(|t| {
            let lo = t.span.start.max(span.start);
            let hi = t.span.end.min(span.end);
            (hi - lo) as u8
        })
        .collect();
    shape.sort_unstable();
    (shape.len() as u32, shape)
}

fn measure_chunk<T: Tokenize + ?Sized>(
    tok: &T,
    format: IntegerFormat,
    start: i64,
    end: i64,
    list_start: bool,
) -> Result<Vec<(u32, Vec<u8>)>, AuditError> {
    match format {
        IntegerFormat::CommaSpaceList => {
            let nums: Vec<i64> = (start..=end).collect();
            let (body, spans) = format.render(&nums);
            let (text, offset) = if list_start {
                (body, 0)
            } else {
                (format!(", {body}"), 2)
            };
            let enc = tok.encode(&text)?;
            Ok(spans.into_iter().map(|s| measure(&enc, s.shift(offset))).collect())
        }
        _ => (start..=end)
            .map(|n| {
                let (text, spans) = format.render(&[n]);
                Ok(measure(&tok.encode(&text)?, spans[0]))
            })
            .collect(),
    }
}

/// Encode every integer in `[lo, hi]` in the given context and profile the
/// resulting token counts. Ranges larger than [`DEFAULT_RANGE_CAP`] are
/// rejected.
pub fn scan_integers<T: Tokenize + ?Sized>(
    tok: &T,
    lo: i64,
    hi: i64,
    format: IntegerFormat,
) -> Result<IntegerChunkingProfile, AuditError> {
    scan_integers_with_cap(tok, lo, hi, format, DEFAULT_RANGE_CAP)
}

pub fn scan_integers_with_cap<T: Tokenize + ?Sized>(
    tok: &T,
    lo: i64,
    hi: i64,
    format: IntegerFormat,
    cap: u64,
) -> Result<IntegerChunkingProfile, AuditError> {
    if lo > hi {
        return Err(AuditError::InvalidRange { lo, hi });
    }
    let size = hi.abs_diff(lo).saturating_add(1);
    if size > cap {
        return Err(AuditError::RangeTooLarge { size, cap });
    }
    let starts: Vec<i64> = (0..)
        .map(|k: i64| lo.saturating_add(k.saturating_mul(CHUNK)))
        .take_while(|&s| s <= hi)
        .collect();
    let measured: Vec<Vec<(u32, Vec<u8>)>> = starts
        .par_iter()
        .map(|&s| measure_chunk(tok, format, s, s.saturating_add(CHUNK - 1).min(hi), s == lo))
        .collect::<Result<_, _>>()?;
    let (counts, shapes): (Vec<u32>, Vec<Vec<u8>>) = measured.into_iter().flatten().unzip();

    let mut adjacent_inconsistency = 0;
    let mut inconsistent_examples = Vec::new();
    for i in 1..counts.len() {
        let (a, b) = (lo + i as i64 - 1, lo + i as i64);
        if digit_count(a) != digit_count(b) || (a < 0) != (b < 0) {
            continue;
        }
        if counts[i - 1] != counts[i] || shapes[i - 1] != shapes[i] {
            adjacent_inconsistency += 1;
            if inconsistent_examples.len() < MAX_EXAMPLES {
                inconsistent_examples.push(AdjacentPair {
                    a,
                    b,
                    count_a: counts[i - 1],
                    count_b: counts[i],
                    shape_a: shapes[i - 1].clone(),
                    shape_b: shapes[i].clone(),
                });
            }
        }
    }

    let mut single_token_runs: Vec<[i64; 2]> = Vec::new();
    for (i, &c) in counts.iter().enumerate() {
        if c != 1 {
            continue;
        }
        let n = lo + i as i64;
        match single_token_runs.last_mut() {
            Some(run) if run[1] + 1 == n => run[1] = n,
            _ => single_token_runs.push([n, n]),
        }
    }
    let singles = counts.iter().filter(|&&c| c == 1).count();

    Ok(IntegerChunkingProfile {
        lo,
        hi,
        format,
        fraction_single_token: singles as f64 / counts.len() as f64,
        counts,
        adjacent_inconsistency,
        single_token_runs,
        inconsistent_examples,
    })
}

/// Year coverage: each year is encoded as it appears inside running text,
/// with a leading space.
pub fn scan_years<T: Tokenize + ?Sized>(tok: &T, lo: i64, hi: i64) -> Result<IntegerChunkingProfile, AuditError> {
    scan_integers_with_cap(tok, lo, hi, IntegerFormat::SpacePrefixed, u64::MAX)
}
