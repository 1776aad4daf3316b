use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::AuditError;
use crate::encoding::{Encoding, Token};
use crate::span::Span;

const SEPARATORS: [u8; 3] = *b",; ";

/// Offsets of every `-` that is directly followed by an ASCII digit.
pub(crate) fn signed_minus_positions(text: &str) -> Vec<usize> {
    let b = text.as_bytes();
    (0..b.len())
        .filter(|&i| b[i] == b'-' && b.get(i + 1).is_some_and(u8::is_ascii_digit))
        .collect()
}

/// A token spanning `span` in `text` is a sign merge iff it contains a
/// separator and a `-` that directly precedes a digit in `text`.
pub fn is_sign_merge(text: &str, span: Span) -> bool {
    let b = text.as_bytes();
    let piece = &b[span.range()];
    piece.iter().any(|c| SEPARATORS.contains(c))
        && span
            .range()
            .any(|i| b[i] == b'-' && b.get(i + 1).is_some_and(u8::is_ascii_digit))
}

pub fn sign_merge_tokens(text: &str, enc: &Encoding) -> Vec<Token> {
    enc.tokens()
        .iter()
        .filter(|t| is_sign_merge(text, t.span))
        .copied()
        .collect()
}

/// How well token boundaries respect semantic field boundaries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlignmentMetrics {
    pub fields: usize,
    /// Distinct field start and end offsets.
    pub boundaries: usize,
    pub aligned_boundaries: usize,
    /// `aligned_boundaries / boundaries`; 1.0 when there are no boundaries.
    pub boundary_alignment: f64,
    pub tokens_per_field_mean: f64,
    pub tokens_per_field_max: usize,
    /// Fields overlapped by more than one token.
    pub fields_split: usize,
    pub sign_merge_count: usize,
    /// Fields whose leading minus sign sits inside a sign-merge token.
    pub sign_merged_fields: usize,
}

/// Tokens of `enc` overlapping each field, in field order.
pub(crate) fn tokens_per_field(enc: &Encoding, fields: &[Span]) -> Vec<usize> {
    fields.iter().map(|f| enc.covering(*f).count()).collect()
}

/// Field spans must lie within `text`; `enc` must be an encoding of `text`.
pub fn alignment_metrics(text: &str, enc: &Encoding, fields: &[Span]) -> Result<AlignmentMetrics, AuditError> {
    for f in fields {
        if f.start > f.end || f.end > text.len() {
            return Err(AuditError::SpanOutOfRange {
                start: f.start,
                end: f.end,
                len: text.len(),
            });
        }
    }
    let token_bounds = enc.boundaries();
    let field_bounds: BTreeSet<usize> = fields.iter().flat_map(|f| [f.start, f.end]).collect();
    let aligned = field_bounds.iter().filter(|b| token_bounds.contains(b)).count();
    let counts = tokens_per_field(enc, fields);
    let merges = sign_merge_tokens(text, enc);
    let sign_merged_fields = fields
        .iter()
        .filter(|f| {
            text.as_bytes().get(f.start) == Some(&b'-')
                && merges.iter().any(|t| t.span.contains(f.start))
        })
        .count();
    Ok(AlignmentMetrics {
        fields: fields.len(),
        boundaries: field_bounds.len(),
        aligned_boundaries: aligned,
        boundary_alignment: if field_bounds.is_empty() {
            1.0
        } else {
            aligned as f64 / field_bounds.len() as f64
        },
        tokens_per_field_mean: if counts.is_empty() {
            0.0
        } else {
            counts.iter().sum::<usize>() as f64 / counts.len() as f64
        },
        tokens_per_field_max: counts.iter().copied().max().unwrap_or(0),
        fields_split: counts.iter().filter(|&&c| c > 1).count(),
        sign_merge_count: merges.len(),
        sign_merged_fields,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reference::r50k;
    use crate::Tokenize;

    #[test]
    fn single_token_field() {
        let enc = r50k().encode("good").unwrap();
        let m = alignment_metrics("good", &enc, &[Span::new(0, 4)]).unwrap();
        assert_eq!(m.boundary_alignment, 1.0);
        assert_eq!(m.tokens_per_field_max, 1);
        assert_eq!(m.tokens_per_field_mean, 1.0);
    }

    #[test]
    fn float_field() {
        let enc = r50k().encode("3.14159").unwrap();
        let m = alignment_metrics("3.14159", &enc, &[Span::new(0, 7)]).unwrap();
        assert_eq!(m.tokens_per_field_max, 4);
        assert_eq!(m.fields_split, 1);
    }

    #[test]
    fn sign_merge_breaks_alignment() {
        let text = "1,-0.69";
        let enc = r50k().encode(text).unwrap();
        let fields = [Span::new(0, 1), Span::new(2, 7)];
        let m = alignment_metrics(text, &enc, &fields).unwrap();
        assert!(m.boundary_alignment < 1.0);
        assert_eq!(m.sign_merge_count, 1);
        assert_eq!(m.sign_merged_fields, 1);
        let reversed = [fields[1], fields[0]];
        assert_eq!(alignment_metrics(text, &enc, &reversed).unwrap(), m);
    }

    #[test]
    fn out_of_range() {
        let enc = r50k().encode("abc").unwrap();
        assert!(matches!(
            alignment_metrics("abc", &enc, &[Span::new(1, 9)]),
            Err(AuditError::SpanOutOfRange { .. })
        ));
        let empty = alignment_metrics("abc", &enc, &[]).unwrap();
        assert_eq!(empty.boundary_alignment, 1.0);
    }

    #[test]
    fn sign_merge_rule() {
        assert!(is_sign_merge(",-0", Span::new(0, 2)));
        assert!(!is_sign_merge("5-3", Span::new(1, 2)));
        assert!(!is_sign_merge(", -x", Span::new(0, 3)));
        assert_eq!(signed_minus_positions("a-1 -b 2-3"), [1, 8]);
    }
}
