use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::{evidence, AuditError, Finding, PitfallKind, Severity};
use crate::encoding::{Encoding, Tokenize};
use crate::numtok::scan_numbers;
use crate::span::Span;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TextDivergence {
    pub text: String,
    pub ids_differ: bool,
    pub segmentation_differs: bool,
    pub numeric_literals: usize,
    /// Numeric literals whose internal token boundaries differ.
    pub numeric_literals_differ: usize,
    pub segments_a: Vec<String>,
    pub segments_b: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DivergenceReport {
    pub tokenizer_a: String,
    pub tokenizer_b: String,
    pub texts: Vec<TextDivergence>,
    /// Fraction of texts whose segmentations differ.
    pub divergence_rate: f64,
    /// Fraction of texts whose ID sequences differ.
    pub id_divergence_rate: f64,
    /// Fraction of numeric literals, over all texts, segmented differently.
    pub numeric_divergence_rate: f64,
}

impl DivergenceReport {
    /// One divergence finding per text.
    pub fn findings<A: Tokenize + ?Sized>(&self, tok_a: &A) -> Result<Vec<Finding>, AuditError> {
        self.texts
            .iter()
            .map(|t| {
                let enc = tok_a.encode(&t.text)?;
                Ok(Finding::new(
                    PitfallKind::Divergence,
                    &t.text,
                    Severity::from_triggered(t.segmentation_differs),
                )
                .with_tokens(evidence(&t.text, &enc))
                .metric("compared_with", &self.tokenizer_b)
                .metric("ids_differ", t.ids_differ)
                .metric("segmentation_differs", t.segmentation_differs)
                .metric("numeric_literals", t.numeric_literals)
                .metric("numeric_literals_differ", t.numeric_literals_differ)
                .metric("segments_other", &t.segments_b))
            })
            .collect()
    }
}

fn segments(text: &str, enc: &Encoding) -> Vec<String> {
    enc.spans()
        .iter()
        .map(|s| String::from_utf8_lossy(&text.as_bytes()[s.range()]).into_owned())
        .collect()
}

/// Token boundaries strictly inside `span`.
fn inner_boundaries(enc: &Encoding, span: Span) -> BTreeSet<usize> {
    enc.boundaries()
        .into_iter()
        .filter(|&b| b > span.start && b < span.end)
        .collect()
}

fn rate(hits: usize, total: usize) -> f64 {
    if total == 0 {
        0.0
    } else {
        hits as f64 / total as f64
    }
}

/// Encode each text with both tokenizers and compare IDs and segmentations.
pub fn compare_tokenizers<A, B>(tok_a: &A, tok_b: &B, corpus: &[impl AsRef<str>]) -> Result<DivergenceReport, AuditError>
where
    A: Tokenize + ?Sized,
    B: Tokenize + ?Sized,
{
    let mut texts = Vec::with_capacity(corpus.len());
    let (mut literals, mut literals_differ) = (0, 0);
    for text in corpus {
        let text = text.as_ref();
        let ea = tok_a.encode(text)?;
        let eb = tok_b.encode(text)?;
        let nums = scan_numbers(text);
        let differ = nums
            .iter()
            .filter(|lit| inner_boundaries(&ea, lit.span) != inner_boundaries(&eb, lit.span))
            .count();
        literals += nums.len();
        literals_differ += differ;
        texts.push(TextDivergence {
            text: text.to_owned(),
            ids_differ: ea.ids() != eb.ids(),
            segmentation_differs: ea.spans() != eb.spans(),
            numeric_literals: nums.len(),
            numeric_literals_differ: differ,
            segments_a: segments(text, &ea),
            segments_b: segments(text, &eb),
        });
    }
    let seg = texts.iter().filter(|t| t.segmentation_differs).count();
    let ids = texts.iter().filter(|t| t.ids_differ).count();
    Ok(DivergenceReport {
        tokenizer_a: tok_a.name().to_owned(),
        tokenizer_b: tok_b.name().to_owned(),
        divergence_rate: rate(seg, texts.len()),
        id_divergence_rate: rate(ids, texts.len()),
        numeric_divergence_rate: rate(literals_differ, literals),
        texts,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numtok::NumericTokenizer;
    use crate::reference::r50k;

    const CORPUS: [&str; 3] = ["480, 481", "3.14159", "the first step is"];

    #[test]
    fn identity_has_no_divergence() {
        let tok = r50k();
        let r = compare_tokenizers(&*tok, &*tok, &CORPUS).unwrap();
        assert_eq!(r.divergence_rate, 0.0);
        assert_eq!(r.id_divergence_rate, 0.0);
        assert_eq!(r.numeric_divergence_rate, 0.0);
    }

    #[test]
    fn numtok_diverges_on_every_number() {
        let base = r50k();
        let num = NumericTokenizer::new(base.clone());
        let r = compare_tokenizers(&*base, &num, &["480, 481"]).unwrap();
        assert_eq!(r.numeric_divergence_rate, 1.0);
        assert_eq!(r.divergence_rate, 1.0);
        let words = compare_tokenizers(&*base, &num, &["the first step is"]).unwrap();
        assert_eq!(words.divergence_rate, 0.0);
        assert_eq!(words.id_divergence_rate, 0.0);
        let findings = r.findings(&*base).unwrap();
        assert!(findings[0].is_triggered());
    }

    #[test]
    fn empty_corpus() {
        let tok = r50k();
        let r = compare_tokenizers(&*tok, &*tok, &[] as &[&str]).unwrap();
        assert_eq!(r.divergence_rate, 0.0);
    }
}
