//! Detectors for tokenization pitfalls on numeric and temporal text.
//!
//! Every detector is a pure function of an immutable tokenizer and its input.
//! A [`Finding`]'s evidence tokens are a subset of `encode(subject)`, so a
//! finding can be reproduced from the subject alone.

mod alignment;
mod compare;
mod probes;
mod report;
mod scan;

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::encoding::{EncodeError, Encoding, TokenId};
use crate::span::Span;

pub use alignment::{alignment_metrics, is_sign_merge, sign_merge_tokens, AlignmentMetrics};
pub use compare::{compare_tokenizers, DivergenceReport, TextDivergence};
pub use probes::{analyze_float, detect_sign_merges, probe_case, probe_whitespace, CaseMode, DEFAULT_CONTINUATION};
pub use report::{
    audit_text, profile_finding, AuditOptions, AuditReport, ComparisonSummary, Detector, FieldReport, FieldStats,
    FieldTokens, InputInfo, OutputFormat, PitfallTally, Summary, TokenizerInfo,
};
pub use scan::{
    scan_integers, scan_integers_with_cap, scan_years, AdjacentPair, IntegerChunkingProfile, IntegerFormat,
    DEFAULT_RANGE_CAP,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PitfallKind {
    Case,
    Whitespace,
    DigitChunking,
    FloatFragmentation,
    SignMerge,
    DateCoverage,
    Divergence,
}

impl PitfallKind {
    pub const ALL: [PitfallKind; 7] = [
        PitfallKind::Case,
        PitfallKind::Whitespace,
        PitfallKind::DigitChunking,
        PitfallKind::FloatFragmentation,
        PitfallKind::SignMerge,
        PitfallKind::DateCoverage,
        PitfallKind::Divergence,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PitfallKind::Case => "case",
            PitfallKind::Whitespace => "whitespace",
            PitfallKind::DigitChunking => "digit-chunking",
            PitfallKind::FloatFragmentation => "float-fragmentation",
            PitfallKind::SignMerge => "sign-merge",
            PitfallKind::DateCoverage => "date-coverage",
            PitfallKind::Divergence => "divergence",
        }
    }
}

impl fmt::Display for PitfallKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Severity {
    Clean,
    Triggered,
}

impl Severity {
    pub fn from_triggered(triggered: bool) -> Self {
        if triggered {
            Severity::Triggered
        } else {
            Severity::Clean
        }
    }

    pub fn is_triggered(self) -> bool {
        self == Severity::Triggered
    }

    pub fn name(self) -> &'static str {
        match self {
            Severity::Clean => "clean",
            Severity::Triggered => "triggered",
        }
    }
}

impl fmt::Display for Severity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One emitted token: its ID, the source text it covers, and where.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenEvidence {
    pub id: TokenId,
    pub text: String,
    pub span: Span,
}

impl TokenEvidence {
    pub fn new(source: &str, id: TokenId, span: Span) -> Self {
        let text = String::from_utf8_lossy(&source.as_bytes()[span.range()]).into_owned();
        Self { id, text, span }
    }
}

/// Evidence for every token of `enc`.
pub fn evidence(source: &str, enc: &Encoding) -> Vec<TokenEvidence> {
    enc.tokens()
        .iter()
        .map(|t| TokenEvidence::new(source, t.id, t.span))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Finding {
    pub pitfall: PitfallKind,
    pub subject: String,
    pub tokens: Vec<TokenEvidence>,
    pub severity: Severity,
    pub metrics: BTreeMap<String, Value>,
}

impl Finding {
    pub fn new(pitfall: PitfallKind, subject: impl Into<String>, severity: Severity) -> Self {
        Self {
            pitfall,
            subject: subject.into(),
            tokens: Vec::new(),
            severity,
            metrics: BTreeMap::new(),
        }
    }

    pub fn with_tokens(mut self, tokens: Vec<TokenEvidence>) -> Self {
        self.tokens = tokens;
        self
    }

    pub fn metric(mut self, key: &str, value: impl Serialize) -> Self {
        self.metrics.insert(
            key.to_owned(),
            serde_json::to_value(value).expect("metric values are plain data"),
        );
        self
    }

    pub fn is_triggered(&self) -> bool {
        self.severity.is_triggered()
    }

    /// Token texts, in order.
    pub fn segments(&self) -> Vec<&str> {
        self.tokens.iter().map(|t| t.text.as_str()).collect()
    }
}

#[derive(Debug, thiserror::Error)]
pub enum AuditError {
    #[error("{0} must not be empty")]
    EmptyInput(&'static str),
    #[error("{0:?} is not a decimal number")]
    NotANumber(String),
    #[error("invalid range: lo {lo} > hi {hi}")]
    InvalidRange { lo: i64, hi: i64 },
    #[error("range of {size} integers exceeds the cap of {cap}")]
    RangeTooLarge { size: u64, cap: u64 },
    #[error("field span {start}..{end} lies outside the text ({len} bytes)")]
    SpanOutOfRange { start: usize, end: usize, len: usize },
    #[error(transparent)]
    Encode(#[from] EncodeError),
}
