use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::alignment::{alignment_metrics, sign_merge_tokens, tokens_per_field, AlignmentMetrics};
use super::compare::DivergenceReport;
use super::probes::{detect_sign_merges, fragmentation_finding, probe_case, probe_whitespace, CaseMode};
use super::scan::IntegerChunkingProfile;
use super::{evidence, AuditError, Finding, PitfallKind, Severity, TokenEvidence};
use crate::encoding::{Encoding, TokenId, Tokenize};
use crate::ingest::{Field, FieldSpan};
use crate::numtok::{scan_numbers, NumberKind};
use crate::span::Span;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Json,
    Markdown,
    #[default]
    Plain,
}

impl FromStr for OutputFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "json" => Ok(OutputFormat::Json),
            "markdown" | "md" => Ok(OutputFormat::Markdown),
            "plain" | "text" => Ok(OutputFormat::Plain),
            other => Err(format!("unknown format `{other}` (expected json, markdown, or plain)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Detector {
    /// Fragmentation of numeric literals or numeric fields.
    Numeric,
    SignMerge,
    /// Field-boundary alignment; needs field spans.
    Alignment,
    Case,
    Whitespace,
}

impl Detector {
    pub const ALL: [Detector; 5] = [
        Detector::Numeric,
        Detector::SignMerge,
        Detector::Alignment,
        Detector::Case,
        Detector::Whitespace,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Detector::Numeric => "numeric",
            Detector::SignMerge => "sign-merge",
            Detector::Alignment => "alignment",
            Detector::Case => "case",
            Detector::Whitespace => "whitespace",
        }
    }

    pub fn defaults() -> BTreeSet<Detector> {
        [Detector::Numeric, Detector::SignMerge, Detector::Alignment]
            .into_iter()
            .collect()
    }
}

impl FromStr for Detector {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Detector::ALL
            .into_iter()
            .find(|d| d.name() == s)
            .ok_or_else(|| {
                let names: Vec<&str> = Detector::ALL.iter().map(|d| d.name()).collect();
                format!("unknown detector `{s}` (expected one of {})", names.join(", "))
            })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AuditOptions {
    pub detectors: BTreeSet<Detector>,
    pub case_mode: CaseMode,
    /// Continuation for the whitespace probe.
    pub continuation: String,
    /// Distinct numeric literals analyzed when no field spans are given.
    pub max_literals: usize,
    /// Distinct words probed by the case detector.
    pub max_words: usize,
}

impl Default for AuditOptions {
    fn default() -> Self {
        Self {
            detectors: Detector::defaults(),
            case_mode: CaseMode::First,
            continuation: super::DEFAULT_CONTINUATION.to_owned(),
            max_literals: 64,
            max_words: 32,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenizerInfo {
    pub name: String,
    pub id_bound: TokenId,
    /// `[start, end)` of the digit-level reserved block, if any.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub numeric_reserved: Option<[TokenId; 2]>,
}

impl TokenizerInfo {
    pub fn of<T: Tokenize + ?Sized>(tok: &T) -> Self {
        Self {
            name: tok.name().to_owned(),
            id_bound: tok.id_bound(),
            numeric_reserved: None,
        }
    }

    pub fn with_reserved(mut self, range: (TokenId, TokenId)) -> Self {
        self.numeric_reserved = Some([range.0, range.1]);
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InputInfo {
    pub bytes: usize,
    pub tokens: usize,
    pub fields: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct PitfallTally {
    pub triggered: usize,
    pub clean: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Summary {
    pub findings: usize,
    pub triggered: usize,
    pub clean: usize,
    pub by_pitfall: BTreeMap<PitfallKind, PitfallTally>,
}

impl Summary {
    pub fn of(findings: &[Finding]) -> Self {
        let mut s = Summary {
            findings: findings.len(),
            ..Summary::default()
        };
        for f in findings {
            let tally = s.by_pitfall.entry(f.pitfall).or_default();
            if f.is_triggered() {
                s.triggered += 1;
                tally.triggered += 1;
            } else {
                s.clean += 1;
                tally.clean += 1;
            }
        }
        s
    }
}

/// Token count of one serialized field in context.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldTokens {
    pub row: usize,
    pub field: Field,
    pub span: Span,
    pub tokens: usize,
    pub sign_merged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldStats {
    pub fields: usize,
    pub split: usize,
    pub tokens_min: usize,
    pub tokens_max: usize,
    pub tokens_mean: f64,
}

/// Alignment of numeric fields with token boundaries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldReport {
    pub metrics: AlignmentMetrics,
    pub by_field: BTreeMap<Field, FieldStats>,
    pub fields: Vec<FieldTokens>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonSummary {
    pub other: String,
    pub texts: usize,
    pub divergence_rate: f64,
    pub id_divergence_rate: f64,
    pub numeric_divergence_rate: f64,
}

/// Full audit output. Field order is the serialization order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub tool: String,
    pub version: String,
    pub tokenizer: TokenizerInfo,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input: Option<InputInfo>,
    pub findings: Vec<Finding>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alignment: Option<FieldReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub comparison: Option<ComparisonSummary>,
    pub summary: Summary,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stamp: Option<String>,
}

impl AuditReport {
    pub fn new(tokenizer: TokenizerInfo, findings: Vec<Finding>) -> Self {
        Self {
            tool: "tokaudit".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            tokenizer,
            input: None,
            summary: Summary::of(&findings),
            findings,
            alignment: None,
            comparison: None,
            stamp: None,
        }
    }

    pub fn with_stamp(mut self, stamp: impl Into<String>) -> Self {
        self.stamp = Some(stamp.into());
        self
    }

    /// Report for a tokenizer comparison; findings are per text.
    pub fn from_comparison<A: Tokenize + ?Sized>(tok_a: &A, report: &DivergenceReport) -> Result<Self, AuditError> {
        let mut out = Self::new(TokenizerInfo::of(tok_a), report.findings(tok_a)?);
        out.comparison = Some(ComparisonSummary {
            other: report.tokenizer_b.clone(),
            texts: report.texts.len(),
            divergence_rate: report.divergence_rate,
            id_divergence_rate: report.id_divergence_rate,
            numeric_divergence_rate: report.numeric_divergence_rate,
        });
        Ok(out)
    }

    pub fn any_triggered(&self) -> bool {
        self.summary.triggered > 0
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report is plain data");
        s.push('\n');
        s
    }

    pub fn render(&self, format: OutputFormat) -> String {
        match format {
            OutputFormat::Json => self.to_json(),
            OutputFormat::Markdown => self.to_markdown(),
            OutputFormat::Plain => self.to_plain(),
        }
    }

    pub fn to_markdown(&self) -> String {
        let mut out = String::from("# Tokenization audit\n\n");
        let t = &self.tokenizer;
        let reserved = t
            .numeric_reserved
            .map_or("none".to_owned(), |[lo, hi]| format!("{lo}..{hi}"));
        let _ = writeln!(out, "| tokenizer | id bound | numeric reserved |\n|---|---|---|");
        let _ = writeln!(out, "| {} | {} | {} |\n", md_cell(&t.name), t.id_bound, reserved);
        if let Some(i) = &self.input {
            let _ = writeln!(out, "Input: {} bytes, {} tokens, {} fields.\n", i.bytes, i.tokens, i.fields);
        }
        if let Some(s) = &self.stamp {
            let _ = writeln!(out, "Generated: {}\n", md_cell(s));
        }
        out.push_str("## Findings\n\n");
        if self.findings.is_empty() {
            out.push_str("No findings.\n\n");
        } else {
            out.push_str("| # | pitfall | severity | subject | tokens | metrics |\n|---|---|---|---|---|---|\n");
            for (i, f) in self.findings.iter().enumerate() {
                let _ = writeln!(
                    out,
                    "| {} | {} | {} | {} | {} | {} |",
                    i + 1,
                    f.pitfall,
                    f.severity,
                    md_code(&truncate(&f.subject, 48)),
                    tokens_inline(&f.tokens, " ", true),
                    md_cell(&scalar_metrics(&f.metrics)),
                );
            }
            out.push('\n');
        }
        if let Some(a) = &self.alignment {
            let m = &a.metrics;
            out.push_str("## Field alignment\n\n| metric | value |\n|---|---|\n");
            for (k, v) in [
                ("fields", m.fields.to_string()),
                ("boundary alignment", format!("{:.4}", m.boundary_alignment)),
                ("tokens per field (mean)", format!("{:.4}", m.tokens_per_field_mean)),
                ("tokens per field (max)", m.tokens_per_field_max.to_string()),
                ("fields split", m.fields_split.to_string()),
                ("sign merges", m.sign_merge_count.to_string()),
                ("sign-merged fields", m.sign_merged_fields.to_string()),
            ] {
                let _ = writeln!(out, "| {k} | {v} |");
            }
            out.push_str("\n| field | count | split | min | max | mean |\n|---|---|---|---|---|---|\n");
            for (field, s) in &a.by_field {
                let _ = writeln!(
                    out,
                    "| {field} | {} | {} | {} | {} | {:.4} |",
                    s.fields, s.split, s.tokens_min, s.tokens_max, s.tokens_mean
                );
            }
            out.push('\n');
        }
        if let Some(c) = &self.comparison {
            let _ = writeln!(
                out,
                "## Comparison\n\nAgainst {} over {} texts: divergence {:.4}, id divergence {:.4}, numeric divergence {:.4}.\n",
                md_cell(&c.other),
                c.texts,
                c.divergence_rate,
                c.id_divergence_rate,
                c.numeric_divergence_rate
            );
        }
        let s = &self.summary;
        let _ = writeln!(
            out,
            "## Summary\n\n{} findings: {} triggered, {} clean.",
            s.findings, s.triggered, s.clean
        );
        out
    }

    pub fn to_plain(&self) -> String {
        let mut out = String::new();
        let t = &self.tokenizer;
        let _ = write!(out, "tokenizer: {} (ids < {})", t.name, t.id_bound);
        if let Some([lo, hi]) = t.numeric_reserved {
            let _ = write!(out, ", numeric reserved {lo}..{hi}");
        }
        out.push('\n');
        if let Some(i) = &self.input {
            let _ = writeln!(out, "input: {} bytes, {} tokens, {} fields", i.bytes, i.tokens, i.fields);
        }
        if let Some(s) = &self.stamp {
            let _ = writeln!(out, "generated: {s}");
        }
        for f in &self.findings {
            let _ = writeln!(
                out,
                "[{}] {} {:?}: {}",
                f.severity,
                f.pitfall,
                truncate(&f.subject, 48),
                tokens_inline(&f.tokens, " | ", false)
            );
            let metrics = scalar_metrics(&f.metrics);
            if !metrics.is_empty() {
                let _ = writeln!(out, "    {metrics}");
            }
        }
        if let Some(a) = &self.alignment {
            let m = &a.metrics;
            let _ = writeln!(
                out,
                "alignment: boundary {:.4}, tokens/field mean {:.4} max {}, split {}/{}, sign merges {} ({} fields)",
                m.boundary_alignment,
                m.tokens_per_field_mean,
                m.tokens_per_field_max,
                m.fields_split,
                m.fields,
                m.sign_merge_count,
                m.sign_merged_fields
            );
            for (field, s) in &a.by_field {
                let _ = writeln!(
                    out,
                    "    {field}: {} fields, {} split, tokens {}..{} mean {:.4}",
                    s.fields, s.split, s.tokens_min, s.tokens_max, s.tokens_mean
                );
            }
        }
        if let Some(c) = &self.comparison {
            let _ = writeln!(
                out,
                "comparison vs {}: {} texts, divergence {:.4}, id divergence {:.4}, numeric divergence {:.4}",
                c.other, c.texts, c.divergence_rate, c.id_divergence_rate, c.numeric_divergence_rate
            );
        }
        let s = &self.summary;
        let _ = writeln!(
            out,
            "summary: {} findings, {} triggered, {} clean",
            s.findings, s.triggered, s.clean
        );
        out
    }
}

const MAX_INLINE_TOKENS: usize = 12;

fn truncate(s: &str, max_chars: usize) -> String {
    if s.chars().count() <= max_chars {
        return s.to_owned();
    }
    let mut t: String = s.chars().take(max_chars).collect();
    t.push_str("...");
    t
}

fn md_cell(s: &str) -> String {
    s.replace('\\', "\\\\")
        .replace('|', "\\|")
        .replace('\r', "\\r")
        .replace('\n', "\\n")
}

fn md_code(s: &str) -> String {
    let body = md_cell(s);
    if body.contains('`') {
        format!("`` {body} ``")
    } else {
        format!("`{body}`")
    }
}

fn tokens_inline(tokens: &[TokenEvidence], sep: &str, markdown: bool) -> String {
    let mut parts: Vec<String> = tokens
        .iter()
        .take(MAX_INLINE_TOKENS)
        .map(|t| {
            if markdown {
                format!("{}({})", md_code(&t.text), t.id)
            } else {
                format!("{:?}({})", t.text, t.id)
            }
        })
        .collect();
    if tokens.len() > MAX_INLINE_TOKENS {
        parts.push(format!("... {} more", tokens.len() - MAX_INLINE_TOKENS));
    }
    parts.join(sep)
}

/// `key=value` for numbers, booleans, and short strings.
fn scalar_metrics(metrics: &BTreeMap<String, Value>) -> String {
    metrics
        .iter()
        .filter_map(|(k, v)| match v {
            Value::Bool(b) => Some(format!("{k}={b}")),
            Value::Number(n) => Some(match n.as_f64() {
                Some(x) if !n.is_i64() && !n.is_u64() => format!("{k}={x:.4}"),
                _ => format!("{k}={n}"),
            }),
            Value::String(s) if s.chars().count() <= 40 => Some(format!("{k}={s:?}")),
            _ => None,
        })
        .collect::<Vec<_>>()
        .join(", ")
}

/// Turn a chunking profile into a finding.
///
/// Digit chunking is triggered by any adjacent inconsistency. Date coverage is
/// triggered when coverage is mixed: some integers in the range are single
/// tokens and some are not. The subject is the first offending pair rendered
/// in the profile's context.
pub fn profile_finding<T: Tokenize + ?Sized>(
    tok: &T,
    profile: &IntegerChunkingProfile,
    pitfall: PitfallKind,
) -> Result<Finding, AuditError> {
    let singles = profile.single_token_count();
    let (triggered, pair) = match pitfall {
        PitfallKind::DateCoverage => {
            let change = profile
                .counts
                .windows(2)
                .position(|w| (w[0] == 1) != (w[1] == 1))
                .map(|i| profile.lo + i as i64);
            (singles > 0 && singles < profile.len(), change)
        }
        _ => (
            profile.adjacent_inconsistency > 0,
            profile.inconsistent_examples.first().map(|p| p.a),
        ),
    };
    let first = pair.unwrap_or(profile.lo);
    let nums: Vec<i64> = if first < profile.hi { vec![first, first + 1] } else { vec![first] };
    let (subject, _) = profile.format.render(&nums);
    let enc = tok.encode(&subject)?;
    const MAX_RUNS: usize = 64;
    let runs: Vec<[i64; 2]> = profile.single_token_runs.iter().take(MAX_RUNS).copied().collect();
    let histogram: BTreeMap<String, u64> = profile
        .histogram()
        .into_iter()
        .map(|(k, v)| (k.to_string(), v))
        .collect();
    Ok(Finding::new(pitfall, subject.clone(), Severity::from_triggered(triggered))
        .with_tokens(evidence(&subject, &enc))
        .metric("lo", profile.lo)
        .metric("hi", profile.hi)
        .metric("format", profile.format)
        .metric("integers", profile.len())
        .metric("single_token", singles)
        .metric("fraction_single_token", profile.fraction_single_token)
        .metric("adjacent_inconsistency", profile.adjacent_inconsistency)
        .metric("single_token_runs", runs)
        .metric("single_token_run_count", profile.single_token_runs.len())
        .metric("inconsistent_examples", &profile.inconsistent_examples)
        .metric("token_count_histogram", histogram))
}

fn field_pitfall(field: Field) -> PitfallKind {
    if field.is_axis() {
        PitfallKind::FloatFragmentation
    } else {
        PitfallKind::DigitChunking
    }
}

fn field_findings(text: &str, enc: &Encoding, numeric: &[FieldSpan]) -> Vec<Finding> {
    let mut by_field: BTreeMap<Field, Vec<&FieldSpan>> = BTreeMap::new();
    for f in numeric {
        by_field.entry(f.field).or_default().push(f);
    }
    by_field
        .into_iter()
        .map(|(field, spans)| {
            let counts: Vec<usize> = spans.iter().map(|f| enc.covering(f.span()).count()).collect();
            let split = counts.iter().filter(|&&c| c > 1).count();
            let example = spans.iter().zip(&counts).find(|(_, &c)| c > 1).map(|(f, _)| f.span());
            let tokens = example.map_or_else(Vec::new, |span| {
                enc.covering(span)
                    .map(|t| TokenEvidence::new(text, t.id, t.span))
                    .collect()
            });
            Finding::new(field_pitfall(field), text, Severity::from_triggered(split > 0))
                .with_tokens(tokens)
                .metric("field", field)
                .metric("fields", counts.len())
                .metric("fields_split", split)
                .metric("tokens_min", counts.iter().min().copied().unwrap_or(0))
                .metric("tokens_max", counts.iter().max().copied().unwrap_or(0))
                .metric(
                    "tokens_mean",
                    counts.iter().sum::<usize>() as f64 / counts.len().max(1) as f64,
                )
        })
        .collect()
}

fn field_report(text: &str, enc: &Encoding, numeric: &[FieldSpan]) -> Result<FieldReport, AuditError> {
    let spans: Vec<Span> = numeric.iter().map(FieldSpan::span).collect();
    let metrics = alignment_metrics(text, enc, &spans)?;
    let counts = tokens_per_field(enc, &spans);
    let merges = sign_merge_tokens(text, enc);
    let fields: Vec<FieldTokens> = numeric
        .iter()
        .zip(&counts)
        .map(|(f, &tokens)| FieldTokens {
            row: f.row,
            field: f.field,
            span: f.span(),
            tokens,
            sign_merged: text.as_bytes().get(f.start) == Some(&b'-')
                && merges.iter().any(|t| t.span.contains(f.start)),
        })
        .collect();
    let mut by_field: BTreeMap<Field, Vec<usize>> = BTreeMap::new();
    for f in &fields {
        by_field.entry(f.field).or_default().push(f.tokens);
    }
    let by_field = by_field
        .into_iter()
        .map(|(field, c)| {
            let stats = FieldStats {
                fields: c.len(),
                split: c.iter().filter(|&&n| n > 1).count(),
                tokens_min: c.iter().min().copied().unwrap_or(0),
                tokens_max: c.iter().max().copied().unwrap_or(0),
                tokens_mean: c.iter().sum::<usize>() as f64 / c.len() as f64,
            };
            (field, stats)
        })
        .collect();
    Ok(FieldReport {
        metrics,
        by_field,
        fields,
    })
}

fn literal_findings<T: Tokenize + ?Sized>(tok: &T, text: &str, max: usize) -> Result<Vec<Finding>, AuditError> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for lit in scan_numbers(text) {
        let s = &text[lit.span.range()];
        if out.len() >= max {
            break;
        }
        if !seen.insert(s) {
            continue;
        }
        let pitfall = match lit.kind {
            NumberKind::Integer => PitfallKind::DigitChunking,
            NumberKind::Decimal | NumberKind::Scientific => PitfallKind::FloatFragmentation,
        };
        out.push(fragmentation_finding(tok, s, pitfall)?);
    }
    Ok(out)
}

fn words(text: &str, max: usize) -> Vec<&str> {
    let mut seen = BTreeSet::new();
    text.split(|c: char| !c.is_alphabetic())
        .filter(|w| !w.is_empty() && seen.insert(*w))
        .take(max)
        .collect()
}

/// Run the selected detectors over `text`.
///
/// With `fields` (for example from ingest), numeric findings are reported per
/// field kind in context and alignment metrics are computed. Without them,
/// each distinct numeric literal is analyzed in isolation.
pub fn audit_text<T: Tokenize + ?Sized>(
    tok: &T,
    info: TokenizerInfo,
    text: &str,
    fields: Option<&[FieldSpan]>,
    options: &AuditOptions,
) -> Result<AuditReport, AuditError> {
    let enc = tok.encode(text)?;
    let numeric: Vec<FieldSpan> = fields
        .unwrap_or(&[])
        .iter()
        .filter(|f| f.field.is_numeric())
        .copied()
        .collect();
    let on = |d: Detector| options.detectors.contains(&d);
    let mut findings = Vec::new();
    if on(Detector::Numeric) {
        if fields.is_some() {
            findings.extend(field_findings(text, &enc, &numeric));
        } else {
            findings.extend(literal_findings(tok, text, options.max_literals)?);
        }
    }
    if on(Detector::SignMerge) {
        findings.push(detect_sign_merges(tok, text)?);
    }
    if on(Detector::Case) {
        for w in words(text, options.max_words) {
            findings.push(probe_case(tok, w, options.case_mode)?);
        }
    }
    if on(Detector::Whitespace) {
        findings.push(probe_whitespace(tok, text, &options.continuation)?);
    }
    let alignment = match fields {
        Some(_) if on(Detector::Alignment) => Some(field_report(text, &enc, &numeric)?),
        _ => None,
    };
    let mut report = AuditReport::new(info, findings);
    report.input = Some(InputInfo {
        bytes: text.len(),
        tokens: enc.len(),
        fields: fields.map_or(0, <[FieldSpan]>::len),
    });
    report.alignment = alignment;
    Ok(report)
}
