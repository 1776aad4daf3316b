use std::io::Write;

use serde::{Deserialize, Serialize};

use super::transform::round_decimal_str;
use super::{parse_line, Field, IngestError, Reading, SensorRow};
use crate::span::Span;

/// Location of one serialized field.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct FieldSpan {
    pub row: usize,
    pub field: Field,
    pub start: usize,
    pub end: usize,
}

impl FieldSpan {
    pub fn span(&self) -> Span {
        Span::new(self.start, self.end)
    }
}

/// Serialized rows plus the byte span of every field that was written.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SerializedBatch {
    pub text: String,
    pub fields: Vec<FieldSpan>,
}

impl SerializedBatch {
    pub fn spans(&self) -> Vec<Span> {
        self.fields.iter().map(FieldSpan::span).collect()
    }

    pub fn numeric_fields(&self) -> impl Iterator<Item = &FieldSpan> {
        self.fields.iter().filter(|f| f.field.is_numeric())
    }

    pub fn field_text(&self, field: &FieldSpan) -> &str {
        &self.text[field.start..field.end]
    }

    /// Sidecar JSON: an array of `{row, field, start, end}`.
    pub fn write_sidecar<W: Write>(&self, writer: W) -> serde_json::Result<()> {
        serde_json::to_writer_pretty(writer, &self.fields)
    }
}

/// Row layout for prompt-style serialization.
///
/// `row` holds `{field}` placeholders; `{{` and `}}` are literal braces.
/// Rows are joined by `separator`; a non-empty `preamble` is followed by a
/// newline.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptTemplate {
    pub preamble: String,
    pub row: String,
    pub separator: String,
}

impl Default for PromptTemplate {
    fn default() -> Self {
        Self {
            preamble: "Classify the given accelerometer sequence:".into(),
            row: "participant {participant}, activity {activity}, time {timestamp}: x={x} y={y} z={z}"
                .into(),
            separator: "\n".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum Template {
    /// The WISDM raw line format, `;`-terminated, one row per line.
    RawCsv,
    LabeledPrompt(PromptTemplate),
}

enum Piece {
    Literal(String),
    Slot(Field),
}

fn compile(row: &str) -> Result<Vec<Piece>, IngestError> {
    let mut pieces = Vec::new();
    let mut literal = String::new();
    let mut chars = row.char_indices().peekable();
    while let Some((i, c)) = chars.next() {
        match c {
            '{' if chars.peek().map(|&(_, c)| c) == Some('{') => {
                chars.next();
                literal.push('{');
            }
            '}' if chars.peek().map(|&(_, c)| c) == Some('}') => {
                chars.next();
                literal.push('}');
            }
            '{' => {
                let rest = &row[i + 1..];
                let close = rest
                    .find('}')
                    .ok_or_else(|| IngestError::Template(format!("unclosed `{{` at byte {i}")))?;
                let name = &rest[..close];
                let field = name
                    .parse::<Field>()
                    .map_err(|_| IngestError::Template(format!("unknown placeholder `{{{name}}}`")))?;
                for _ in 0..name.chars().count() + 1 {
                    chars.next();
                }
                if !literal.is_empty() {
                    pieces.push(Piece::Literal(std::mem::take(&mut literal)));
                }
                pieces.push(Piece::Slot(field));
            }
            '}' => return Err(IngestError::Template(format!("unmatched `}}` at byte {i}"))),
            c => literal.push(c),
        }
    }
    if !literal.is_empty() {
        pieces.push(Piece::Literal(literal));
    }
    if !pieces.iter().any(|p| matches!(p, Piece::Slot(_))) {
        return Err(IngestError::Template("row template has no placeholders".into()));
    }
    Ok(pieces)
}

fn format_reading<T: Reading>(v: T, decimals: Option<u32>) -> String {
    let shortest = v.to_string();
    match decimals {
        Some(p) => round_decimal_str(&shortest, p),
        None => shortest,
    }
}

fn field_value<T: Reading>(row: &SensorRow<T>, field: Field) -> String {
    match field {
        Field::Participant => row.participant.to_string(),
        Field::Activity => row.activity.clone(),
        Field::Timestamp => row.timestamp.to_string(),
        Field::X => format_reading(row.x, row.decimals),
        Field::Y => format_reading(row.y, row.decimals),
        Field::Z => format_reading(row.z, row.decimals),
    }
}

struct Writer {
    text: String,
    fields: Vec<FieldSpan>,
}

impl Writer {
    fn field(&mut self, row: usize, field: Field, value: &str) {
        let start = self.text.len();
        self.text.push_str(value);
        self.fields.push(FieldSpan {
            row,
            field,
            start,
            end: self.text.len(),
        });
    }
}

/// Render rows as text, recording where each field landed.
pub fn serialize<T: Reading>(rows: &[SensorRow<T>], template: &Template) -> Result<SerializedBatch, IngestError> {
    if rows.is_empty() {
        return Err(IngestError::NoRows);
    }
    let mut out = Writer {
        text: String::new(),
        fields: Vec::with_capacity(rows.len() * 6),
    };
    match template {
        Template::RawCsv => {
            for (i, row) in rows.iter().enumerate() {
                for (k, field) in Field::ALL.into_iter().enumerate() {
                    if k > 0 {
                        out.text.push(',');
                    }
                    out.field(i, field, &field_value(row, field));
                }
                out.text.push_str(";\n");
            }
        }
        Template::LabeledPrompt(prompt) => {
            let pieces = compile(&prompt.row)?;
            if !prompt.preamble.is_empty() {
                out.text.push_str(&prompt.preamble);
                out.text.push('\n');
            }
            for (i, row) in rows.iter().enumerate() {
                if i > 0 {
                    out.text.push_str(&prompt.separator);
                }
                for piece in &pieces {
                    match piece {
                        Piece::Literal(s) => out.text.push_str(s),
                        Piece::Slot(field) => out.field(i, *field, &field_value(row, *field)),
                    }
                }
            }
        }
    }
    Ok(SerializedBatch {
        text: out.text,
        fields: out.fields,
    })
}

/// Recover field spans from raw-CSV text; lines that do not parse as rows
/// contribute nothing.
pub fn locate_fields(text: &str) -> Vec<FieldSpan> {
    let mut spans = Vec::new();
    let mut offset = 0;
    let mut row = 0;
    for (lineno, line) in text.split_inclusive('\n').enumerate() {
        let start = offset;
        offset += line.len();
        if !matches!(parse_line::<f64>(line, lineno + 1), Ok(Some(_))) {
            continue;
        }
        let body = line.trim_end_matches(['\r', '\n']);
        let body = body.strip_suffix(';').unwrap_or(body);
        let mut pos = start;
        for (field, value) in Field::ALL.into_iter().zip(body.split(',')) {
            spans.push(FieldSpan {
                row,
                field,
                start: pos,
                end: pos + value.len(),
            });
            pos += value.len() + 1;
        }
        row += 1;
    }
    spans
}
