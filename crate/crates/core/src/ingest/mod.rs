//! WISDM-style accelerometer rows: parsing, preprocessing, and serialization
//! to text with tracked field spans.
//!
//! Raw layout, one record per line:
//!
//! ```text
//! 33,Jogging,49105962326000,-0.6946377,12.680544,0.50395286;
//! ```
//!
//! The trailing `;` is optional on input and always written on output.

mod serialize;
mod transform;

use std::fmt::{self, Debug, Display};
use std::io::Read;
use std::str::FromStr;

use num_traits::Float;
use serde::{Deserialize, Serialize};

pub use serialize::{locate_fields, serialize, FieldSpan, PromptTemplate, SerializedBatch, Template};
pub use transform::{aggregate, downsample, round_decimal_str, round_values, Stat};

/// Scalar type for acceleration readings.
pub trait Reading: Float + FromStr + Display + Debug + Send + Sync + 'static {}

impl<T: Float + FromStr + Display + Debug + Send + Sync + 'static> Reading for T {}

/// One accelerometer record.
#[derive(Debug, Clone, PartialEq)]
pub struct SensorRow<T> {
    pub participant: u32,
    pub activity: String,
    /// Device clock ticks (nanosecond scale in WISDM).
    pub timestamp: u64,
    pub x: T,
    pub y: T,
    pub z: T,
    /// Fixed number of decimals to print, set by [`round_values`].
    pub decimals: Option<u32>,
}

impl<T: Reading> SensorRow<T> {
    pub fn new(participant: u32, activity: impl Into<String>, timestamp: u64, x: T, y: T, z: T) -> Self {
        Self {
            participant,
            activity: activity.into(),
            timestamp,
            x,
            y,
            z,
            decimals: None,
        }
    }

    pub fn axes(&self) -> [T; 3] {
        [self.x, self.y, self.z]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Field {
    Participant,
    Activity,
    Timestamp,
    X,
    Y,
    Z,
}

impl Field {
    pub const ALL: [Field; 6] = [
        Field::Participant,
        Field::Activity,
        Field::Timestamp,
        Field::X,
        Field::Y,
        Field::Z,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Field::Participant => "participant",
            Field::Activity => "activity",
            Field::Timestamp => "timestamp",
            Field::X => "x",
            Field::Y => "y",
            Field::Z => "z",
        }
    }

    /// 1-based column in the raw layout.
    pub fn column(self) -> usize {
        Field::ALL.iter().position(|&f| f == self).unwrap() + 1
    }

    pub fn is_numeric(self) -> bool {
        self != Field::Activity
    }

    pub fn is_axis(self) -> bool {
        matches!(self, Field::X | Field::Y | Field::Z)
    }
}

impl Display for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Field {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Field::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| format!("unknown field `{s}`"))
    }
}

#[derive(Debug, thiserror::Error)]
pub enum IngestError {
    #[error("line {line}: expected 6 comma-separated fields, found {found}")]
    FieldCount { line: usize, found: usize },
    #[error("line {line}: field {column} ({field}) has invalid value {value:?}")]
    InvalidField {
        line: usize,
        column: usize,
        field: Field,
        value: String,
    },
    #[error("downsampling factor must be at least 1")]
    ZeroFactor,
    #[error("aggregation window must be at least 1")]
    ZeroWindow,
    #[error("window {window} mixes labels ({first:?} and {other:?})")]
    MixedLabels {
        window: usize,
        first: String,
        other: String,
    },
    #[error("nothing to serialize")]
    NoRows,
    #[error("template error: {0}")]
    Template(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Parse one line; `None` for blank lines.
pub fn parse_line<T: Reading>(line: &str, lineno: usize) -> Result<Option<SensorRow<T>>, IngestError> {
    let line = line.trim_end_matches(['\r', '\n']);
    if line.trim().is_empty() {
        return Ok(None);
    }
    let body = line.strip_suffix(';').unwrap_or(line);
    let fields: Vec<&str> = body.split(',').collect();
    if fields.len() != 6 {
        return Err(IngestError::FieldCount {
            line: lineno,
            found: fields.len(),
        });
    }
    let bad = |field: Field, value: &str| IngestError::InvalidField {
        line: lineno,
        column: field.column(),
        field,
        value: value.to_owned(),
    };
    let participant = fields[0]
        .parse::<u32>()
        .map_err(|_| bad(Field::Participant, fields[0]))?;
    let activity = fields[1];
    if activity.is_empty() {
        return Err(bad(Field::Activity, activity));
    }
    let timestamp = fields[2]
        .parse::<u64>()
        .map_err(|_| bad(Field::Timestamp, fields[2]))?;
    let axis = |field: Field, raw: &str| -> Result<T, IngestError> {
        raw.parse::<T>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| bad(field, raw))
    };
    Ok(Some(SensorRow {
        participant,
        activity: activity.to_owned(),
        timestamp,
        x: axis(Field::X, fields[3])?,
        y: axis(Field::Y, fields[4])?,
        z: axis(Field::Z, fields[5])?,
        decimals: None,
    }))
}

pub fn parse_str<T: Reading>(text: &str) -> Result<Vec<SensorRow<T>>, IngestError> {
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if let Some(row) = parse_line(line, i + 1)? {
            rows.push(row);
        }
    }
    Ok(rows)
}

/// Parse a WISDM raw stream, skipping blank lines.
pub fn parse_rows<T: Reading, R: Read>(mut source: R) -> Result<Vec<SensorRow<T>>, IngestError> {
    let mut text = String::new();
    source.read_to_string(&mut text)?;
    parse_str(&text)
}
