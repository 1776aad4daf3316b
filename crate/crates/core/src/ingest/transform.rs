use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{IngestError, Reading, SensorRow};

/// Keep rows `0, k, 2k, ...`.
pub fn downsample<T: Clone>(rows: &[T], k: usize) -> Result<Vec<T>, IngestError> {
    if k == 0 {
        return Err(IngestError::ZeroFactor);
    }
    Ok(rows.iter().step_by(k).cloned().collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stat {
    Mean,
    Min,
    Max,
}

impl FromStr for Stat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "mean" => Ok(Stat::Mean),
            "min" => Ok(Stat::Min),
            "max" => Ok(Stat::Max),
            other => Err(format!("unknown statistic `{other}` (expected mean, min, or max)")),
        }
    }
}

fn reduce<T: Reading>(values: impl Iterator<Item = T>, stat: Stat) -> T {
    let mut n = 0usize;
    let mut acc: Option<T> = None;
    for v in values {
        n += 1;
        acc = Some(match (acc, stat) {
            (None, _) => v,
            (Some(a), Stat::Mean) => a + v,
            (Some(a), Stat::Min) => a.min(v),
            (Some(a), Stat::Max) => a.max(v),
        });
    }
    let acc = acc.expect("windows are non-empty");
    match stat {
        Stat::Mean => acc / T::from(n).expect("window length fits the scalar type"),
        _ => acc,
    }
}

/// Collapse non-overlapping windows of `window` rows into one row each.
///
/// The timestamp, participant, and activity come from the first row of each
/// window. With `strict`, a window whose rows disagree on participant or
/// activity is an error.
pub fn aggregate<T: Reading>(
    rows: &[SensorRow<T>],
    window: usize,
    stat: Stat,
    strict: bool,
) -> Result<Vec<SensorRow<T>>, IngestError> {
    if window == 0 {
        return Err(IngestError::ZeroWindow);
    }
    if window == 1 {
        return Ok(rows.to_vec());
    }
    rows.chunks(window)
        .enumerate()
        .map(|(w, chunk)| {
            let first = &chunk[0];
            if strict {
                if let Some(other) = chunk
                    .iter()
                    .find(|r| r.activity != first.activity || r.participant != first.participant)
                {
                    return Err(IngestError::MixedLabels {
                        window: w,
                        first: format!("{}/{}", first.participant, first.activity),
                        other: format!("{}/{}", other.participant, other.activity),
                    });
                }
            }
            Ok(SensorRow {
                participant: first.participant,
                activity: first.activity.clone(),
                timestamp: first.timestamp,
                x: reduce(chunk.iter().map(|r| r.x), stat),
                y: reduce(chunk.iter().map(|r| r.y), stat),
                z: reduce(chunk.iter().map(|r| r.z), stat),
                decimals: None,
            })
        })
        .collect()
}

/// Round a plain decimal string (no exponent) half away from zero to exactly
/// `decimals` fractional digits.
pub fn round_decimal_str(s: &str, decimals: u32) -> String {
    let (negative, body) = match s.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, s.strip_prefix('+').unwrap_or(s)),
    };
    let (int_part, frac_part) = body.split_once('.').unwrap_or((body, ""));
    let p = decimals as usize;
    let mut digits: Vec<u8> = int_part.bytes().chain(frac_part.bytes().chain(std::iter::repeat(b'0')).take(p)).collect();
    if frac_part.as_bytes().get(p).is_some_and(|&d| d >= b'5') {
        let mut i = digits.len();
        loop {
            if i == 0 {
                digits.insert(0, b'1');
                break;
            }
            i -= 1;
            if digits[i] == b'9' {
                digits[i] = b'0';
            } else {
                digits[i] += 1;
                break;
            }
        }
    }
    let split = digits.len() - p;
    let mut int_digits = String::from_utf8(digits[..split].to_vec()).unwrap();
    let trimmed = int_digits.trim_start_matches('0');
    int_digits = if trimmed.is_empty() { "0".into() } else { trimmed.into() };
    let frac_digits = std::str::from_utf8(&digits[split..]).unwrap();
    let zero = int_digits == "0" && frac_digits.bytes().all(|d| d == b'0');
    let sign = if negative && !zero { "-" } else { "" };
    if p == 0 {
        format!("{sign}{int_digits}")
    } else {
        format!("{sign}{int_digits}.{frac_digits}")
    }
}

fn round_value<T: Reading>(v: T, decimals: u32) -> T {
    let rounded = round_decimal_str(&v.to_string(), decimals);
    rounded.parse().ok().expect("rounded decimal parses")
}

/// Round x, y, z half away from zero to `decimals` places; serialization
/// then prints exactly that many decimals.
pub fn round_values<T: Reading>(rows: &[SensorRow<T>], decimals: u32) -> Vec<SensorRow<T>> {
    rows.iter()
        .map(|r| SensorRow {
            x: round_value(r.x, decimals),
            y: round_value(r.y, decimals),
            z: round_value(r.z, decimals),
            decimals: Some(decimals),
            ..r.clone()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(x: f64) -> SensorRow<f64> {
        SensorRow::new(1, "Walking", 0, x, 0.0, 0.0)
    }

    #[test]
    fn downsample_examples() {
        let rows: Vec<usize> = (0..10).collect();
        assert_eq!(downsample(&rows, 2).unwrap(), [0, 2, 4, 6, 8]);
        assert_eq!(downsample(&rows, 1).unwrap(), rows);
        let many: Vec<usize> = (0..200).collect();
        assert_eq!(downsample(&many, 50).unwrap().len(), 4);
        assert!(matches!(downsample(&rows, 0), Err(IngestError::ZeroFactor)));
    }

    #[test]
    fn aggregate_examples() {
        let rows = vec![row(1.0), row(3.0)];
        let mean = aggregate(&rows, 2, Stat::Mean, true).unwrap();
        assert_eq!(mean.len(), 1);
        assert_eq!(mean[0].x, 2.0);
        assert_eq!(aggregate(&rows, 2, Stat::Min, true).unwrap()[0].x, 1.0);
        assert_eq!(aggregate(&rows, 2, Stat::Max, true).unwrap()[0].x, 3.0);
        assert_eq!(aggregate(&rows, 1, Stat::Mean, true).unwrap(), rows);
        assert!(matches!(aggregate(&rows, 0, Stat::Mean, true), Err(IngestError::ZeroWindow)));
    }

    #[test]
    fn aggregate_partial_last_window_and_labels() {
        let mut rows = vec![row(1.0), row(2.0), row(6.0)];
        rows[2].timestamp = 99;
        let out = aggregate(&rows, 2, Stat::Mean, true).unwrap();
        assert_eq!(out.len(), 2);
        assert_eq!(out[1].x, 6.0);
        assert_eq!(out[1].timestamp, 99);

        rows[1].activity = "Jogging".into();
        assert!(matches!(
            aggregate(&rows, 2, Stat::Mean, true),
            Err(IngestError::MixedLabels { window: 0, .. })
        ));
        let lenient = aggregate(&rows, 2, Stat::Mean, false).unwrap();
        assert_eq!(lenient[0].activity, "Walking");
    }

    #[test]
    fn decimal_rounding() {
        assert_eq!(round_decimal_str("-0.6946377", 2), "-0.69");
        assert_eq!(round_decimal_str("12.5", 0), "13");
        assert_eq!(round_decimal_str("-12.5", 0), "-13");
        assert_eq!(round_decimal_str("2.675", 2), "2.68");
        assert_eq!(round_decimal_str("9.995", 2), "10.00");
        assert_eq!(round_decimal_str("0.5", 3), "0.500");
        assert_eq!(round_decimal_str("-0.004", 2), "0.00");
        assert_eq!(round_decimal_str("7", 2), "7.00");
        assert_eq!(round_decimal_str("0.0000001", 3), "0.000");
    }

    #[test]
    fn round_values_marks_decimals() {
        let rows = round_values(&[row(-0.6946377), row(12.5)], 2);
        assert_eq!(rows[0].x, -0.69);
        assert_eq!(rows[0].decimals, Some(2));
        let whole = round_values(&[row(12.5)], 0);
        assert_eq!(whole[0].x, 13.0);
    }

    #[test]
    fn stat_parse() {
        assert_eq!("mean".parse::<Stat>().unwrap(), Stat::Mean);
        assert!("median".parse::<Stat>().is_err());
    }
}
