//! Behavior interchange formats.
//!
//! JSON: `{"P": [[4 values] × 4], "label": "...", "source": "..."}`, rows in
//! context order xy = 00, 01, 10, 11 and columns in outcome order
//! ab = 00, 01, 10, 11. A value is a JSON number (read exactly as a decimal
//! fraction) or a string such as `"3/8"`, `"0.125"` or `"1e-3"`.
//!
//! CSV: one behavior per line, 16 values in flat order. Blank lines and lines
//! starting with `#` are ignored.

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::behavior::{Behavior, BehaviorError, DIM};
use crate::rational::{format_rational, parse_rational, Rational};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DocumentError {
    #[error("invalid JSON: {0}")]
    Json(String),
    #[error("{0}")]
    Shape(String),
    #[error("P[{row}][{col}]: {message}")]
    Value {
        row: usize,
        col: usize,
        message: String,
    },
    #[error("line {line}: {message}")]
    Csv { line: usize, message: String },
    #[error("invalid behavior: {0}")]
    Behavior(#[from] BehaviorError),
}

#[derive(Serialize, Deserialize)]
struct RawDocument {
    #[serde(rename = "P")]
    p: Value,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    label: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    source: Option<String>,
}

/// A parsed but not yet validated behavior document.
#[derive(Clone, Debug, PartialEq)]
pub struct BehaviorDocument {
    pub grid: [[Rational; 4]; 4],
    pub label: Option<String>,
    pub source: Option<String>,
}

fn value_to_rational(v: &Value) -> Result<Rational, String> {
    let text = match v {
        Value::Number(n) => n.to_string(),
        Value::String(s) => s.clone(),
        other => return Err(format!("expected a number or string, found {other}")),
    };
    parse_rational(&text).map_err(|e| format!("`{text}`: {e}"))
}

impl BehaviorDocument {
    pub fn from_json(text: &str) -> Result<Self, DocumentError> {
        let raw: RawDocument =
            serde_json::from_str(text).map_err(|e| DocumentError::Json(e.to_string()))?;
        let rows = raw
            .p
            .as_array()
            .ok_or_else(|| DocumentError::Shape("`P` must be an array of 4 rows".into()))?;
        if rows.len() != 4 {
            return Err(DocumentError::Shape(format!(
                "`P` has {} rows, expected 4",
                rows.len()
            )));
        }
        let mut grid: [[Rational; 4]; 4] = Default::default();
        for (r, row) in rows.iter().enumerate() {
            let cells = row.as_array().filter(|c| c.len() == 4).ok_or_else(|| {
                DocumentError::Shape(format!("row {r} must be an array of 4 values"))
            })?;
            for (c, cell) in cells.iter().enumerate() {
                grid[r][c] = value_to_rational(cell).map_err(|message| DocumentError::Value {
                    row: r,
                    col: c,
                    message,
                })?;
            }
        }
        Ok(BehaviorDocument {
            grid,
            label: raw.label,
            source: raw.source,
        })
    }

    /// Exact validation, or the lenient rescaling path when `tolerance` is set.
    pub fn to_behavior(&self, tolerance: Option<f64>) -> Result<Behavior, DocumentError> {
        Ok(match tolerance {
            Some(tol) => Behavior::validate_approx(&self.grid, tol)?,
            None => Behavior::validate(&self.grid)?,
        })
    }

    pub fn from_behavior(behavior: &Behavior, label: Option<String>) -> Self {
        BehaviorDocument {
            grid: behavior.grid(),
            label,
            source: None,
        }
    }

    /// Values are written as exact rational strings.
    pub fn to_json_value(&self) -> Value {
        let p: Vec<Vec<Value>> = self
            .grid
            .iter()
            .map(|row| {
                row.iter()
                    .map(|v| Value::String(format_rational(v)))
                    .collect()
            })
            .collect();
        let raw = RawDocument {
            p: serde_json::json!(p),
            label: self.label.clone(),
            source: self.source.clone(),
        };
        serde_json::to_value(raw).expect("document serializes")
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_json_value()).expect("document serializes")
    }
}

/// Parses CSV text into flat 16-vectors (not validated).
pub fn parse_csv(text: &str) -> Result<Vec<Vec<Rational>>, DocumentError> {
    let mut out = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let err = |message: String| DocumentError::Csv {
            line: n + 1,
            message,
        };
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != DIM {
            return Err(err(format!("expected 16 values, found {}", fields.len())));
        }
        let row = fields
            .iter()
            .map(|f| parse_rational(f).map_err(|e| err(format!("`{f}`: {e}"))))
            .collect::<Result<Vec<_>, _>>()?;
        out.push(row);
    }
    Ok(out)
}

pub fn behaviors_from_csv(
    text: &str,
    tolerance: Option<f64>,
) -> Result<Vec<Behavior>, DocumentError> {
    parse_csv(text)?
        .into_iter()
        .map(|flat| {
            let grid: [[Rational; 4]; 4] =
                std::array::from_fn(|r| std::array::from_fn(|c| flat[4 * r + c].clone()));
            BehaviorDocument {
                grid,
                label: None,
                source: None,
            }
            .to_behavior(tolerance)
        })
        .collect()
}

pub fn to_csv_line(behavior: &Behavior) -> String {
    behavior
        .entries()
        .iter()
        .map(format_rational)
        .collect::<Vec<_>>()
        .join(",")
}

/// Reads a behavior file, picking the format from the extension
/// (`.csv` is CSV, anything else JSON). CSV files must hold one behavior.
pub fn behavior_from_text(
    text: &str,
    is_csv: bool,
    tolerance: Option<f64>,
) -> Result<(Behavior, Option<String>), DocumentError> {
    if is_csv {
        let mut all = behaviors_from_csv(text, tolerance)?;
        if all.len() != 1 {
            return Err(DocumentError::Shape(format!(
                "expected one behavior, found {}",
                all.len()
            )));
        }
        Ok((all.remove(0), None))
    } else {
        let doc = BehaviorDocument::from_json(text)?;
        let b = doc.to_behavior(tolerance)?;
        Ok((b, doc.label))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polytopes::pr_boxes;
    use crate::rational::{int, ratio};

    #[test]
    fn json_accepts_numbers_and_strings() {
        let text = r#"{"P": [[0.25, "1/4", 0.25, "0.25"], [1, 0, 0, 0], ["1/3", "2/3", 0, 0], [0.1, 0.2, 0.3, 0.4]], "label": "mixed"}"#;
        let doc = BehaviorDocument::from_json(text).unwrap();
        assert_eq!(doc.label.as_deref(), Some("mixed"));
        assert_eq!(doc.grid[3][0], ratio(1, 10));
        let b = doc.to_behavior(None).unwrap();
        assert_eq!(b.entries()[8], ratio(1, 3));
    }

    #[test]
    fn json_round_trip_is_exact() {
        let b = &pr_boxes()[2];
        let doc = BehaviorDocument::from_behavior(b, Some("pr".into()));
        let back = BehaviorDocument::from_json(&doc.to_json()).unwrap();
        assert_eq!(back, doc);
        assert_eq!(&back.to_behavior(None).unwrap(), b);
    }

    #[test]
    fn json_errors() {
        assert!(matches!(
            BehaviorDocument::from_json("{"),
            Err(DocumentError::Json(_))
        ));
        assert!(matches!(
            BehaviorDocument::from_json(r#"{"P": [[1,0,0,0]]}"#),
            Err(DocumentError::Shape(_))
        ));
        let bad = r#"{"P": [["x",0,0,1],[1,0,0,0],[1,0,0,0],[1,0,0,0]]}"#;
        assert!(matches!(
            BehaviorDocument::from_json(bad),
            Err(DocumentError::Value { row: 0, col: 0, .. })
        ));
        let unnormalized = r#"{"P": [[0.5,0,0,0],[1,0,0,0],[1,0,0,0],[1,0,0,0]]}"#;
        let doc = BehaviorDocument::from_json(unnormalized).unwrap();
        assert!(matches!(
            doc.to_behavior(None),
            Err(DocumentError::Behavior(_))
        ));
    }

    #[test]
    fn tolerance_path_rescales() {
        let text = r#"{"P": [[0.2501,0.25,0.25,0.25],[1,0,0,0],[1,0,0,0],[1,0,0,0]]}"#;
        let doc = BehaviorDocument::from_json(text).unwrap();
        assert!(doc.to_behavior(None).is_err());
        let b = doc.to_behavior(Some(1e-3)).unwrap();
        assert_eq!(b.entries()[4], int(1));
        assert!(doc.to_behavior(Some(1e-5)).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let line = to_csv_line(&pr_boxes()[0]);
        let text = format!("# header\n{line}\n\n{line}\n");
        let parsed = behaviors_from_csv(&text, None).unwrap();
        assert_eq!(parsed, vec![pr_boxes()[0].clone(), pr_boxes()[0].clone()]);
        assert!(matches!(
            parse_csv("1,2,3"),
            Err(DocumentError::Csv { line: 1, .. })
        ));
    }
}
