//! Report structure and emission. Counts are exact integers; measured real
//! values are rounded to 12 significant digits when inserted, so the JSON
//! form round-trips bit-for-bit. Timing lives in a segregated field that
//! determinism comparisons strip.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

/// Round to 12 significant digits.
pub fn sig12(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{x:.11e}").parse().unwrap()
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct Row {
    pub name: String,
    pub q: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub values: BTreeMap<String, Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lhs: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rhs: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub relation: Option<String>,
    pub pass: Option<bool>,
    /// Aux rows (per-q summaries, pipeline internals) stay out of the CSV.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub aux: bool,
}

impl Row {
    pub fn new(name: &str, q: u64, seed: Option<u64>) -> Self {
        Row {
            name: name.to_string(),
            q,
            seed,
            values: BTreeMap::new(),
            lhs: None,
            rhs: None,
            relation: None,
            pass: None,
            aux: false,
        }
    }

    pub fn aux(mut self) -> Self {
        self.aux = true;
        self
    }

    pub fn int(mut self, key: &str, v: u64) -> Self {
        self.values.insert(key.into(), Value::from(v));
        self
    }

    pub fn float(mut self, key: &str, v: f64) -> Self {
        self.values.insert(key.into(), Value::from(sig12(v)));
        self
    }

    pub fn flag(mut self, key: &str, v: bool) -> Self {
        self.values.insert(key.into(), Value::from(v));
        self
    }

    pub fn text(mut self, key: &str, v: &str) -> Self {
        self.values.insert(key.into(), Value::from(v));
        self
    }

    /// Asserted inequality row; both sides recorded as numbers.
    pub fn check(mut self, relation: &str, lhs: f64, rhs: f64, tol: f64) -> Self {
        let pass = match relation {
            "<=" => lhs <= rhs + tol,
            ">=" => lhs + tol >= rhs,
            ">" => lhs > rhs,
            "<" => lhs < rhs,
            "==" => (lhs - rhs).abs() <= tol,
            other => panic!("unknown relation {other}"),
        };
        self.lhs = Some(sig12(lhs));
        self.rhs = Some(sig12(rhs));
        self.relation = Some(relation.into());
        self.pass = Some(pass);
        self
    }

    /// Report-only comparison: both sides recorded, exit code unaffected.
    pub fn observe(mut self, relation: &str, lhs: f64, rhs: f64) -> Self {
        self.lhs = Some(sig12(lhs));
        self.rhs = Some(sig12(rhs));
        self.relation = Some(relation.into());
        self.pass = None;
        self
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Default)]
pub struct Timings {
    pub total_ms: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct Report {
    pub experiment: String,
    pub config: BTreeMap<String, String>,
    pub rows: Vec<Row>,
    pub summary: BTreeMap<String, Value>,
    pub all_passed: bool,
    pub timings: Timings,
}

impl Report {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    /// JSON with the segregated timing field removed; two runs of the same
    /// config agree byte-for-byte on this form.
    pub fn json_without_timings(&self) -> String {
        let mut v: Value = serde_json::to_value(self).expect("report serializes");
        v.as_object_mut().unwrap().remove("timings");
        let mut s = serde_json::to_string_pretty(&v).unwrap();
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> serde_json::Result<Report> {
        serde_json::from_str(text)
    }

    /// Flat CSV: one line per non-aux row, `q,seed` then the experiment's
    /// column list.
    pub fn to_csv(&self, columns: &[&str]) -> String {
        let mut out = String::from("q,seed");
        for c in columns {
            out.push(',');
            out.push_str(c);
        }
        out.push('\n');
        for row in self.rows.iter().filter(|r| !r.aux) {
            out.push_str(&row.q.to_string());
            out.push(',');
            if let Some(s) = row.seed {
                out.push_str(&s.to_string());
            }
            for c in columns {
                out.push(',');
                match row.values.get(*c) {
                    Some(Value::Number(n)) => out.push_str(&n.to_string()),
                    Some(Value::Bool(b)) => out.push_str(if *b { "1" } else { "0" }),
                    Some(Value::String(s)) => out.push_str(s),
                    Some(other) => out.push_str(&other.to_string()),
                    None => {}
                }
            }
            out.push('\n');
        }
        out
    }

    pub fn failed_rows(&self) -> Vec<&Row> {
        self.rows.iter().filter(|r| r.pass == Some(false)).collect()
    }

    pub fn write_to(&self, path: &Path, format: Format, columns: &[&str]) -> std::io::Result<()> {
        let payload = match format {
            Format::Json => self.to_json(),
            Format::Csv => self.to_csv(columns),
        };
        let mut f = std::fs::File::create(path)?;
        f.write_all(payload.as_bytes())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, Default)]
pub enum Format {
    #[default]
    Json,
    Csv,
}
