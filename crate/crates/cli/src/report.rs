//! CSV and JSON output. Floats are written with 17 significant digits and
//! JSON objects with sorted keys, so reruns are byte-identical.

use crate::{CliError, Result};
use serde::Serialize;
use serde_json::Value;
use std::fmt::Write as _;
use std::path::Path;

/// Numeric table written as `<name>.csv`.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub name: &'static str,
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(name: &'static str, header: &[&str]) -> Self {
        Self {
            name,
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for row in &self.rows {
            for (i, v) in row.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                write!(out, "{}", format_float(*v)).unwrap();
            }
            out.push('\n');
        }
        out
    }
}

pub fn format_float(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        v.to_string()
    }
}

/// One acceptance threshold evaluated on the results.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: Option<f64>,
    pub requirement: String,
    pub pass: bool,
}

impl Check {
    pub fn new(name: &str, value: Option<f64>, requirement: &str, pass: bool) -> Self {
        Self {
            name: name.into(),
            value: value.filter(|v| v.is_finite()),
            requirement: requirement.into(),
            pass,
        }
    }

    /// `lo <= value <= hi`; a missing value fails.
    pub fn within(name: &str, value: Option<f64>, lo: f64, hi: f64) -> Self {
        let pass = value.is_some_and(|v| v >= lo && v <= hi);
        let req = match (lo.is_finite(), hi.is_finite()) {
            (true, true) => format!("in [{lo}, {hi}]"),
            (true, false) => format!(">= {lo}"),
            _ => format!("<= {hi}"),
        };
        Self::new(name, value, &req, pass)
    }

    pub fn at_most(name: &str, value: f64, hi: f64) -> Self {
        Self::within(name, Some(value), f64::NEG_INFINITY, hi)
    }

    pub fn at_least(name: &str, value: f64, lo: f64) -> Self {
        Self::within(name, Some(value), lo, f64::INFINITY)
    }

    pub fn flag(name: &str, ok: bool, requirement: &str) -> Self {
        Self::new(name, None, requirement, ok)
    }
}

/// Everything an experiment produces.
#[derive(Clone, Debug)]
pub struct Outcome {
    /// Summary written to `report.json` (a `checks` array is added on write).
    pub report: Value,
    pub tables: Vec<Table>,
    pub checks: Vec<Check>,
}

impl Outcome {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.name == name)
    }

    pub fn report_json(&self) -> String {
        let mut report = self.report.clone();
        if let Value::Object(map) = &mut report {
            map.insert("checks".into(), serde_json::to_value(&self.checks).unwrap());
        }
        let mut s = serde_json::to_string_pretty(&report).unwrap();
        s.push('\n');
        s
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        let io = |p: &Path| {
            let path = p.display().to_string();
            move |source| CliError::Io { path, source }
        };
        std::fs::create_dir_all(dir).map_err(io(dir))?;
        for t in &self.tables {
            let p = dir.join(format!("{}.csv", t.name));
            std::fs::write(&p, t.to_csv()).map_err(io(&p))?;
        }
        let p = dir.join("report.json");
        std::fs::write(&p, self.report_json()).map_err(io(&p))
    }
}

/// JSON number, or `null` for non-finite values.
pub fn num(v: f64) -> Value {
    serde_json::Number::from_f64(v).map_or(Value::Null, Value::Number)
}
