//! Serialization of analysis results as JSON, CSV or aligned text tables.
//!
//! Output is deterministic: object keys keep declaration order, reals are
//! rounded to 15 significant digits and complex numbers appear as `[re, im]`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::deletion::QualityReport;
use crate::error::{Error, Result};
use crate::fidelity::{FidelityPoint, FidelityReport};
use crate::machines::{DeleteDemoReport, DeleterVerdict};
use crate::nogo::{ConstraintReport, VerifyReport};
use crate::signalling::{SignalPoint, SignallingReport};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
    Table,
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "json" => Ok(Format::Json),
            "csv" => Ok(Format::Csv),
            "table" => Ok(Format::Table),
            other => Err(Error::Parse(format!("unknown output format `{other}`"))),
        }
    }
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Format::Json => "json",
            Format::Csv => "csv",
            Format::Table => "table",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Report {
    Quality(QualityReport),
    Fidelity(FidelityReport),
    FidelitySweep(Vec<FidelityPoint>),
    Constraints(ConstraintReport),
    ConstraintSweep(Vec<ConstraintReport>),
    Signalling(SignallingReport),
    SignalSweep(Vec<SignalPoint>),
    DeleteDemo(DeleteDemoReport),
    Verify(VerifyReport),
    Verdict(DeleterVerdict),
}

impl Report {
    pub fn name(&self) -> &'static str {
        match self {
            Report::Quality(_) => "quality report",
            Report::Fidelity(_) => "fidelity report",
            Report::FidelitySweep(_) => "fidelity sweep",
            Report::Constraints(_) => "constraint report",
            Report::ConstraintSweep(_) => "constraint sweep",
            Report::Signalling(_) => "signalling report",
            Report::SignalSweep(_) => "signal sweep",
            Report::DeleteDemo(_) => "delete-demo report",
            Report::Verify(_) => "verify report",
            Report::Verdict(_) => "deleter verdict",
        }
    }

    fn to_value(&self) -> Value {
        let v = match self {
            Report::Quality(r) => serde_json::to_value(r),
            Report::Fidelity(r) => serde_json::to_value(r),
            Report::FidelitySweep(r) => serde_json::to_value(r),
            Report::Constraints(r) => serde_json::to_value(r),
            Report::ConstraintSweep(r) => serde_json::to_value(r),
            Report::Signalling(r) => serde_json::to_value(r),
            Report::SignalSweep(r) => serde_json::to_value(r),
            Report::DeleteDemo(r) => serde_json::to_value(r),
            Report::Verify(r) => serde_json::to_value(r),
            Report::Verdict(r) => serde_json::to_value(r),
        };
        v.expect("report types serialize without error")
    }

    /// Header and rows for reports that are naturally a table.
    fn rows(&self) -> Option<(Vec<&'static str>, Vec<Vec<f64>>)> {
        Some(match self {
            Report::Quality(r) => (
                vec!["alpha_sq", "bound"],
                r.bound_curve.iter().map(|(x, b)| vec![*x, *b]).collect(),
            ),
            Report::FidelitySweep(r) => (
                vec!["alpha_sq", "f_a", "f_b"],
                r.iter().map(|p| vec![p.alpha_sq, p.f_a, p.f_b]).collect(),
            ),
            Report::ConstraintSweep(r) => (
                vec!["s", "max_residual"],
                r.iter()
                    .map(|c| vec![c.overlap_s.norm(), c.max_residual])
                    .collect(),
            ),
            Report::SignalSweep(r) => (
                vec!["theta", "trace_distance_vs_theta0"],
                r.iter()
                    .map(|p| vec![p.theta, p.trace_distance_vs_theta0])
                    .collect(),
            ),
            _ => return None,
        })
    }
}

/// `x` rounded to 15 significant digits.
pub fn round_sig15(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{x:.14e}").parse().expect("formatted float parses")
}

fn round_value(v: &mut Value) {
    match v {
        Value::Number(n) => {
            if n.is_f64() {
                if let Some(r) = n
                    .as_f64()
                    .map(round_sig15)
                    .and_then(serde_json::Number::from_f64)
                {
                    *n = r;
                }
            }
        }
        Value::Array(items) => items.iter_mut().for_each(round_value),
        Value::Object(map) => map.values_mut().for_each(round_value),
        _ => {}
    }
}

fn fmt_num(x: f64) -> String {
    round_sig15(x).to_string()
}

fn scalar_text(v: &Value) -> String {
    match v {
        Value::Number(n) => n
            .as_f64()
            .filter(|_| n.is_f64())
            .map(fmt_num)
            .unwrap_or_else(|| n.to_string()),
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

/// Flattens nested objects into `path value` rows; arrays without objects
/// stay on one line.
fn flatten(prefix: &str, v: &Value, out: &mut Vec<(String, String)>) {
    let join = |k: &str| {
        if prefix.is_empty() {
            k.to_string()
        } else {
            format!("{prefix}.{k}")
        }
    };
    match v {
        Value::Object(map) => {
            for (k, item) in map {
                flatten(&join(k), item, out);
            }
        }
        Value::Array(items) if items.iter().any(|i| i.is_object()) => {
            for (i, item) in items.iter().enumerate() {
                flatten(&join(&i.to_string()), item, out);
            }
        }
        Value::Array(_) => out.push((prefix.to_string(), v.to_string())),
        _ => out.push((prefix.to_string(), scalar_text(v))),
    }
}

fn aligned(rows: &[Vec<String>]) -> String {
    let cols = rows.iter().map(Vec::len).max().unwrap_or(0);
    let widths: Vec<usize> = (0..cols)
        .map(|c| {
            rows.iter()
                .filter_map(|r| r.get(c))
                .map(|s| s.chars().count())
                .max()
                .unwrap_or(0)
        })
        .collect();
    let mut out = String::new();
    for row in rows {
        let line: Vec<String> = row
            .iter()
            .enumerate()
            .map(|(c, cell)| format!("{cell:<width$}", width = widths[c]))
            .collect();
        out.push_str(line.join("  ").trim_end());
        out.push('\n');
    }
    out
}

/// Serializes `report` in the requested format.
pub fn emit_report(report: &Report, format: Format) -> Result<Vec<u8>> {
    let text = match format {
        Format::Json => {
            let mut v = report.to_value();
            round_value(&mut v);
            let mut s = serde_json::to_string_pretty(&v).expect("values serialize");
            s.push('\n');
            s
        }
        Format::Csv => {
            let (header, rows) = report.rows().ok_or_else(|| Error::UnsupportedFormat {
                format: format.to_string(),
                report: report.name().to_string(),
            })?;
            let mut s = header.join(",");
            s.push('\n');
            for row in rows {
                s.push_str(
                    &row.iter()
                        .map(|x| fmt_num(*x))
                        .collect::<Vec<_>>()
                        .join(","),
                );
                s.push('\n');
            }
            s
        }
        Format::Table => match report.rows() {
            Some((header, rows)) => {
                let mut cells = vec![header.iter().map(|h| h.to_string()).collect::<Vec<_>>()];
                cells.extend(rows.iter().map(|r| r.iter().map(|x| fmt_num(*x)).collect()));
                aligned(&cells)
            }
            None => {
                let mut pairs = Vec::new();
                flatten("", &report.to_value(), &mut pairs);
                aligned(
                    &pairs
                        .into_iter()
                        .map(|(k, v)| vec![k, v])
                        .collect::<Vec<_>>(),
                )
            }
        },
    };
    Ok(text.into_bytes())
}
