//! Text and JSON rendering of command results and verification reports.
//!
//! Text numbers use 17 significant digits (`{:.16e}`), which round-trips
//! every finite double; JSON relies on serde_json's shortest round-trip form.

use std::fmt::Write as _;

use serde::Serialize;
use subweyl_core::verify::{CheckResult, VerificationReport};
use subweyl_core::Tensor;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Text,
    Json,
}

/// A named tensor with 1-based index labels in text form.
#[derive(Debug, Clone, Serialize)]
pub struct Block {
    pub name: String,
    pub shape: Vec<usize>,
    /// Row-major values.
    pub values: Vec<f64>,
}

impl Block {
    pub fn tensor(name: &str, t: &Tensor<f64>) -> Block {
        Block { name: name.to_string(), shape: t.shape().to_vec(), values: t.data().to_vec() }
    }

    pub fn vector(name: &str, v: &[f64]) -> Block {
        Block { name: name.to_string(), shape: vec![v.len()], values: v.to_vec() }
    }

    pub fn scalar(name: &str, v: f64) -> Block {
        Block { name: name.to_string(), shape: Vec::new(), values: vec![v] }
    }
}

/// Output of a compute command.
#[derive(Debug, Clone, Serialize)]
pub struct Doc {
    pub command: String,
    pub spec: String,
    pub point: String,
    pub blocks: Vec<Block>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

pub fn num(v: f64) -> String {
    format!("{v:.16e}")
}

fn labels(shape: &[usize]) -> Vec<String> {
    let total: usize = shape.iter().product();
    (0..total)
        .map(|mut flat| {
            let mut ix = vec![0; shape.len()];
            for (k, &s) in shape.iter().enumerate().rev() {
                ix[k] = flat % s + 1;
                flat /= s;
            }
            ix.iter().map(usize::to_string).collect::<Vec<_>>().join(",")
        })
        .collect()
}

impl Doc {
    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Json => serde_json::to_string_pretty(self).expect("plain data serializes") + "\n",
            Format::Text => {
                let mut s = String::new();
                let _ = writeln!(s, "command = {}", self.command);
                let _ = writeln!(s, "spec = {}", self.spec);
                let _ = writeln!(s, "point = {}", self.point);
                for b in &self.blocks {
                    if b.shape.is_empty() {
                        let _ = writeln!(s, "{} = {}", b.name, num(b.values[0]));
                        continue;
                    }
                    for (label, v) in labels(&b.shape).iter().zip(&b.values) {
                        let _ = writeln!(s, "{}[{label}] = {}", b.name, num(*v));
                    }
                }
                for note in &self.notes {
                    let _ = writeln!(s, "note = {note}");
                }
                s
            }
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckOut {
    pub name: String,
    pub max: f64,
    pub min: f64,
    pub mean: f64,
    pub tol: f64,
    pub bound: &'static str,
    pub holds: bool,
    /// `"holds"`, `"fails"`, or `"info"` for checks without an expectation.
    pub expected: &'static str,
    pub pass: bool,
}

impl From<&CheckResult> for CheckOut {
    fn from(c: &CheckResult) -> Self {
        CheckOut {
            name: c.name.clone(),
            max: c.max,
            min: c.min,
            mean: c.mean,
            tol: c.tol,
            bound: c.bound.name(),
            holds: c.holds,
            expected: match c.expected {
                Some(true) => "holds",
                Some(false) => "fails",
                None => "info",
            },
            pass: c.pass,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ReportOut {
    pub suite: String,
    pub spec: String,
    pub points: usize,
    pub seed: u64,
    pub checks: Vec<CheckOut>,
    pub notes: Vec<String>,
    pub pass: bool,
    pub wall_time_s: f64,
}

impl ReportOut {
    pub fn new(r: &VerificationReport, wall_time_s: f64) -> Self {
        ReportOut {
            suite: r.suite.clone(),
            spec: r.spec.clone(),
            points: r.points,
            seed: r.seed,
            checks: r.checks.iter().map(CheckOut::from).collect(),
            notes: r.notes.clone(),
            pass: r.pass,
            wall_time_s,
        }
    }

    fn text(&self, s: &mut String) {
        let _ = writeln!(s, "suite = {}", self.suite);
        let _ = writeln!(s, "spec = {}", self.spec);
        let _ = writeln!(s, "points = {}", self.points);
        let _ = writeln!(s, "seed = {}", self.seed);
        for c in &self.checks {
            let _ = writeln!(
                s,
                "check = {}; max = {}; min = {}; mean = {}; tol = {}; bound = {}; holds = {}; expected = {}; pass = {}",
                c.name,
                num(c.max),
                num(c.min),
                num(c.mean),
                num(c.tol),
                c.bound,
                c.holds,
                c.expected,
                c.pass
            );
        }
        for note in &self.notes {
            let _ = writeln!(s, "note = {note}");
        }
        let _ = writeln!(s, "pass = {}", self.pass);
        let _ = writeln!(s, "wall_time_s = {:.6}", self.wall_time_s);
    }
}

/// One or more suite reports plus the suites that did not apply.
#[derive(Debug, Clone, Serialize)]
pub struct VerifyOut {
    pub reports: Vec<ReportOut>,
    pub skipped: Vec<String>,
    pub pass: bool,
}

impl VerifyOut {
    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Json => serde_json::to_string_pretty(self).expect("plain data serializes") + "\n",
            Format::Text => {
                let mut s = String::new();
                for (i, r) in self.reports.iter().enumerate() {
                    if i > 0 {
                        s.push('\n');
                    }
                    r.text(&mut s);
                }
                for k in &self.skipped {
                    let _ = writeln!(s, "skipped = {k}");
                }
                if self.reports.len() > 1 {
                    let _ = writeln!(s, "overall = {}", if self.pass { "pass" } else { "fail" });
                }
                s
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn labels_are_one_based_row_major() {
        assert_eq!(labels(&[2, 2]), ["1,1", "1,2", "2,1", "2,2"]);
    }

    #[test]
    fn text_numbers_round_trip() {
        for v in [0.1, -1.0 / 3.0, 1e-300, 6.02214076e23, f64::MIN_POSITIVE] {
            assert_eq!(num(v).parse::<f64>().unwrap().to_bits(), v.to_bits());
        }
    }
}
