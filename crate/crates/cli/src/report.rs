//! Report structures and their JSON/CSV serialization.

use std::collections::BTreeMap;
use std::path::Path;

use serde::Serialize;

use crate::error::CliError;

/// One numeric check inside a suite.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckBlock {
    pub name: String,
    pub n_samples: usize,
    pub max_residual: f64,
    pub tolerance: f64,
    pub pass: bool,
    /// Samples that could not be evaluated, with the first reason.
    pub failures: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub first_failure: Option<String>,
}

impl CheckBlock {
    pub fn new(name: &str, tolerance: f64) -> Self {
        CheckBlock {
            name: name.into(),
            n_samples: 0,
            max_residual: 0.0,
            tolerance,
            pass: false,
            failures: 0,
            first_failure: None,
        }
    }

    pub fn record(&mut self, residual: f64) {
        self.n_samples += 1;
        // NaN must fail the check, so it poisons the maximum
        self.max_residual = if self.max_residual.is_nan() || residual.is_nan() {
            f64::NAN
        } else {
            self.max_residual.max(residual)
        };
    }

    pub fn fail(&mut self, reason: impl Into<String>) {
        self.failures += 1;
        if self.first_failure.is_none() {
            self.first_failure = Some(reason.into());
        }
    }

    pub fn finish(mut self) -> Self {
        self.pass = self.failures == 0 && self.n_samples > 0 && self.max_residual <= self.tolerance;
        self
    }
}

/// Result of one suite; the headline numbers are those of its first check.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SuiteBlock {
    pub suite: String,
    pub theorem: String,
    pub scenario: String,
    pub n_samples: usize,
    pub max_residual: f64,
    pub tolerance: f64,
    pub pass: bool,
    /// Samples excluded by design (degenerate flags and the like).
    pub skipped: usize,
    pub checks: Vec<CheckBlock>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl SuiteBlock {
    pub fn new(suite: &str, theorem: &str, scenario: &str, checks: Vec<CheckBlock>, skipped: usize) -> Self {
        let checks: Vec<CheckBlock> = checks.into_iter().map(CheckBlock::finish).collect();
        let head = checks.first();
        SuiteBlock {
            suite: suite.into(),
            theorem: theorem.into(),
            scenario: scenario.into(),
            n_samples: head.map_or(0, |c| c.n_samples),
            max_residual: head.map_or(f64::NAN, |c| c.max_residual),
            tolerance: head.map_or(f64::NAN, |c| c.tolerance),
            pass: !checks.is_empty() && checks.iter().all(|c| c.pass),
            skipped,
            checks,
            error: None,
        }
    }

    pub fn failed(suite: &str, theorem: &str, scenario: &str, error: String) -> Self {
        SuiteBlock {
            suite: suite.into(),
            theorem: theorem.into(),
            scenario: scenario.into(),
            n_samples: 0,
            max_residual: f64::NAN,
            tolerance: f64::NAN,
            pass: false,
            skipped: 0,
            checks: Vec::new(),
            error: Some(error),
        }
    }

    pub fn check(&self, name: &str) -> Option<&CheckBlock> {
        self.checks.iter().find(|c| c.name == name)
    }
}

/// A CSV table written next to the report.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: &str, header: &[&str]) -> Self {
        Table { name: name.into(), header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }
}

/// Formats a float with the shortest round-tripping representation.
pub fn num(v: f64) -> String {
    format!("{v:?}")
}

pub fn nums(v: &[f64]) -> impl Iterator<Item = String> + '_ {
    v.iter().map(|&x| num(x))
}

/// Column names `prefix0, prefix1, ...`.
pub fn columns(prefix: &str, n: usize) -> Vec<String> {
    (0..n).map(|i| format!("{prefix}{i}")).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Environment {
    pub version: String,
    pub seed: u64,
    pub zero_wind: bool,
    pub step_policy: BTreeMap<String, f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Dilation {
    pub measured: f64,
    pub fit_residual: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub declared: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Report {
    pub scenario: String,
    pub description: String,
    pub base_metric: String,
    pub wind: String,
    pub dilation: Dilation,
    pub pass: bool,
    pub suites: Vec<SuiteBlock>,
    pub environment: Environment,
}

impl Report {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn suite(&self, name: &str) -> Option<&SuiteBlock> {
        self.suites.iter().find(|s| s.suite == name)
    }
}

pub fn write_json(report: &Report, dir: &Path) -> Result<(), CliError> {
    let path = dir.join("report.json");
    std::fs::write(&path, report.to_json()).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

pub fn write_csv(table: &Table, dir: &Path) -> Result<(), CliError> {
    let path = dir.join(format!("{}.csv", table.name));
    let io = |e: csv::Error| CliError::Io(format!("{}: {e}", path.display()));
    let mut w = csv::Writer::from_path(&path).map_err(io)?;
    w.write_record(&table.header).map_err(io)?;
    for row in &table.rows {
        w.write_record(row).map_err(io)?;
    }
    w.flush().map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}
