//! Suite reports and the run report document.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use finsler_core::transport::{IntegratorStats, Method};
use serde::Serialize;

use crate::config::{RunConfig, SCHEMA_VERSION};
use crate::error::CliError;
use crate::suites::SuiteName;

/// Environment variable that redirects every output file into a directory.
pub const OUT_DIR_ENV: &str = "FINSLER_OUT_DIR";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Relation {
    /// `value ≤ bound`.
    AtMost,
    /// `value > bound`.
    Exceeds,
    /// Boolean agreement; `value` is 1 when the two verdicts agree.
    Agrees,
}

#[derive(Debug, Clone, PartialEq, Serialize, Default)]
pub struct Witness {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub x: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub y: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl Witness {
    pub fn at(x: &[f64], y: &[f64]) -> Self {
        Witness {
            x: Some(x.to_vec()),
            y: Some(y.to_vec()),
            note: None,
        }
    }

    pub fn fiber(y: &[f64]) -> Self {
        Witness {
            y: Some(y.to_vec()),
            ..Self::default()
        }
    }

    pub fn note(text: impl Into<String>) -> Self {
        Witness {
            note: Some(text.into()),
            ..Self::default()
        }
    }
}

/// One row of a residual table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub target: String,
    pub quantity: String,
    pub value: f64,
    pub bound: f64,
    pub relation: Relation,
    pub passed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<Witness>,
}

/// Something noteworthy that is not a residual: evaluation failures and
/// flagged counterexample candidates. Every finding fails its suite.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Finding {
    pub target: String,
    pub kind: String,
    pub detail: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<Witness>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Default)]
pub struct IntegratorSummary {
    pub transports: usize,
    pub accepted: usize,
    pub rejected: usize,
    pub evaluations: usize,
    pub max_error_estimate: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub method: Option<Method>,
}

impl IntegratorSummary {
    pub fn absorb(&mut self, stats: &IntegratorStats, method: Method) {
        self.transports += 1;
        self.accepted += stats.accepted;
        self.rejected += stats.rejected;
        self.evaluations += stats.evaluations;
        self.max_error_estimate = self.max_error_estimate.max(stats.error_estimate);
        self.method = Some(method);
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteReport {
    pub name: SuiteName,
    pub passed: bool,
    pub seed: u64,
    pub tolerance: f64,
    pub targets: Vec<String>,
    pub checks: Vec<Check>,
    pub findings: Vec<Finding>,
    /// Measured constants worth tracking between runs.
    pub calibration: BTreeMap<String, f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub integrator: Option<IntegratorSummary>,
}

impl SuiteReport {
    pub fn new(name: SuiteName, seed: u64, tolerance: f64) -> Self {
        SuiteReport {
            name,
            passed: true,
            seed,
            tolerance,
            targets: Vec::new(),
            checks: Vec::new(),
            findings: Vec::new(),
            calibration: BTreeMap::new(),
            integrator: None,
        }
    }

    pub fn at_most(&mut self, target: &str, quantity: &str, value: f64, bound: f64, witness: Option<Witness>) {
        self.push(target, quantity, value, bound, Relation::AtMost, value <= bound, witness);
    }

    pub fn exceeds(&mut self, target: &str, quantity: &str, value: f64, bound: f64, witness: Option<Witness>) {
        self.push(target, quantity, value, bound, Relation::Exceeds, value > bound, witness);
    }

    /// Records whether two boolean verdicts agree; `mismatches` out of `total`.
    pub fn agrees(&mut self, target: &str, quantity: &str, mismatches: usize, witness: Option<Witness>) {
        self.push(
            target,
            quantity,
            mismatches as f64,
            0.0,
            Relation::Agrees,
            mismatches == 0,
            witness,
        );
    }

    fn push(
        &mut self,
        target: &str,
        quantity: &str,
        value: f64,
        bound: f64,
        relation: Relation,
        passed: bool,
        witness: Option<Witness>,
    ) {
        self.checks.push(Check {
            target: target.to_string(),
            quantity: quantity.to_string(),
            value,
            bound,
            relation,
            passed,
            witness: if passed { None } else { witness },
        });
    }

    pub fn finding(&mut self, target: &str, kind: &str, detail: impl Into<String>, witness: Option<Witness>) {
        self.findings.push(Finding {
            target: target.to_string(),
            kind: kind.to_string(),
            detail: detail.into(),
            witness,
        });
    }

    pub fn error(&mut self, target: &str, context: &str, err: impl std::fmt::Display) {
        self.finding(target, "evaluation-error", format!("{context}: {err}"), None);
    }

    pub fn calibrate(&mut self, key: impl Into<String>, value: f64) {
        self.calibration.insert(key.into(), value);
    }

    /// Sets `passed` from the checks and findings.
    pub fn finish(mut self) -> Self {
        self.passed = self.findings.is_empty() && self.checks.iter().all(|c| c.passed);
        self
    }

    pub fn failed_checks(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WallClock {
    pub total_seconds: f64,
    pub suites: BTreeMap<String, f64>,
}

/// The report document. Everything except `wall_clock` is a function of
/// the config and seed.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub schema_version: u32,
    pub tool_version: String,
    pub seed: u64,
    pub config: RunConfig,
    pub suites: Vec<SuiteReport>,
    pub passed: bool,
    pub wall_clock: WallClock,
}

impl Report {
    pub fn new(config: RunConfig, suites: Vec<SuiteReport>, wall_clock: WallClock) -> Self {
        Report {
            schema_version: SCHEMA_VERSION,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            seed: config.seed,
            passed: suites.iter().all(|s| s.passed),
            config,
            suites,
            wall_clock,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

/// Resolves an output path, redirecting it into `$FINSLER_OUT_DIR` when set.
pub fn output_path(path: &Path) -> PathBuf {
    match std::env::var_os(OUT_DIR_ENV) {
        Some(dir) if !dir.is_empty() => {
            let name = path.file_name().map(PathBuf::from).unwrap_or_else(|| PathBuf::from("report.json"));
            PathBuf::from(dir).join(name)
        }
        _ => path.to_path_buf(),
    }
}

/// Writes through a temporary file in the target directory, then renames.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<(), CliError> {
    let io = |e: std::io::Error| CliError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    };
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d.to_path_buf(),
        _ => PathBuf::from("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(&dir).map_err(io)?;
    tmp.write_all(contents).map_err(io)?;
    tmp.flush().map_err(io)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}
