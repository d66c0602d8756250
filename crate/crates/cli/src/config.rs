//! The JSON run configuration.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::CliError;
use crate::model::{MetricDef, NamedMetric, NamedNorm, NormDef};
use crate::suites::SuiteName;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub metrics: Vec<MetricDef>,
    #[serde(default)]
    pub norms: Vec<NormDef>,
    pub suites: Vec<SuiteName>,
    #[serde(default)]
    pub samples: SampleCounts,
    /// Primary tolerance per suite, replacing the suite default.
    #[serde(default)]
    pub tolerances: BTreeMap<SuiteName, f64>,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SampleCounts {
    /// Fiber directions per norm.
    pub directions: usize,
    /// Base points per metric.
    pub points: usize,
    /// `(curve, y0)` pairs per metric.
    pub transport: usize,
    /// `(x, y, direction)` triples per metric.
    pub co_occurrence: usize,
    /// Constructed equivalence problems.
    pub equivalence: usize,
}

impl Default for SampleCounts {
    fn default() -> Self {
        SampleCounts {
            directions: 200,
            points: 10,
            transport: 50,
            co_occurrence: 100,
            equivalence: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub report: String,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            report: "report.json".into(),
        }
    }
}

/// A validated config with its norms and metrics constructed.
pub struct LoadedConfig {
    pub config: RunConfig,
    pub norms: Vec<NamedNorm>,
    pub metrics: Vec<NamedMetric>,
}

pub fn parse_config(text: &str) -> Result<RunConfig, CliError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let config: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        CliError::Config {
            key: if path == "." { "(root)".into() } else { path },
            message: format!("{inner}"),
        }
    })?;
    Ok(config)
}

fn invalid(key: impl Into<String>, message: impl Into<String>) -> CliError {
    CliError::Config {
        key: key.into(),
        message: message.into(),
    }
}

impl RunConfig {
    /// Semantic checks and construction of every norm and metric.
    pub fn load(self) -> Result<LoadedConfig, CliError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(invalid(
                "schema_version",
                format!("unsupported version {}, expected {SCHEMA_VERSION}", self.schema_version),
            ));
        }
        if self.suites.is_empty() {
            return Err(invalid("suites", "select at least one suite"));
        }
        let s = &self.samples;
        for (key, v) in [
            ("directions", s.directions),
            ("points", s.points),
            ("transport", s.transport),
            ("co_occurrence", s.co_occurrence),
            ("equivalence", s.equivalence),
        ] {
            if v == 0 {
                return Err(invalid(format!("samples.{key}"), "must be positive"));
            }
        }
        for (suite, tol) in &self.tolerances {
            if !(tol.is_finite() && *tol > 0.0) {
                return Err(invalid(format!("tolerances.{}", suite.name()), "must be a positive number"));
            }
        }
        if self.output.report.trim().is_empty() {
            return Err(invalid("output.report", "empty path"));
        }
        let norms = self
            .norms
            .iter()
            .enumerate()
            .map(|(i, d)| d.build().map_err(|e| invalid(format!("norms[{i}].{}", e.key), e.message)))
            .collect::<Result<Vec<_>, _>>()?;
        let metrics = self
            .metrics
            .iter()
            .enumerate()
            .map(|(i, d)| d.build().map_err(|e| invalid(format!("metrics[{i}].{}", e.key), e.message)))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(LoadedConfig {
            config: self,
            norms,
            metrics,
        })
    }
}

pub fn load_config(path: &Path) -> Result<LoadedConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    parse_config(&text)?.load()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn key_of(text: &str) -> String {
        match parse_config(text).and_then(RunConfig::load) {
            Err(CliError::Config { key, .. }) => key,
            Err(e) => panic!("unexpected error {e}"),
            Ok(_) => panic!("accepted: {text}"),
        }
    }

    #[test]
    fn minimal_config() {
        let c = parse_config(r#"{"schema_version": 1, "suites": ["berwald"]}"#).unwrap();
        assert_eq!(c.samples, SampleCounts::default());
        assert_eq!(c.output.report, "report.json");
        let loaded = c.load().unwrap();
        assert!(loaded.metrics.is_empty());
    }

    #[test]
    fn errors_name_the_key() {
        assert_eq!(key_of(r#"{"schema_version": 1, "suites": ["nope"]}"#), "suites[0]");
        assert_eq!(key_of(r#"{"schema_version": 1, "suites": [], "extra": 1}"#), "extra");
        assert_eq!(key_of(r#"{"schema_version": 2, "suites": ["berwald"]}"#), "schema_version");
        assert_eq!(
            key_of(r#"{"schema_version": 1, "suites": ["berwald"], "metrics": [{"name": "bogus"}]}"#),
            "metrics[0].name"
        );
        assert_eq!(
            key_of(r#"{"schema_version": 1, "suites": ["berwald"], "samples": {"points": 0}}"#),
            "samples.points"
        );
        assert_eq!(
            key_of(r#"{"schema_version": 1, "suites": ["berwald"], "tolerances": {"berwald": -1}}"#),
            "tolerances.berwald"
        );
        assert_eq!(
            key_of(r#"{"schema_version": 1, "suites": ["berwald"], "norms": [{"expr": "y1+", "dimension": 2}]}"#),
            "norms[0].expr"
        );
    }

    #[test]
    fn syntax_errors_carry_a_position() {
        match parse_config("{\"schema_version\": 1,\n \"suites\": [}") {
            Err(CliError::Config { message, .. }) => assert!(message.contains("line 2"), "{message}"),
            other => panic!("{other:?}"),
        }
    }
}
