//! Verification suites. Each suite turns a target set and a seed into a
//! [`SuiteReport`] of residual checks.

mod curvature;
mod norms;
mod transport;

use clap::ValueEnum;
use finsler_core::finsler::{Domain, FinslerMetric};
use finsler_core::sampling::child_seed;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::SampleCounts;
use crate::model::{self, NamedMetric, NamedNorm};
use crate::report::SuiteReport;

/// Suite names in canonical order. The position in [`SuiteName::ALL`] is the
/// index used to derive each suite's seed from the global one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
#[value(rename_all = "kebab-case")]
pub enum SuiteName {
    MinkowskiIdentities,
    Centroaffine,
    SemiC,
    Equivalence,
    BlaschkeDeicke,
    Curvature,
    BianchiSymmetry,
    Berwald,
    Landsberg,
    Theorem11,
    Transport,
    CoOccurrence,
}

impl SuiteName {
    pub const ALL: [SuiteName; 12] = [
        SuiteName::MinkowskiIdentities,
        SuiteName::Centroaffine,
        SuiteName::SemiC,
        SuiteName::Equivalence,
        SuiteName::BlaschkeDeicke,
        SuiteName::Curvature,
        SuiteName::BianchiSymmetry,
        SuiteName::Berwald,
        SuiteName::Landsberg,
        SuiteName::Theorem11,
        SuiteName::Transport,
        SuiteName::CoOccurrence,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SuiteName::MinkowskiIdentities => "minkowski-identities",
            SuiteName::Centroaffine => "centroaffine",
            SuiteName::SemiC => "semi-c",
            SuiteName::Equivalence => "equivalence",
            SuiteName::BlaschkeDeicke => "blaschke-deicke",
            SuiteName::Curvature => "curvature",
            SuiteName::BianchiSymmetry => "bianchi-symmetry",
            SuiteName::Berwald => "berwald",
            SuiteName::Landsberg => "landsberg",
            SuiteName::Theorem11 => "theorem11",
            SuiteName::Transport => "transport",
            SuiteName::CoOccurrence => "co-occurrence",
        }
    }

    pub fn index(self) -> u64 {
        Self::ALL.iter().position(|&s| s == self).expect("listed") as u64
    }

    /// Seed of this suite under a global seed.
    pub fn seed(self, global: u64) -> u64 {
        child_seed(global, self.index())
    }

    /// Primary tolerance when none is configured.
    pub fn default_tolerance(self) -> f64 {
        match self {
            SuiteName::MinkowskiIdentities => 1e-10,
            SuiteName::Centroaffine => 1e-10,
            SuiteName::SemiC => 1e-8,
            SuiteName::Equivalence => 1e-6,
            SuiteName::BlaschkeDeicke => 1e-8,
            SuiteName::Curvature => 1e-9,
            SuiteName::BianchiSymmetry => 1e-10,
            // relative to the grid scale of g, see `classify`
            SuiteName::Berwald | SuiteName::Landsberg | SuiteName::Theorem11 => 1e-7,
            SuiteName::Transport => 1e-8,
            SuiteName::CoOccurrence => 1e-6,
        }
    }

    fn uses_norms(self) -> bool {
        matches!(
            self,
            SuiteName::MinkowskiIdentities
                | SuiteName::Centroaffine
                | SuiteName::SemiC
                | SuiteName::Equivalence
                | SuiteName::BlaschkeDeicke
        )
    }
}

/// What the suites run on. Empty lists fall back to built-in targets.
#[derive(Debug, Clone, Default)]
pub struct SuiteInputs {
    pub norms: Vec<NamedNorm>,
    pub metrics: Vec<NamedMetric>,
    pub samples: SampleCounts,
}

impl SuiteInputs {
    /// Norm targets: the given norms, else the fiber norms of the given
    /// metrics at their domain centers, else `fallback`.
    fn norm_targets(&self, fallback: fn() -> Vec<NamedNorm>) -> Vec<NamedNorm> {
        if !self.norms.is_empty() {
            return self.norms.clone();
        }
        if !self.metrics.is_empty() {
            let fibers: Vec<NamedNorm> = self
                .metrics
                .iter()
                .filter_map(|m| {
                    let x = m.metric.domain().center();
                    m.metric.fiber_norm(&x).ok().map(|norm| NamedNorm {
                        id: format!("{}@center", m.id),
                        norm,
                    })
                })
                .collect();
            if !fibers.is_empty() {
                return fibers;
            }
        }
        fallback()
    }

    /// Metric targets: the given metrics, else the given norms as locally
    /// Minkowski metrics, else the full catalog.
    fn metric_targets(&self) -> Vec<NamedMetric> {
        if !self.metrics.is_empty() {
            return self.metrics.clone();
        }
        if !self.norms.is_empty() {
            return self
                .norms
                .iter()
                .filter_map(|n| {
                    let domain = Domain::cube(n.norm.dimension(), 1.0);
                    FinslerMetric::locally_minkowski(n.norm.clone(), domain)
                        .ok()
                        .map(|metric| NamedMetric {
                            id: model::metric_id(&metric),
                            metric,
                        })
                })
                .collect();
        }
        model::default_metrics()
    }
}

/// Runs one suite.
pub fn run_suite(name: SuiteName, inputs: &SuiteInputs, seed: u64, tolerance: Option<f64>) -> SuiteReport {
    let tol = tolerance.unwrap_or(name.default_tolerance());
    let mut report = SuiteReport::new(name, seed, tol);
    let fallback: fn() -> Vec<NamedNorm> = match name {
        SuiteName::SemiC => model::default_semi_c_norms,
        _ => model::default_norms,
    };
    if name.uses_norms() {
        let targets = inputs.norm_targets(fallback);
        report.targets = targets.iter().map(|t| t.id.clone()).collect();
        let s = &inputs.samples;
        match name {
            SuiteName::MinkowskiIdentities => norms::minkowski_identities(&mut report, &targets, s),
            SuiteName::Centroaffine => norms::centroaffine(&mut report, &targets, s),
            SuiteName::SemiC => norms::semi_c(&mut report, &targets, s),
            SuiteName::Equivalence => norms::equivalence(&mut report, &targets, s),
            SuiteName::BlaschkeDeicke => norms::blaschke_deicke(&mut report, &targets, s),
            _ => unreachable!("norm suites only"),
        }
    } else {
        let targets = inputs.metric_targets();
        report.targets = targets.iter().map(|t| t.id.clone()).collect();
        let s = &inputs.samples;
        match name {
            SuiteName::Curvature => curvature::curvature(&mut report, &targets, s),
            SuiteName::BianchiSymmetry => curvature::bianchi_symmetry(&mut report, &targets, s),
            SuiteName::Berwald => curvature::berwald(&mut report, &targets, s, tolerance),
            SuiteName::Landsberg => curvature::landsberg(&mut report, &targets, s, tolerance),
            SuiteName::Theorem11 => curvature::theorem11(&mut report, &targets, s, tolerance),
            SuiteName::Transport => transport::transport(&mut report, &targets, s),
            SuiteName::CoOccurrence => transport::co_occurrence(&mut report, &targets, s),
            _ => unreachable!("metric suites only"),
        }
    }
    report.finish()
}

/// Runs several suites concurrently; the output keeps the input order.
pub fn run_suites(
    names: &[SuiteName],
    inputs: &SuiteInputs,
    global_seed: u64,
    tolerance: impl Fn(SuiteName) -> Option<f64> + Sync,
) -> Vec<(SuiteReport, f64)> {
    names
        .par_iter()
        .map(|&name| {
            let start = std::time::Instant::now();
            let report = run_suite(name, inputs, name.seed(global_seed), tolerance(name));
            (report, start.elapsed().as_secs_f64())
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for s in SuiteName::ALL {
            let json = serde_json::to_string(&s).unwrap();
            assert_eq!(json, format!("\"{}\"", s.name()));
            let back: SuiteName = serde_json::from_str(&json).unwrap();
            assert_eq!(back, s);
            assert_eq!(SuiteName::from_str(s.name(), false).unwrap(), s);
        }
    }

    #[test]
    fn seeds_are_distinct_and_stable() {
        let seeds: Vec<u64> = SuiteName::ALL.iter().map(|s| s.seed(7)).collect();
        let mut sorted = seeds.clone();
        sorted.sort_unstable();
        sorted.dedup();
        assert_eq!(sorted.len(), seeds.len());
        assert_eq!(SuiteName::Berwald.seed(7), child_seed(7, 7));
    }
}
