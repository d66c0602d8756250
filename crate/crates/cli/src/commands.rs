//! Subcommand implementations.

use std::path::{Path, PathBuf};
use std::time::Instant;

use finsler_core::finsler::{self, classify, curvature_bundle, GridSpec, Tolerances};
use finsler_core::indicatrix::{equivalence_solve, EquivalenceOptions};
use finsler_core::minkowski;
use finsler_core::sampling;
use finsler_core::tensor::{Tensor3, Tensor4};
use finsler_core::transport::{transport, Curve, TransportOptions};
use nalgebra::{DMatrix, DVector};
use serde::Deserialize;
use serde_json::{json, Value};

use crate::config::{load_config, SampleCounts};
use crate::error::{CliError, EXIT_FAILED, EXIT_OK};
use crate::export;
use crate::model::{self, NamedMetric, NamedNorm};
use crate::report::{output_path, write_atomic, Report, WallClock};
use crate::suites::{run_suite, run_suites, SuiteInputs, SuiteName};
use crate::{Cli, Command, Common, ExportFormat};

/// Default bound on relative norm drift for `transport`.
const DRIFT_TOLERANCE: f64 = 1e-8;
/// Default residual bound for `equiv`.
const EQUIVALENCE_TOLERANCE: f64 = 1e-6;

pub fn execute(cli: &Cli) -> Result<i32, CliError> {
    let c = &cli.common;
    match &cli.command {
        Command::Catalog => catalog(),
        Command::Invariants { metric, dim, x, y } => invariants(metric, *dim, x.as_deref(), y),
        Command::Classify { metric, dim } => classify_metric(c, metric, *dim),
        Command::Transport {
            metric,
            dim,
            from,
            to,
            curve,
            y0,
            t,
            out,
        } => transport_run(c, metric, *dim, from.as_deref(), to.as_deref(), curve.as_deref(), y0, *t, out.as_deref()),
        Command::Equiv { norm1, norm2, dim } => equiv(c, norm1, norm2, *dim),
        Command::Verify {
            suite,
            metric,
            norm,
            dim,
            report,
        } => verify(c, *suite, metric, norm, *dim, report.as_deref()),
        Command::Run { config } => run_config(c, config),
        Command::Export {
            norm,
            dim,
            resolution,
            format,
            out,
        } => export_norm(c, norm, *dim, *resolution, *format, out),
    }
}

fn input(flag: &str, message: impl std::fmt::Display) -> CliError {
    CliError::Input(format!("{flag}: {message}"))
}

fn build_norm(flag: &str, spec: &str, dim: Option<usize>) -> Result<NamedNorm, CliError> {
    model::norm_from_spec(spec, dim)
        .map_err(|e| input(flag, e))?
        .build()
        .map_err(|e| input(flag, e))
}

fn build_metric(flag: &str, spec: &str, dim: Option<usize>) -> Result<NamedMetric, CliError> {
    model::metric_from_spec(spec, dim)
        .map_err(|e| input(flag, e))?
        .build()
        .map_err(|e| input(flag, e))
}

fn vector(flag: &str, text: &str, n: usize) -> Result<Vec<f64>, CliError> {
    let v = model::parse_list(text).map_err(|e| input(flag, e))?;
    if v.len() != n {
        return Err(input(flag, format!("expected {n} components, got {}", v.len())));
    }
    Ok(v)
}

fn print_json(value: &impl serde::Serialize) {
    println!("{}", serde_json::to_string_pretty(value).expect("serializable"));
}

fn write_file(path: &Path, contents: &str) -> Result<PathBuf, CliError> {
    let path = output_path(path);
    write_atomic(&path, contents.as_bytes())?;
    Ok(path)
}

fn catalog() -> Result<i32, CliError> {
    println!("norms:");
    for name in minkowski::CATALOG {
        let params = match name {
            "euclidean" => "",
            "randers" => "b1,...,bn with |b| < 1",
            "quartic-smoothed" => "eps > 0 (default 0.1)",
            _ => "row-major n x n invertible matrix applied before the Euclidean norm",
        };
        println!("  {name:<24} {params}");
    }
    println!("metrics (domain [-1, 1]^n; every norm name gives a locally Minkowski metric):");
    for name in finsler::CATALOG {
        let params = match name {
            "euclidean" => "",
            "riemannian-hyperbolic" => "",
            "randers-hyperbolic" => "b1,...,bn (default 0.3,0,...)",
            _ => "n = 3",
        };
        println!("  {name:<24} {params}");
    }
    println!("suites:");
    for s in SuiteName::ALL {
        println!("  {:<24} default tolerance {:e}", s.name(), s.default_tolerance());
    }
    Ok(EXIT_OK)
}

fn matrix(m: &DMatrix<f64>) -> Value {
    json!((0..m.nrows()).map(|i| m.row(i).iter().copied().collect::<Vec<_>>()).collect::<Vec<_>>())
}

fn column(v: &DVector<f64>) -> Value {
    json!(v.iter().copied().collect::<Vec<_>>())
}

fn tensor3(t: &Tensor3) -> Value {
    let n = t.n;
    json!((0..n)
        .map(|i| (0..n).map(|j| (0..n).map(|k| t.get(i, j, k)).collect::<Vec<_>>()).collect::<Vec<_>>())
        .collect::<Vec<_>>())
}

fn tensor4(t: &Tensor4) -> Value {
    let n = t.n;
    json!((0..n)
        .map(|i| (0..n)
            .map(|j| (0..n)
                .map(|k| (0..n).map(|l| t.get(i, j, k, l)).collect::<Vec<_>>())
                .collect::<Vec<_>>())
            .collect::<Vec<_>>())
        .collect::<Vec<_>>())
}

fn invariants(spec: &str, dim: Option<usize>, x: Option<&str>, y: &str) -> Result<i32, CliError> {
    let m = build_metric("--metric", spec, dim)?;
    let n = m.metric.dimension();
    let x = match x {
        Some(text) => vector("--x", text, n)?,
        None => m.metric.domain().center(),
    };
    let y = vector("--y", y, n)?;
    let c = curvature_bundle(&m.metric, &x, &y).map_err(|e| CliError::Input(e.to_string()))?;
    print_json(&json!({
        "metric": m.id,
        "x": c.x,
        "y": c.y,
        "F": c.f,
        "g": matrix(&c.g),
        "g_inv": matrix(&c.g_inv),
        "A": tensor3(&c.a),
        "G": column(&c.spray),
        "N": matrix(&c.n_conn),
        "Gamma": tensor3(&c.gamma),
        "B": tensor4(&c.b),
        "E": matrix(&c.e),
        "L": tensor3(&c.l),
        "J": column(&c.j),
        "P": tensor4(&c.p),
        "tau": c.tau,
        "S": c.s,
        "hdtau": column(&c.hdtau),
        "eta": column(&c.eta),
    }));
    Ok(EXIT_OK)
}

fn classify_metric(c: &Common, spec: &str, dim: Option<usize>) -> Result<i32, CliError> {
    let m = build_metric("--metric", spec, dim)?;
    let grid = GridSpec {
        points: c.samples.unwrap_or(10),
        directions: 10,
        seed: c.seed.unwrap_or(0),
    };
    let tol = Tolerances {
        absolute: c.tol,
        ..Tolerances::default()
    };
    let r = classify(&m.metric, &grid, &tol).map_err(|e| CliError::Input(e.to_string()))?;
    print_json(&r);
    Ok(if r.consistent && r.unicorn_candidates.is_empty() {
        EXIT_OK
    } else {
        EXIT_FAILED
    })
}

/// JSON form of a curve for `--curve`.
#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
enum CurveDef {
    Segment { from: Vec<f64>, to: Vec<f64> },
    Polynomial { coefficients: Vec<Vec<f64>> },
    Chain { points: Vec<Vec<f64>> },
}

impl From<CurveDef> for Curve {
    fn from(d: CurveDef) -> Curve {
        match d {
            CurveDef::Segment { from, to } => Curve::Segment { from, to },
            CurveDef::Polynomial { coefficients } => Curve::Polynomial { coefficients },
            CurveDef::Chain { points } => Curve::Chain { points },
        }
    }
}

fn parse_curve(text: &str) -> Result<Curve, CliError> {
    let json = if text.trim_start().starts_with('{') {
        text.to_string()
    } else {
        std::fs::read_to_string(text).map_err(|e| CliError::Io {
            path: text.to_string(),
            message: e.to_string(),
        })?
    };
    let def: CurveDef = serde_json::from_str(&json).map_err(|e| input("--curve", e))?;
    Ok(def.into())
}

fn transport_run(
    c: &Common,
    spec: &str,
    dim: Option<usize>,
    from: Option<&str>,
    to: Option<&str>,
    curve: Option<&str>,
    y0: &str,
    t: f64,
    out: Option<&Path>,
) -> Result<i32, CliError> {
    let m = build_metric("--metric", spec, dim)?;
    let n = m.metric.dimension();
    let curve = match (curve, from, to) {
        (Some(text), _, _) => parse_curve(text)?,
        (None, Some(a), Some(b)) => Curve::segment(vector("--from", a, n)?, vector("--to", b, n)?),
        _ => return Err(CliError::Input("give --curve, or both --from and --to".into())),
    };
    let y0 = vector("--y0", y0, n)?;
    let r = transport(&m.metric, &curve, &y0, t, &TransportOptions::default())
        .map_err(|e| CliError::Input(e.to_string()))?;
    let drift = r.max_drift() / r.norms[0];
    let tol = c.tol.unwrap_or(DRIFT_TOLERANCE);
    match out {
        Some(path) => {
            let written = write_file(path, &r.to_csv())?;
            print_json(&json!({
                "metric": m.id,
                "y": r.y,
                "relative_drift": drift,
                "tolerance": tol,
                "accepted_steps": r.stats.accepted,
                "rejected_steps": r.stats.rejected,
                "trajectory": written.display().to_string(),
            }));
        }
        None => print!("{}", r.to_csv()),
    }
    Ok(if drift <= tol { EXIT_OK } else { EXIT_FAILED })
}

fn equiv(c: &Common, spec1: &str, spec2: &str, dim: Option<usize>) -> Result<i32, CliError> {
    let f1 = build_norm("--norm1", spec1, dim)?;
    let f2 = build_norm("--norm2", spec2, dim)?;
    let opts = EquivalenceOptions {
        seed: c.seed.unwrap_or(0),
        tol: c.tol.unwrap_or(EQUIVALENCE_TOLERANCE),
        samples: c.samples,
        ..EquivalenceOptions::default()
    };
    let r = equivalence_solve(&f1.norm, &f2.norm, &opts).map_err(|e| CliError::Input(e.to_string()))?;
    print_json(&json!({
        "norm1": f1.id,
        "norm2": f2.id,
        "residual": r.residual,
        "tolerance": opts.tol,
        "equivalent": r.success,
        "restarts_used": r.restarts_used,
        "matrix": matrix(&r.matrix),
    }));
    Ok(if r.success { EXIT_OK } else { EXIT_FAILED })
}

/// Sample counts with `--samples` applied to the count `suite` consumes.
fn samples_for(suite: SuiteName, samples: Option<usize>) -> SampleCounts {
    let mut s = SampleCounts::default();
    if let Some(k) = samples {
        let slot = match suite {
            SuiteName::MinkowskiIdentities
            | SuiteName::Centroaffine
            | SuiteName::SemiC
            | SuiteName::BlaschkeDeicke => &mut s.directions,
            SuiteName::Equivalence => &mut s.equivalence,
            SuiteName::Transport => &mut s.transport,
            SuiteName::CoOccurrence => &mut s.co_occurrence,
            _ => &mut s.points,
        };
        *slot = k.max(1);
    }
    s
}

fn verify(
    c: &Common,
    suite: SuiteName,
    metrics: &[String],
    norms: &[String],
    dim: Option<usize>,
    report: Option<&Path>,
) -> Result<i32, CliError> {
    let inputs = SuiteInputs {
        norms: norms.iter().map(|s| build_norm("--norm", s, dim)).collect::<Result<_, _>>()?,
        metrics: metrics.iter().map(|s| build_metric("--metric", s, dim)).collect::<Result<_, _>>()?,
        samples: samples_for(suite, c.samples),
    };
    let r = run_suite(suite, &inputs, suite.seed(c.seed.unwrap_or(0)), c.tol);
    match report {
        Some(path) => {
            let text = serde_json::to_string_pretty(&r).expect("serializable") + "\n";
            let written = write_file(path, &text)?;
            println!("{}: {} ({})", suite.name(), verdict(r.passed), written.display());
        }
        None => print_json(&r),
    }
    Ok(if r.passed { EXIT_OK } else { EXIT_FAILED })
}

fn verdict(passed: bool) -> &'static str {
    if passed {
        "pass"
    } else {
        "FAIL"
    }
}

fn run_config(c: &Common, path: &Path) -> Result<i32, CliError> {
    let loaded = load_config(path)?;
    let mut config = loaded.config;
    if let Some(seed) = c.seed {
        config.seed = seed;
    }
    let inputs = SuiteInputs {
        norms: loaded.norms,
        metrics: loaded.metrics,
        samples: config.samples,
    };
    let start = Instant::now();
    let results = run_suites(&config.suites, &inputs, config.seed, |s| config.tolerances.get(&s).copied());
    let total = start.elapsed().as_secs_f64();
    let mut suites = Vec::with_capacity(results.len());
    let mut clock = WallClock {
        total_seconds: total,
        suites: Default::default(),
    };
    for (r, secs) in results {
        println!("{:<24} {}", r.name.name(), verdict(r.passed));
        for check in r.failed_checks() {
            println!("    {} {}: {:e} (bound {:e})", check.target, check.quantity, check.value, check.bound);
        }
        for f in &r.findings {
            println!("    {} {}: {}", f.target, f.kind, f.detail);
        }
        clock.suites.insert(r.name.name().to_string(), secs);
        suites.push(r);
    }
    let out = PathBuf::from(&config.output.report);
    let report = Report::new(config, suites, clock);
    let written = write_file(&out, &report.to_json())?;
    println!("report: {}", written.display());
    Ok(if report.passed { EXIT_OK } else { EXIT_FAILED })
}

fn export_norm(
    c: &Common,
    spec: &str,
    dim: Option<usize>,
    resolution: usize,
    format: ExportFormat,
    out: &Path,
) -> Result<i32, CliError> {
    let f = build_norm("--norm", spec, dim)?.norm;
    let n = f.dimension();
    let directions: Vec<Vec<f64>> = match n {
        2 => export::circle(8 << resolution),
        3 => export::icosphere(resolution).0.iter().map(|d| d.to_vec()).collect(),
        _ => sampling::directions(n, c.samples.unwrap_or(200), c.seed.unwrap_or(0)),
    };
    let table = export::invariant_table(&f, &directions)?;
    match format {
        ExportFormat::Table => {
            let written = write_file(out, &table)?;
            println!("table: {}", written.display());
        }
        ExportFormat::Geometry => {
            let vertices = export::project(&f, &directions)?;
            let geometry = match n {
                2 => export::polyline_csv(&vertices),
                3 => export::obj(&vertices, &export::icosphere(resolution).1),
                _ => {
                    return Err(CliError::Unsupported(format!(
                        "geometry export needs n = 2 or 3, got n = {n}; use --format table for the invariant CSV"
                    )))
                }
            };
            let companion = companion_path(out);
            let written = write_file(out, &geometry)?;
            let table_path = write_file(&companion, &table)?;
            println!("geometry: {}", written.display());
            println!("table: {}", table_path.display());
        }
    }
    Ok(EXIT_OK)
}

/// `mesh.obj` → `mesh.invariants.csv`.
fn companion_path(out: &Path) -> PathBuf {
    let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "indicatrix".into());
    out.with_file_name(format!("{stem}.invariants.csv"))
}
