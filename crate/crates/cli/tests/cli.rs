use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use finsler_core::minkowski::MinkowskiNorm;
use serde_json::Value;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn finsler(out_dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_finsler"))
        .args(args)
        .env("FINSLER_OUT_DIR", out_dir)
        .output()
        .expect("binary runs")
}

fn stdout_json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&o.stdout)))
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn valid_config_passes_and_writes_report() {
    let dir = tempfile::tempdir().unwrap();
    let o = finsler(dir.path(), &["run", fixture("valid.json").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    let r = read_json(&dir.path().join("valid-report.json"));
    assert_eq!(r["passed"], Value::Bool(true));
    assert_eq!(r["schema_version"], 1);
    let suites = r["suites"].as_array().unwrap();
    assert_eq!(suites.len(), 2);
    assert!(suites.iter().all(|s| s["passed"] == Value::Bool(true)));
    assert!(suites[1]["integrator"]["transports"].as_u64().unwrap() >= 20);
}

#[test]
fn unknown_metric_is_a_config_error_naming_the_key() {
    let dir = tempfile::tempdir().unwrap();
    let o = finsler(dir.path(), &["run", fixture("invalid.json").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("metrics[0].name"), "{err}");
    assert!(!dir.path().join("invalid-report.json").exists());
}

#[test]
fn non_berwald_randers_fails_with_witness() {
    let dir = tempfile::tempdir().unwrap();
    let o = finsler(dir.path(), &["run", fixture("failing.json").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let r = read_json(&dir.path().join("failing-report.json"));
    assert_eq!(r["passed"], Value::Bool(false));
    let check = r["suites"][0]["checks"]
        .as_array()
        .unwrap()
        .iter()
        .find(|c| c["passed"] == Value::Bool(false))
        .expect("a failed check");
    assert!(check["value"].as_f64().unwrap() > check["bound"].as_f64().unwrap());
    assert_eq!(check["witness"]["x"].as_array().unwrap().len(), 2);
    assert_eq!(check["witness"]["y"].as_array().unwrap().len(), 2);
}

#[test]
fn missing_config_file_is_an_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = finsler(dir.path(), &["run", "/nonexistent/config.json"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn bad_flags_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(finsler(dir.path(), &["classify"]).status.code(), Some(2));
    assert_eq!(finsler(dir.path(), &["verify", "--suite", "nope"]).status.code(), Some(2));
    assert_eq!(
        finsler(dir.path(), &["invariants", "--metric", "euclidean", "--y", "1,0"]).status.code(),
        Some(2)
    );
}

#[test]
fn catalog_lists_builtins() {
    let dir = tempfile::tempdir().unwrap();
    let o = finsler(dir.path(), &["catalog"]);
    assert_eq!(o.status.code(), Some(0));
    let text = String::from_utf8_lossy(&o.stdout);
    for name in ["randers", "quartic-smoothed", "riemannian-hyperbolic", "co-occurrence"] {
        assert!(text.contains(name), "{name}");
    }
}

fn all_zero(v: &Value) -> bool {
    match v {
        Value::Array(a) => a.iter().all(all_zero),
        Value::Number(n) => n.as_f64() == Some(0.0),
        _ => false,
    }
}

#[test]
fn euclidean_invariants_vanish() {
    let dir = tempfile::tempdir().unwrap();
    let o = finsler(
        dir.path(),
        &["invariants", "--metric", "euclidean", "--x", "0,0,0", "--y", "1,0,0"],
    );
    assert_eq!(o.status.code(), Some(0));
    let j = stdout_json(&o);
    for key in ["G", "B", "L", "tau", "S", "A", "E", "P"] {
        assert!(all_zero(&j[key]), "{key} = {}", j[key]);
    }
    assert_eq!(j["F"], 1.0);
}

#[test]
fn equiv_recovers_a_linear_image_and_rejects_randers() {
    let dir = tempfile::tempdir().unwrap();
    let o = finsler(
        dir.path(),
        &["equiv", "--norm1", "euclidean", "--norm2", "linear-image:2,0,0,1", "--dim", "2"],
    );
    assert_eq!(o.status.code(), Some(0));
    let j = stdout_json(&o);
    assert!(j["residual"].as_f64().unwrap() < 1e-6);
    let o = finsler(
        dir.path(),
        &["equiv", "--norm1", "euclidean", "--norm2", "randers:0.5,0", "--dim", "2"],
    );
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout_json(&o)["residual"].as_f64().unwrap() > 1e-2);
}

#[test]
fn classify_reports_randers_hyperbolic() {
    let dir = tempfile::tempdir().unwrap();
    let o = finsler(
        dir.path(),
        &["classify", "--metric", "randers-hyperbolic:0.3,0", "--samples", "4"],
    );
    assert_eq!(o.status.code(), Some(0));
    let j = stdout_json(&o);
    assert_eq!(j["riemannian"], Value::Bool(false));
    assert_eq!(j["is_berwald"], Value::Bool(false));
    assert_eq!(j["consistent"], Value::Bool(true));
}

#[test]
fn transport_writes_trajectory_csv() {
    let dir = tempfile::tempdir().unwrap();
    let o = finsler(
        dir.path(),
        &[
            "transport",
            "--metric",
            "riemannian-hyperbolic",
            "--dim",
            "2",
            "--from",
            "-0.5,0",
            "--to",
            "0.5,0.3",
            "--y0",
            "1,0.5",
            "--out",
            "path.csv",
        ],
    );
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(dir.path().join("path.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("t,y1,y2,F,drift"));
    let rows: Vec<Vec<f64>> = lines
        .map(|l| l.split(',').map(|c| c.parse().unwrap()).collect())
        .collect();
    assert!(rows.len() > 2);
    assert_eq!(rows[0][0], 0.0);
    assert!((rows.last().unwrap()[0] - 1.0).abs() < 1e-12);
    assert!(stdout_json(&o)["relative_drift"].as_f64().unwrap() <= 1e-8);
}

#[test]
fn transport_accepts_curve_json() {
    let dir = tempfile::tempdir().unwrap();
    let curve = r#"{"kind": "chain", "points": [[0, 0], [0.3, 0.2], [-0.2, 0.4]]}"#;
    let o = finsler(
        dir.path(),
        &["transport", "--metric", "euclidean", "--dim", "2", "--curve", curve, "--y0", "1,2"],
    );
    assert_eq!(o.status.code(), Some(0));
    let csv = String::from_utf8_lossy(&o.stdout);
    let last: Vec<f64> = csv.lines().last().unwrap().split(',').map(|c| c.parse().unwrap()).collect();
    assert_eq!(&last[1..3], &[1.0, 2.0]);
}

fn obj_vertices(path: &Path) -> Vec<Vec<f64>> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter_map(|l| l.strip_prefix("v "))
        .map(|l| l.split_whitespace().map(|c| c.parse().unwrap()).collect())
        .collect()
}

#[test]
fn export_euclidean_mesh_is_the_unit_sphere() {
    let dir = tempfile::tempdir().unwrap();
    let o = finsler(
        dir.path(),
        &["export", "--norm", "euclidean", "--dim", "3", "--resolution", "2", "--out", "sphere.obj"],
    );
    assert_eq!(o.status.code(), Some(0));
    let v = obj_vertices(&dir.path().join("sphere.obj"));
    assert_eq!(v.len(), 162);
    for p in &v {
        let r = p.iter().map(|c| c * c).sum::<f64>().sqrt();
        assert!((r - 1.0).abs() < 1e-12);
    }
    let table = std::fs::read_to_string(dir.path().join("sphere.invariants.csv")).unwrap();
    assert_eq!(table.lines().count(), 163);
}

#[test]
fn export_randers_mesh_is_an_off_center_indicatrix() {
    let dir = tempfile::tempdir().unwrap();
    let o = finsler(
        dir.path(),
        &["export", "--norm", "randers:0.5,0,0", "--resolution", "2", "--out", "randers.obj"],
    );
    assert_eq!(o.status.code(), Some(0));
    let f = MinkowskiNorm::randers(vec![0.5, 0.0, 0.0]).unwrap();
    let v = obj_vertices(&dir.path().join("randers.obj"));
    for p in &v {
        assert!((f.eval(p).unwrap() - 1.0).abs() < 1e-10);
    }
    let cx = v.iter().map(|p| p[0]).sum::<f64>() / v.len() as f64;
    assert!(cx < -0.1, "centroid x = {cx}");
}

#[test]
fn export_polyline_in_the_plane() {
    let dir = tempfile::tempdir().unwrap();
    let o = finsler(
        dir.path(),
        &["export", "--norm", "quartic-smoothed", "--dim", "2", "--resolution", "1", "--out", "curve.csv"],
    );
    assert_eq!(o.status.code(), Some(0));
    let csv = std::fs::read_to_string(dir.path().join("curve.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 16 + 1);
    assert!(dir.path().join("curve.invariants.csv").exists());
}

#[test]
fn export_geometry_in_five_dimensions_suggests_a_table() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["export", "--norm", "euclidean", "--dim", "5", "--out", "e5.obj"];
    let o = finsler(dir.path(), &args);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("--format table"));
    let o = finsler(
        dir.path(),
        &["export", "--norm", "euclidean", "--dim", "5", "--format", "table", "--samples", "20", "--out", "e5.csv"],
    );
    assert_eq!(o.status.code(), Some(0));
    let table = std::fs::read_to_string(dir.path().join("e5.csv")).unwrap();
    assert_eq!(table.lines().count(), 21);
    assert!(table.starts_with("index,v1,v2,v3,v4,v5,cubic_norm"));
}

#[test]
fn verify_writes_a_suite_report() {
    let dir = tempfile::tempdir().unwrap();
    let o = finsler(
        dir.path(),
        &["verify", "--suite", "berwald", "--metric", "randers-berwald-product", "--samples", "4", "--report", "b.json"],
    );
    assert_eq!(o.status.code(), Some(0));
    let r = read_json(&dir.path().join("b.json"));
    assert_eq!(r["name"], "berwald");
    assert_eq!(r["passed"], Value::Bool(true));
}
