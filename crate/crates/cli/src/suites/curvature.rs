//! Suites on the curvature bundle of Finsler metrics.

use finsler_core::finsler::{classify, curvature_bundle, CurvatureBundle, FinslerMetric, GridSpec, Tolerances};
use finsler_core::sampling::child_seed;
use finsler_core::tensor::{matrix_max_abs, max_abs, Tensor3};
use nalgebra::DVector;
use rayon::prelude::*;

use crate::config::SampleCounts;
use crate::model::NamedMetric;
use crate::report::{SuiteReport, Witness};

/// Bound on the Euler contractions, which mix several jet orders.
pub const EULER_TOLERANCE: f64 = 1e-8;
/// Fiber directions per base point in the curvature scans.
const DIRECTIONS: usize = 5;
/// Step of the fourth-order central differences of `g(x)`.
const CHRISTOFFEL_STEP: f64 = 1e-3;

#[derive(Debug, Clone, Default)]
struct Sup {
    value: f64,
    at: Option<(Vec<f64>, Vec<f64>)>,
}

impl Sup {
    fn absorb(&mut self, value: f64, x: &[f64], y: &[f64]) {
        if self.at.is_none() || value > self.value || value.is_nan() {
            self.value = value;
            self.at = Some((x.to_vec(), y.to_vec()));
        }
    }

    fn witness(&self) -> Option<Witness> {
        self.at.as_ref().map(|(x, y)| Witness::at(x, y))
    }
}

fn grid(m: &FinslerMetric, points: usize, seed: u64) -> Vec<(Vec<f64>, Vec<f64>)> {
    GridSpec {
        points,
        directions: DIRECTIONS,
        seed,
    }
    .samples(m)
}

/// Largest violation of the Euler-type contractions with `y`.
fn euler_contractions(c: &CurvatureBundle) -> f64 {
    let n = c.y.len();
    let y = &c.y;
    let yv = DVector::from_column_slice(y);
    let mut worst = (&c.n_conn * &yv - 2.0 * &c.spray).amax();
    worst = worst.max(c.j.dot(&yv).abs());
    worst = worst.max((&c.e * &yv).amax());
    worst = worst.max((c.hdtau.dot(&yv) - c.s).abs());
    for i in 0..n {
        for j in 0..n {
            let gy: f64 = (0..n).map(|k| c.gamma.get(i, j, k) * y[k]).sum();
            worst = worst.max((gy - c.n_conn[(i, j)]).abs());
            let ly: f64 = (0..n).map(|k| c.l.get(i, j, k) * y[k]).sum();
            worst = worst.max(ly.abs());
            for k in 0..n {
                let by: f64 = (0..n).map(|l| c.b.get(i, j, k, l) * y[l]).sum();
                let py: f64 = (0..n).map(|l| c.p.get(i, j, k, l) * y[l]).sum();
                worst = worst.max(by.abs()).max(py.abs());
            }
        }
    }
    worst
}

/// `max |Pⁱ_jkl − Pⁱ_kjl|`.
fn p_symmetry(c: &CurvatureBundle) -> f64 {
    let n = c.y.len();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    worst = worst.max((c.p.get(i, j, k, l) - c.p.get(i, k, j, l)).abs());
                }
            }
        }
    }
    worst
}

/// Defects of the symmetries of `B`, `L`, `Γ` and `E`.
fn bundle_symmetries(c: &CurvatureBundle) -> [f64; 4] {
    let n = c.y.len();
    let mut b: f64 = 0.0;
    let mut gamma: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                gamma = gamma.max((c.gamma.get(i, j, k) - c.gamma.get(i, k, j)).abs());
                for l in 0..n {
                    let v = c.b.get(i, j, k, l);
                    b = b
                        .max((v - c.b.get(i, k, j, l)).abs())
                        .max((v - c.b.get(i, l, k, j)).abs())
                        .max((v - c.b.get(i, j, l, k)).abs());
                }
            }
        }
    }
    let e = (&c.e - c.e.transpose()).amax();
    [b, c.l.symmetry_defect(), gamma, e]
}

/// Christoffel symbols of `g(x)` at fixed `y` by fourth-order central
/// differences; meaningful only where `g` does not depend on `y`.
pub(super) fn christoffel_oracle(m: &FinslerMetric, x: &[f64], y: &[f64]) -> Result<Tensor3, String> {
    let n = x.len();
    let g_at = |p: &[f64]| -> Result<nalgebra::DMatrix<f64>, String> {
        let t = m.fiber_norm(p).map_err(|e| e.to_string())?;
        t.tensors(y).map(|t| t.g).map_err(|e| e.to_string())
    };
    let g = g_at(x)?;
    let g_inv = g.clone().try_inverse().ok_or("singular g")?;
    let h = CHRISTOFFEL_STEP;
    let mut dg = Vec::with_capacity(n);
    for k in 0..n {
        let shifted = |s: f64| {
            let mut p = x.to_vec();
            p[k] += s;
            g_at(&p)
        };
        let (p1, m1, p2, m2) = (shifted(h)?, shifted(-h)?, shifted(2.0 * h)?, shifted(-2.0 * h)?);
        dg.push((8.0 * (p1 - m1) - (p2 - m2)) / (12.0 * h));
    }
    Ok(Tensor3::from_fn(n, |i, j, k| {
        (0..n)
            .map(|l| 0.5 * g_inv[(i, l)] * (dg[k][(l, j)] + dg[j][(l, k)] - dg[l][(j, k)]))
            .sum()
    }))
}

#[derive(Default)]
struct CurvatureScan {
    euler: Sup,
    p_symmetry: Sup,
    a: Sup,
    b: Sup,
    e: Sup,
    l: Sup,
    j: Sup,
    p: Sup,
    bundles: Vec<CurvatureBundle>,
}

fn scan(m: &FinslerMetric, samples: &[(Vec<f64>, Vec<f64>)]) -> Result<CurvatureScan, String> {
    let bundles: Vec<CurvatureBundle> = samples
        .par_iter()
        .map(|(x, y)| curvature_bundle(m, x, y))
        .collect::<Result<_, _>>()
        .map_err(|e| e.to_string())?;
    let mut s = CurvatureScan::default();
    for c in &bundles {
        let (x, y) = (&c.x, &c.y);
        s.euler.absorb(euler_contractions(c), x, y);
        s.p_symmetry.absorb(p_symmetry(c), x, y);
        s.a.absorb(c.a.max_abs(), x, y);
        s.b.absorb(c.b.max_abs(), x, y);
        s.e.absorb(matrix_max_abs(&c.e), x, y);
        s.l.absorb(c.l.max_abs(), x, y);
        s.j.absorb(max_abs(c.j.as_slice()), x, y);
        s.p.absorb(c.p.max_abs(), x, y);
    }
    s.bundles = bundles;
    Ok(s)
}

/// Euler contractions and `P` symmetry on every target; on Riemannian
/// targets (vanishing Cartan tensor) also vanishing non-Riemannian curvature
/// and agreement of Chern coefficients with Christoffel symbols of `g(x)`.
pub fn curvature(report: &mut SuiteReport, targets: &[NamedMetric], samples: &SampleCounts) {
    let tol = report.tolerance;
    for (k, t) in targets.iter().enumerate() {
        let id = t.id.as_str();
        let pts = grid(&t.metric, samples.points, child_seed(report.seed, k as u64));
        let s = match scan(&t.metric, &pts) {
            Ok(s) => s,
            Err(e) => {
                report.error(id, "curvature bundle", e);
                continue;
            }
        };
        report.at_most(id, "Euler contractions", s.euler.value, EULER_TOLERANCE, s.euler.witness());
        report.at_most(id, "|P^i_jkl - P^i_kjl|", s.p_symmetry.value, 1e-10, s.p_symmetry.witness());
        let riemannian = s.a.value <= tol;
        report.calibrate(format!("{id}/sup_A"), s.a.value);
        if !riemannian {
            continue;
        }
        for (name, sup) in [("|B|", &s.b), ("|E|", &s.e), ("|L|", &s.l), ("|J|", &s.j), ("|P|", &s.p)] {
            report.at_most(id, &format!("{name} (Riemannian)"), sup.value, tol, sup.witness());
        }
        let oracle: Vec<Result<f64, String>> = s
            .bundles
            .par_iter()
            .map(|c| {
                let g = christoffel_oracle(&t.metric, &c.x, &c.y)?;
                Ok(g.data.iter().zip(&c.gamma.data).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
            })
            .collect();
        let mut worst = Sup::default();
        for (c, r) in s.bundles.iter().zip(oracle) {
            match r {
                Ok(v) => worst.absorb(v, &c.x, &c.y),
                Err(e) => {
                    report.error(id, "christoffel oracle", e);
                    break;
                }
            }
        }
        report.at_most(id, "|Gamma - Christoffel(g)|", worst.value, tol, worst.witness());
    }
}

pub fn bianchi_symmetry(report: &mut SuiteReport, targets: &[NamedMetric], samples: &SampleCounts) {
    let tol = report.tolerance;
    for (k, t) in targets.iter().enumerate() {
        let id = t.id.as_str();
        let pts = grid(&t.metric, samples.points, child_seed(report.seed, k as u64));
        let s = match scan(&t.metric, &pts) {
            Ok(s) => s,
            Err(e) => {
                report.error(id, "curvature bundle", e);
                continue;
            }
        };
        let mut sups = [(); 4].map(|_| Sup::default());
        for c in &s.bundles {
            for (sup, v) in sups.iter_mut().zip(bundle_symmetries(c)) {
                sup.absorb(v, &c.x, &c.y);
            }
        }
        report.at_most(id, "|P^i_jkl - P^i_kjl|", s.p_symmetry.value, tol, s.p_symmetry.witness());
        let names = ["B symmetry in (j,k,l)", "L symmetry", "Gamma symmetry in (j,k)", "E symmetry"];
        for (name, sup) in names.iter().zip(&sups) {
            report.at_most(id, name, sup.value, tol, sup.witness());
        }
    }
}

fn classify_all(
    report: &SuiteReport,
    targets: &[NamedMetric],
    samples: &SampleCounts,
    absolute: Option<f64>,
) -> Vec<Result<finsler_core::finsler::ClassificationReport, String>> {
    let tol = Tolerances {
        relative: report.tolerance,
        absolute,
    };
    targets
        .iter()
        .enumerate()
        .map(|(k, t)| {
            let spec = GridSpec {
                points: samples.points,
                directions: 10,
                seed: child_seed(report.seed, k as u64),
            };
            classify(&t.metric, &spec, &tol).map_err(|e| e.to_string())
        })
        .collect()
}

fn witness(w: &finsler_core::finsler::Witness) -> Option<Witness> {
    Some(Witness::at(&w.x, &w.y))
}

/// Every target must be Berwald: `sup |B|` at or below the threshold.
pub fn berwald(report: &mut SuiteReport, targets: &[NamedMetric], samples: &SampleCounts, absolute: Option<f64>) {
    for (t, r) in targets.iter().zip(classify_all(report, targets, samples, absolute)) {
        match r {
            Ok(c) => {
                report.calibrate(format!("{}/g_scale", t.id), c.g_scale);
                report.at_most(&t.id, "sup |B|", c.berwald.value, c.threshold, witness(&c.berwald));
            }
            Err(e) => report.error(&t.id, "classification", e),
        }
    }
}

/// Every target must be Landsberg: `sup |L|` at or below the threshold.
pub fn landsberg(report: &mut SuiteReport, targets: &[NamedMetric], samples: &SampleCounts, absolute: Option<f64>) {
    for (t, r) in targets.iter().zip(classify_all(report, targets, samples, absolute)) {
        match r {
            Ok(c) => {
                report.calibrate(format!("{}/g_scale", t.id), c.g_scale);
                report.at_most(&t.id, "sup |L|", c.landsberg.value, c.threshold, witness(&c.landsberg));
            }
            Err(e) => report.error(&t.id, "classification", e),
        }
    }
}

/// No target may look Landsberg with vanishing mean Berwald curvature while
/// failing to be Berwald. Candidates are reported as findings.
pub fn theorem11(report: &mut SuiteReport, targets: &[NamedMetric], samples: &SampleCounts, absolute: Option<f64>) {
    let mut candidates = 0usize;
    for (t, r) in targets.iter().zip(classify_all(report, targets, samples, absolute)) {
        let id = t.id.as_str();
        match r {
            Ok(c) => {
                for (key, flag) in [
                    ("riemannian", c.riemannian),
                    ("berwald", c.is_berwald),
                    ("landsberg", c.is_landsberg),
                    ("weak_landsberg", c.is_weak_landsberg),
                ] {
                    report.calibrate(format!("{id}/{key}"), f64::from(u8::from(flag)));
                }
                for w in &c.unicorn_candidates {
                    report.finding(
                        id,
                        "unicorn-candidate",
                        format!("|L| and |E| below 1e-8 with |B| = {:.3e}", w.value),
                        Some(Witness::at(&w.x, &w.y)),
                    );
                }
                candidates += c.unicorn_candidates.len();
                let mismatch = usize::from(!c.consistent);
                report.agrees(
                    id,
                    "Landsberg with E = 0 implies Berwald",
                    mismatch,
                    Some(Witness::note(format!(
                        "sup|L| = {:.3e}, sup|E| = {:.3e}, sup|B| = {:.3e}",
                        c.landsberg.value, c.mean_berwald.value, c.berwald.value
                    ))),
                );
            }
            Err(e) => report.error(id, "classification", e),
        }
    }
    report.calibrate("unicorn_candidates", candidates as f64);
}
