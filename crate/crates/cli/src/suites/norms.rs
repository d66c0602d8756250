//! Suites on single Minkowski norms.

use finsler_core::indicatrix::{
    best_fit_q, blaschke_deicke_residual, CentroaffineData, cartan_sign_report, centroaffine_data, equivalence_solve,
    indicatrix_point, induced_metric, induced_metric_angular, induced_metric_gauss, semi_c_residual,
    synthetic_semi_c, tchebychev_from_trace, tchebychev_from_volume, tensor_norm_sq, vector_norm_sq,
    EquivalenceOptions, ZERO_TCHEBYCHEV,
};
use finsler_core::jets::{default_step, fd_oracle, MultiIndex};
use finsler_core::minkowski::{check_minkowski, MinkowskiNorm, NormError};
use finsler_core::sampling::{self, child_seed};
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rayon::prelude::*;

use crate::config::SampleCounts;
use crate::model::{norm_id, NamedNorm};
use crate::report::{SuiteReport, Witness};

/// Agreement required between jets and finite differences.
pub const FD_TOLERANCE: f64 = 1e-5;
/// Agreement required between the three Tchebychev routes.
pub const TCHEBYCHEV_ROUTES: f64 = 1e-4;
/// "Clearly nonzero" for the non-equivalence and non-Euclidean references.
pub const CLEARLY_NONZERO: f64 = 1e-2;
/// Directions per norm in the indicatrix suites.
const INDICATRIX_POINTS: usize = 50;

/// Running maximum with the direction where it was attained.
#[derive(Debug, Clone, Default)]
struct Sup {
    value: f64,
    at: Option<Vec<f64>>,
}

impl Sup {
    fn absorb(&mut self, value: f64, y: &[f64]) {
        if self.at.is_none() || value > self.value || value.is_nan() {
            self.value = value;
            self.at = Some(y.to_vec());
        }
    }

    fn witness(&self) -> Option<Witness> {
        self.at.as_deref().map(Witness::fiber)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| p * q).sum()
}

fn target_seed(report: &SuiteReport, index: usize) -> u64 {
    child_seed(report.seed, index as u64)
}

#[derive(Default)]
struct IdentityScan {
    contraction_a: Sup,
    symmetry_a: Sup,
    contraction_eta: Sup,
    eta_routes: Sup,
    euler_g: Sup,
    fd_gradient: Sup,
    fd_hessian: Sup,
}

fn scan_identities(norm: &MinkowskiNorm, dirs: &[Vec<f64>]) -> Result<IdentityScan, NormError> {
    let n = norm.dimension();
    let gauge = norm.gauge();
    let mut s = IdentityScan::default();
    for (k, y) in dirs.iter().enumerate() {
        let t = norm.tensors(y)?;
        let mut ay: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                let c: f64 = (0..n).map(|l| t.a.get(i, j, l) * y[l]).sum();
                ay = ay.max(c.abs());
            }
        }
        s.contraction_a.absorb(ay, y);
        s.symmetry_a.absorb(t.a.symmetry_defect(), y);
        s.contraction_eta.absorb(dot(t.eta.as_slice(), y).abs(), y);
        s.eta_routes.absorb((&t.eta - &t.eta_trace).amax(), y);
        let gy = &t.g * DVector::from_column_slice(y);
        s.euler_g.absorb((gy - &t.df * t.f).amax(), y);
        // finite differences on a subset; g = dF dFᵀ + F ∂²F
        if k < 20 {
            let mut grad: f64 = 0.0;
            let mut hess: f64 = 0.0;
            for i in 0..n {
                let step1 = default_step(y, 1);
                let di = fd_oracle(&**gauge, y, &MultiIndex::from_vars(n, &[i]), step1)?.value;
                grad = grad.max((di - t.df[i]).abs());
                for j in i..n {
                    let step2 = default_step(y, 2);
                    let dij = fd_oracle(&**gauge, y, &MultiIndex::from_vars(n, &[i, j]), step2)?.value;
                    let g_fd = t.df[i] * t.df[j] + t.f * dij;
                    hess = hess.max((g_fd - t.g[(i, j)]).abs());
                }
            }
            s.fd_gradient.absorb(grad, y);
            s.fd_hessian.absorb(hess, y);
        }
    }
    Ok(s)
}

pub fn minkowski_identities(report: &mut SuiteReport, targets: &[NamedNorm], samples: &SampleCounts) {
    let tol = report.tolerance;
    let results: Vec<_> = targets
        .par_iter()
        .enumerate()
        .map(|(k, t)| {
            let dirs = sampling::directions(t.norm.dimension(), samples.directions, target_seed(report, k));
            let check = check_minkowski(&t.norm, &dirs, tol);
            (check, scan_identities(&t.norm, &dirs))
        })
        .collect();
    for (t, (check, scan)) in targets.iter().zip(results) {
        let id = t.id.as_str();
        report.at_most(id, "homogeneity |F(2y) - 2F(y)|", check.homogeneity, tol, None);
        report.at_most(id, "euler |F_i y^i - F|", check.euler, tol, None);
        report.at_most(id, "evaluation failures", check.failures as f64, 0.0, None);
        report.exceeds(
            id,
            "min eigenvalue of g",
            check.min_eigenvalue,
            0.0,
            Some(Witness::fiber(&check.witness)),
        );
        match scan {
            Ok(s) => {
                report.at_most(id, "|A_ijk y^k|", s.contraction_a.value, tol, s.contraction_a.witness());
                report.at_most(id, "A symmetry defect", s.symmetry_a.value, tol, s.symmetry_a.witness());
                report.at_most(id, "|eta_i y^i|", s.contraction_eta.value, tol, s.contraction_eta.witness());
                report.at_most(id, "|eta - g^jk A_ijk / F|", s.eta_routes.value, tol, s.eta_routes.witness());
                report.at_most(id, "|g_ij y^j - F F_i|", s.euler_g.value, tol, s.euler_g.witness());
                report.at_most(id, "|F_i - FD|", s.fd_gradient.value, FD_TOLERANCE, s.fd_gradient.witness());
                report.at_most(id, "|g_ij - FD|", s.fd_hessian.value, FD_TOLERANCE, s.fd_hessian.witness());
                report.calibrate(format!("{id}/fd_hessian_error"), s.fd_hessian.value);
            }
            Err(e) => report.error(id, "tensor evaluation", e),
        }
    }
}

#[derive(Default)]
struct CentroaffineScan {
    angular: Sup,
    gauss: Sup,
    trace_route: Sup,
    volume_route: Sup,
    matsumoto: Sup,
}

fn scan_centroaffine(norm: &MinkowskiNorm, dirs: &[Vec<f64>]) -> Result<CentroaffineScan, NormError> {
    let mut s = CentroaffineScan::default();
    for u in dirs {
        let p = indicatrix_point(norm, u)?;
        let h = induced_metric(&p);
        s.angular.absorb((&h - induced_metric_angular(&p)).amax(), u);
        s.gauss.absorb((&h - induced_metric_gauss(norm, &p)?).amax(), u);
        let d = centroaffine_data(&p);
        s.trace_route.absorb((&d.t - tchebychev_from_trace(&d.h, &d.c)).amax(), u);
        s.volume_route.absorb((&d.t - tchebychev_from_volume(norm, &p, 1e-3)?).amax(), u);
        if norm.label() == "randers" {
            let r = semi_c_residual(&d, 2.0).unwrap_or(f64::INFINITY);
            s.matsumoto.absorb(r, u);
        }
    }
    Ok(s)
}

/// `‖C‖² = (n−1)²[3(n−2) + (q+1)²]/(n+q−1)² ‖T‖²` on synthetic cubic forms.
fn synthetic_identity(report: &mut SuiteReport, seed: u64) {
    let mut rng = sampling::rng(seed);
    for n in [4usize, 5] {
        let m = n - 1;
        let h = DMatrix::identity(m, m);
        for q in [2.0, 0.5, -1.0] {
            let t: Vec<f64> = (0..m).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let c = synthetic_semi_c(&t, q);
            let lhs = tensor_norm_sq(&c, &h);
            let nf = n as f64;
            let t2 = vector_norm_sq(&DVector::from_column_slice(&t), &h);
            let rhs = (nf - 1.0).powi(2) * (3.0 * (nf - 2.0) + (q + 1.0).powi(2)) / (nf + q - 1.0).powi(2) * t2;
            report.at_most(
                &format!("synthetic/n={n}/q={q}"),
                "relative error of |C|^2 formula",
                (lhs - rhs).abs() / rhs,
                1e-12,
                None,
            );
        }
    }
}

pub fn centroaffine(report: &mut SuiteReport, targets: &[NamedNorm], samples: &SampleCounts) {
    let tol = report.tolerance;
    let count = samples.directions.min(INDICATRIX_POINTS);
    let results: Vec<_> = targets
        .par_iter()
        .enumerate()
        .map(|(k, t)| {
            let dirs = sampling::directions(t.norm.dimension(), count, target_seed(report, k));
            scan_centroaffine(&t.norm, &dirs)
        })
        .collect();
    for (t, scan) in targets.iter().zip(results) {
        let id = t.id.as_str();
        match scan {
            Ok(s) => {
                report.at_most(id, "|h - h(angular)|", s.angular.value, tol, s.angular.witness());
                report.at_most(id, "|h - h(gauss)|", s.gauss.value, tol, s.gauss.witness());
                report.at_most(id, "|T - T(trace)|", s.trace_route.value, TCHEBYCHEV_ROUTES, s.trace_route.witness());
                report.at_most(id, "|T - T(volume)|", s.volume_route.value, TCHEBYCHEV_ROUTES, s.volume_route.witness());
                if t.norm.label() == "randers" {
                    report.at_most(id, "|M^2| (Matsumoto)", s.matsumoto.value, 1e-8, s.matsumoto.witness());
                }
            }
            Err(e) => report.error(id, "indicatrix evaluation", e),
        }
    }
    synthetic_identity(report, child_seed(report.seed, u64::MAX));
}

struct SemiCScan {
    /// Best-fit `q` at points with nonzero Tchebychev form.
    fitted: Vec<f64>,
    data: Vec<(Vec<f64>, CentroaffineData)>,
}

impl SemiCScan {
    fn residual_at(&self, q: f64) -> Sup {
        let mut sup = Sup::default();
        for (u, d) in &self.data {
            sup.absorb(semi_c_residual(d, q).unwrap_or(f64::INFINITY), u);
        }
        sup
    }
}

fn scan_semi_c(norm: &MinkowskiNorm, dirs: &[Vec<f64>]) -> Result<SemiCScan, NormError> {
    let mut data = Vec::with_capacity(dirs.len());
    let mut fitted = Vec::new();
    for u in dirs {
        let d = centroaffine_data(&indicatrix_point(norm, u)?);
        if vector_norm_sq(&d.t, &d.h).sqrt() >= ZERO_TCHEBYCHEV {
            fitted.push(best_fit_q(&d).q);
        }
        data.push((u.clone(), d));
    }
    Ok(SemiCScan { fitted, data })
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let k = values.len();
    if k % 2 == 1 {
        values[k / 2]
    } else {
        0.5 * (values[k / 2 - 1] + values[k / 2])
    }
}

/// Each target is semi-C-reducible with a single `q`: the median of the
/// per-point best fits must annihilate `M^q` everywhere.
pub fn semi_c(report: &mut SuiteReport, targets: &[NamedNorm], samples: &SampleCounts) {
    let tol = report.tolerance;
    let count = samples.directions.min(INDICATRIX_POINTS);
    let results: Vec<_> = targets
        .par_iter()
        .enumerate()
        .map(|(k, t)| {
            let dirs = sampling::directions(t.norm.dimension(), count, target_seed(report, k));
            scan_semi_c(&t.norm, &dirs)
        })
        .collect();
    for (t, scan) in targets.iter().zip(results) {
        let id = t.id.as_str();
        let mut s = match scan {
            Ok(s) => s,
            Err(e) => {
                report.error(id, "indicatrix evaluation", e);
                continue;
            }
        };
        if t.norm.dimension() == 2 {
            report.finding(
                id,
                "trivial-dimension",
                "M^q vanishes identically for n = 2; the semi-C condition carries no information",
                None,
            );
            continue;
        }
        let q = if s.fitted.is_empty() {
            // vanishing Tchebychev form everywhere: M^q = C for every q
            2.0
        } else {
            let (lo, hi) = s.fitted.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
            report.calibrate(format!("{id}/q_min"), lo);
            report.calibrate(format!("{id}/q_max"), hi);
            median(&mut s.fitted)
        };
        report.calibrate(format!("{id}/q"), q);
        let sup = s.residual_at(q);
        report.at_most(id, "sup |M^q| at the common q", sup.value, tol, sup.witness());
    }
}

pub fn equivalence(report: &mut SuiteReport, targets: &[NamedNorm], samples: &SampleCounts) {
    let tol = report.tolerance;
    let mut rng = sampling::rng(report.seed);
    let cases: Vec<(usize, DMatrix<f64>, u64)> = (0..samples.equivalence)
        .map(|k| {
            let base = &targets[k % targets.len()].norm;
            let l0 = sampling::matrix_with_condition(&mut rng, base.dimension(), 5.0);
            (k % targets.len(), l0, rng.gen())
        })
        .collect();
    let results: Vec<_> = cases
        .par_iter()
        .map(|(idx, l0, seed)| {
            let f1 = &targets[*idx].norm;
            let f2 = f1.linear_image(l0)?;
            let opts = EquivalenceOptions {
                seed: *seed,
                tol,
                ..EquivalenceOptions::default()
            };
            let res = equivalence_solve(f1, &f2, &opts)?;
            let dirs = sampling::directions(f1.dimension(), 16, *seed);
            let signs = cartan_sign_report(f1, &f2, &res.matrix, &dirs, 1e-6)?;
            Ok::<_, finsler_core::indicatrix::EquivalenceError>((res, signs))
        })
        .collect();
    let mut worst: f64 = 0.0;
    let mut most_restarts = 0;
    for (k, ((idx, l0, _), r)) in cases.iter().zip(results).enumerate() {
        let id = format!("{}/case{k}", targets[*idx].id);
        match r {
            Ok((res, signs)) => {
                let cond = {
                    let s = l0.clone().singular_values();
                    s.max() / s.min()
                };
                report.calibrate(format!("{id}/cond"), cond);
                report.calibrate(format!("{id}/restarts"), res.restarts_used as f64);
                if signs.mixed {
                    report.finding(
                        &id,
                        "mixed-cartan-sign",
                        "recovered map matches A with both signs on different samples",
                        None,
                    );
                }
                worst = worst.max(res.residual);
                most_restarts = most_restarts.max(res.restarts_used);
                report.at_most(&id, "sup residual", res.residual, tol, None);
            }
            Err(e) => report.error(&id, "equivalence solve", e),
        }
    }
    report.calibrate("worst_residual", worst);
    report.calibrate("max_restarts", most_restarts as f64);

    let e = MinkowskiNorm::euclidean(2);
    let r = MinkowskiNorm::randers(vec![0.5, 0.0]).expect("valid drift");
    let id = format!("reference/{} vs {}", norm_id(&e), norm_id(&r));
    let opts = EquivalenceOptions {
        seed: report.seed,
        tol,
        ..EquivalenceOptions::default()
    };
    match equivalence_solve(&e, &r, &opts) {
        Ok(res) => {
            report.calibrate("non_equivalent_best_residual", res.residual);
            report.exceeds(&id, "best residual (non-equivalent)", res.residual, CLEARLY_NONZERO, None);
        }
        Err(err) => report.error(&id, "equivalence solve", err),
    }
}

fn blaschke_deicke_values(norm: &MinkowskiNorm, count: usize, seed: u64) -> Result<(f64, f64), String> {
    let dirs = sampling::directions(norm.dimension(), count, seed);
    blaschke_deicke_residual(norm, &dirs)
        .map(|b| (b.sup_eta, b.fit_residual))
        .map_err(|e| e.to_string())
}

/// Per target, `sup ‖η‖` and the quadratic-fit residual must agree on
/// whether the norm is Euclidean; fixed references pin down both outcomes.
pub fn blaschke_deicke(report: &mut SuiteReport, targets: &[NamedNorm], samples: &SampleCounts) {
    let tol = report.tolerance;
    let count = samples.directions;
    let results: Vec<_> = targets
        .par_iter()
        .enumerate()
        .map(|(k, t)| blaschke_deicke_values(&t.norm, count, target_seed(report, k)))
        .collect();
    for (t, r) in targets.iter().zip(results) {
        let id = t.id.as_str();
        match r {
            Ok((eta, fit)) => {
                report.calibrate(format!("{id}/sup_eta"), eta);
                report.calibrate(format!("{id}/fit_residual"), fit);
                let euclidean = eta <= tol && fit <= tol;
                let non_euclidean = eta > CLEARLY_NONZERO && fit > CLEARLY_NONZERO;
                let note = format!("sup|eta| = {eta:.3e}, fit residual = {fit:.3e}");
                report.agrees(
                    id,
                    "eta and quadratic fit agree on Euclidean-ness",
                    usize::from(!(euclidean || non_euclidean)),
                    Some(Witness::note(note)),
                );
            }
            Err(e) => report.error(id, "blaschke-deicke", e),
        }
    }

    let l0 = DMatrix::from_row_slice(3, 3, &[2.0, 0.3, 0.0, 0.0, 1.0, 0.2, 0.1, 0.0, 1.5]);
    let euclid = MinkowskiNorm::euclidean(3);
    let image = euclid.linear_image(&l0).expect("invertible");
    let randers = MinkowskiNorm::randers(vec![0.5, 0.0]).expect("valid drift");
    let references = [(euclid, false), (image, false), (randers, true)];
    for (k, (norm, expect_large)) in references.iter().enumerate() {
        let id = format!("reference/{}", norm_id(norm));
        match blaschke_deicke_values(norm, count, child_seed(report.seed, 1000 + k as u64)) {
            Ok((eta, fit)) => {
                if *expect_large {
                    report.exceeds(&id, "sup |eta|", eta, CLEARLY_NONZERO, None);
                    report.exceeds(&id, "quadratic fit residual", fit, CLEARLY_NONZERO, None);
                } else {
                    report.at_most(&id, "sup |eta|", eta, tol, None);
                    report.at_most(&id, "quadratic fit residual", fit, tol, None);
                }
            }
            Err(e) => report.error(&id, "blaschke-deicke", e),
        }
    }
}
