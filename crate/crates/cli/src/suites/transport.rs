//! Suites on nonlinear parallel transport.

use finsler_core::finsler::{berwald_curvature, curvature_bundle, Domain, FinslerMetric, UNICORN};
use finsler_core::sampling::{self, child_seed};
use finsler_core::tensor::{matrix_max_abs, Tensor3};
use finsler_core::transport::{
    linearity_residual, stability_rate, transport as run_transport, transport_batch, Curve, FiberTensor,
    TransportOptions,
};
use rand::Rng;
use rayon::prelude::*;

use super::curvature::christoffel_oracle;
use crate::config::SampleCounts;
use crate::model::NamedMetric;
use crate::report::{IntegratorSummary, SuiteReport, Witness};

pub const HOMOGENEITY_TOLERANCE: f64 = 1e-9;
pub const REVERSIBILITY_TOLERANCE: f64 = 1e-8;
pub const ORACLE_TOLERANCE: f64 = 1e-8;
/// Cases per metric that also get the homogeneity and reversal checks.
const DETAILED_CASES: usize = 10;
/// Cases per Riemannian metric compared against the linear-ODE oracle.
const ORACLE_CASES: usize = 5;
/// "Small" for curvature tensors in the co-occurrence verdicts, relative to `1 + |g|`.
const CURVATURE_SMALL: f64 = 1e-7;

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, c| m.max(c.abs()))
}

fn diff_norm(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (p, q)| m.max((p - q).abs()))
}

/// A random curve inside `inner`: segment, bent quadratic or two-piece chain.
fn random_curve(rng: &mut impl Rng, inner: &Domain, kind: usize) -> Curve {
    let p = sampling::point_in_box(rng, &inner.lo, &inner.hi);
    let q = sampling::point_in_box(rng, &inner.lo, &inner.hi);
    match kind % 3 {
        0 => Curve::segment(p, q),
        1 => {
            // σ(t) = p + t(q − p) + t(1 − t) w, shrinking w until it fits
            let half: Vec<f64> = inner.lo.iter().zip(&inner.hi).map(|(l, h)| 0.5 * (h - l)).collect();
            let mut w: Vec<f64> = half.iter().map(|s| rng.gen_range(-0.5..0.5) * s).collect();
            loop {
                let c = Curve::Polynomial {
                    coefficients: vec![
                        p.clone(),
                        p.iter().zip(&q).zip(&w).map(|((a, b), c)| b - a + c).collect(),
                        w.iter().map(|c| -c).collect(),
                    ],
                };
                if c.stays_inside(inner).is_ok() {
                    return c;
                }
                w.iter_mut().for_each(|c| *c *= 0.5);
            }
        }
        _ => {
            let r = sampling::point_in_box(rng, &inner.lo, &inner.hi);
            Curve::Chain { points: vec![p, q, r] }
        }
    }
}

/// Linear transport `ẏ = −Γ(σ)(σ̇, y)` with Christoffel symbols of `g(x)`,
/// by RK4 per smooth piece plus one Richardson step.
fn riemannian_oracle(m: &FinslerMetric, curve: &Curve, y0: &[f64]) -> Result<Vec<f64>, String> {
    let n = y0.len();
    let probe: Vec<f64> = (0..n).map(|i| if i == 0 { 1.0 } else { 0.0 }).collect();
    let chain = matches!(curve, Curve::Chain { .. });
    let rhs = |t: f64, mid: f64, y: &[f64]| -> Result<Vec<f64>, String> {
        let g: Tensor3 = christoffel_oracle(m, &curve.point(t), &probe)?;
        let v = curve.velocity(if chain { mid } else { t });
        Ok((0..n)
            .map(|i| {
                let mut s = 0.0;
                for j in 0..n {
                    for k in 0..n {
                        s += g.get(i, j, k) * v[j] * y[k];
                    }
                }
                -s
            })
            .collect())
    };
    let run = |steps: usize| -> Result<Vec<f64>, String> {
        let mut y = y0.to_vec();
        for w in curve.breakpoints().windows(2) {
            let (a, b) = (w[0], w[1]);
            let mid = 0.5 * (a + b);
            let h = (b - a) / steps as f64;
            for s in 0..steps {
                let t = a + s as f64 * h;
                let shift = |y: &[f64], k: &[f64], c: f64| -> Vec<f64> {
                    y.iter().zip(k).map(|(p, q)| p + c * h * q).collect()
                };
                let k1 = rhs(t, mid, &y)?;
                let k2 = rhs(t + 0.5 * h, mid, &shift(&y, &k1, 0.5))?;
                let k3 = rhs(t + 0.5 * h, mid, &shift(&y, &k2, 0.5))?;
                let k4 = rhs(t + h, mid, &shift(&y, &k3, 1.0))?;
                for i in 0..n {
                    y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
                }
            }
        }
        Ok(y)
    };
    let coarse = run(48)?;
    let fine = run(96)?;
    Ok(fine.iter().zip(&coarse).map(|(f, c)| (16.0 * f - c) / 15.0).collect())
}

fn is_riemannian(m: &FinslerMetric, points: &[Vec<f64>]) -> bool {
    let n = m.dimension();
    let dirs = sampling::directions(n, 8, 0);
    points.iter().all(|x| {
        m.fiber_norm(x).is_ok_and(|f| {
            dirs.iter()
                .all(|y| f.tensors(y).is_ok_and(|t| t.a.max_abs() <= 1e-10))
        })
    })
}

struct Case {
    curve: Curve,
    y0: Vec<f64>,
}

fn cases(m: &FinslerMetric, count: usize, seed: u64) -> Vec<Case> {
    let mut rng = sampling::rng(seed);
    let inner = m.domain().interior();
    (0..count)
        .map(|k| {
            let curve = random_curve(&mut rng, &inner, k);
            let scale = rng.gen_range(0.5..2.0);
            let y0 = sampling::unit_vector(&mut rng, m.dimension()).iter().map(|c| c * scale).collect();
            Case { curve, y0 }
        })
        .collect()
}

#[derive(Default)]
struct Worst {
    value: f64,
    witness: Option<Witness>,
}

impl Worst {
    fn absorb(&mut self, value: f64, case: &Case) {
        if self.witness.is_none() || value > self.value || value.is_nan() {
            self.value = value;
            self.witness = Some(Witness {
                x: Some(case.curve.point(0.0)),
                y: Some(case.y0.clone()),
                note: Some(format!("curve {}", serde_json::to_string(&case.curve).unwrap_or_default())),
            });
        }
    }
}

/// Norm preservation, homogeneity, reversibility and, on Riemannian
/// targets, agreement with an independent linear-ODE integration.
pub fn transport(report: &mut SuiteReport, targets: &[NamedMetric], samples: &SampleCounts) {
    let tol = report.tolerance;
    let opts = TransportOptions::default();
    let mut integrator = IntegratorSummary::default();
    for (k, t) in targets.iter().enumerate() {
        let id = t.id.as_str();
        let m = &t.metric;
        let cs = cases(m, samples.transport, child_seed(report.seed, k as u64));
        let items: Vec<(Curve, Vec<f64>)> = cs.iter().map(|c| (c.curve.clone(), c.y0.clone())).collect();
        let results = transport_batch(m, &items, 1.0, &opts);
        let mut drift = Worst::default();
        let mut ok = Vec::with_capacity(cs.len());
        for (c, r) in cs.iter().zip(results) {
            match r {
                Ok(r) => {
                    integrator.absorb(&r.stats, r.method);
                    drift.absorb(r.max_drift() / r.norms[0], c);
                    ok.push(Some(r.y));
                }
                Err(e) => {
                    report.error(id, "transport", e);
                    ok.push(None);
                }
            }
        }
        report.at_most(id, "relative norm drift", drift.value, tol, drift.witness);

        let detailed: Vec<(usize, &Case, &Vec<f64>)> = cs
            .iter()
            .zip(&ok)
            .enumerate()
            .filter_map(|(i, (c, y))| y.as_ref().map(|y| (i, c, y)))
            .take(DETAILED_CASES)
            .collect();
        let checks: Vec<Result<(f64, f64), String>> = detailed
            .par_iter()
            .map(|(_, c, y1)| {
                let mut hom: f64 = 0.0;
                for lambda in [0.5, 2.0, 10.0] {
                    let scaled: Vec<f64> = c.y0.iter().map(|v| lambda * v).collect();
                    let r = run_transport(m, &c.curve, &scaled, 1.0, &opts).map_err(|e| e.to_string())?;
                    let expected: Vec<f64> = y1.iter().map(|v| lambda * v).collect();
                    hom = hom.max(diff_norm(&r.y, &expected) / (lambda * inf_norm(y1).max(1.0)));
                }
                let back = run_transport(m, &c.curve.reversed(), y1, 1.0, &opts).map_err(|e| e.to_string())?;
                let rev = diff_norm(&back.y, &c.y0) / inf_norm(&c.y0).max(1.0);
                Ok((hom, rev))
            })
            .collect();
        let mut hom = Worst::default();
        let mut rev = Worst::default();
        for ((_, c, _), r) in detailed.iter().zip(checks) {
            match r {
                Ok((h, v)) => {
                    hom.absorb(h, c);
                    rev.absorb(v, c);
                }
                Err(e) => report.error(id, "transport", e),
            }
        }
        report.at_most(id, "homogeneity |P(ly) - l P(y)|", hom.value, HOMOGENEITY_TOLERANCE, hom.witness);
        report.at_most(id, "reversal |P_rev(P(y)) - y|", rev.value, REVERSIBILITY_TOLERANCE, rev.witness);

        let probes: Vec<Vec<f64>> = std::iter::once(m.domain().center())
            .chain(cs.iter().take(3).map(|c| c.curve.point(0.5)))
            .collect();
        if !is_riemannian(m, &probes) {
            continue;
        }
        let oracle: Vec<Result<f64, String>> = detailed
            .par_iter()
            .take(ORACLE_CASES)
            .map(|(_, c, y1)| {
                let expected = riemannian_oracle(m, &c.curve, &c.y0)?;
                Ok(diff_norm(y1, &expected) / inf_norm(&expected).max(1.0))
            })
            .collect();
        let mut worst = Worst::default();
        for ((_, c, _), r) in detailed.iter().zip(oracle) {
            match r {
                Ok(v) => worst.absorb(v, c),
                Err(e) => report.error(id, "linear-ODE oracle", e),
            }
        }
        report.at_most(id, "|P(y) - linear ODE oracle|", worst.value, ORACLE_TOLERANCE, worst.witness);
    }
    report.calibrate("max_local_error_estimate", integrator.max_error_estimate);
    report.integrator = Some(integrator);
}

/// Longest step `s ≤ 0.5` along `±d` from `x` staying inside `inner`,
/// with the sign giving more room.
fn ray_inside(inner: &Domain, x: &[f64], d: &[f64]) -> Vec<f64> {
    let room = |sign: f64| -> f64 {
        x.iter()
            .zip(d)
            .zip(inner.lo.iter().zip(&inner.hi))
            .map(|((&xi, &di), (&lo, &hi))| {
                let v = sign * di;
                if v > 0.0 {
                    (hi - xi) / v
                } else if v < 0.0 {
                    (lo - xi) / v
                } else {
                    f64::INFINITY
                }
            })
            .fold(f64::INFINITY, f64::min)
    };
    let (plus, minus) = (room(1.0), room(-1.0));
    let (sign, r) = if plus >= minus { (1.0, plus) } else { (-1.0, minus) };
    let s = (0.95 * r).min(0.5);
    d.iter().map(|c| sign * s * c).collect()
}

struct CoSample {
    x: Vec<f64>,
    y: Vec<f64>,
    l: f64,
    e: f64,
    b: f64,
    b_fiber: f64,
    small: f64,
    rate: f64,
    /// `|rate + 2 L(·,·,d) / F²|` relative to `1 + |rate|`.
    rate_defect: f64,
    linearity: f64,
}

fn co_sample(m: &FinslerMetric, x: Vec<f64>, y: Vec<f64>, d: Vec<f64>, fiber: Vec<Vec<f64>>) -> Result<CoSample, String> {
    let opts = TransportOptions::default();
    let c = curvature_bundle(m, &x, &y).map_err(|e| e.to_string())?;
    let small = CURVATURE_SMALL * (1.0 + matrix_max_abs(&c.g));
    let rate = stability_rate(m, &x, &y, &d, FiberTensor::GHat, &opts).map_err(|e| e.to_string())?;
    let n = x.len();
    let mut rate_defect: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            let ld: f64 = (0..n).map(|k| c.l.get(i, j, k) * d[k]).sum();
            rate_defect = rate_defect.max((rate[i * n + j] + 2.0 * ld / (c.f * c.f)).abs());
        }
    }
    let mut b_fiber = c.b.max_abs();
    for v in &fiber {
        b_fiber = b_fiber.max(berwald_curvature(m, &x, v).map_err(|e| e.to_string())?.max_abs());
    }
    let step = ray_inside(&m.domain().interior(), &x, &d);
    let curve = Curve::ray(&x, &step);
    let lin = linearity_residual(m, &curve, 1.0, &fiber, &opts).map_err(|e| e.to_string())?;
    Ok(CoSample {
        l: c.l.max_abs(),
        e: matrix_max_abs(&c.e),
        b: c.b.max_abs(),
        b_fiber,
        small,
        rate_defect: rate_defect / (1.0 + inf_norm(&rate)),
        rate: inf_norm(&rate),
        linearity: lin.residual.max(lin.additivity),
        x,
        y,
    })
}

/// Per sample, horizontal stability of `ĝ` must coincide with vanishing
/// Landsberg curvature, and linearity of transport with vanishing Berwald
/// curvature; Landsberg-not-Berwald candidates are flagged.
pub fn co_occurrence(report: &mut SuiteReport, targets: &[NamedMetric], samples: &SampleCounts) {
    let tol = report.tolerance;
    let mut flagged = 0usize;
    for (k, t) in targets.iter().enumerate() {
        let id = t.id.as_str();
        let m = &t.metric;
        let n = m.dimension();
        let mut rng = sampling::rng(child_seed(report.seed, k as u64));
        let inner = m.domain().interior();
        let inputs: Vec<_> = (0..samples.co_occurrence)
            .map(|_| {
                let x = sampling::point_in_box(&mut rng, &inner.lo, &inner.hi);
                let y = sampling::unit_vector(&mut rng, n);
                let d = sampling::unit_vector(&mut rng, n);
                let mut fiber = vec![y.clone()];
                fiber.extend((1..2 * n).map(|_| sampling::unit_vector(&mut rng, n)));
                (x, y, d, fiber)
            })
            .collect();
        let results: Vec<Result<CoSample, String>> = inputs
            .into_par_iter()
            .map(|(x, y, d, fiber)| co_sample(m, x, y, d, fiber))
            .collect();
        let mut rate_mismatch = (0usize, None);
        let mut lin_mismatch = (0usize, None);
        let mut margins = [f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY];
        let mut rate_defect: f64 = 0.0;
        for r in results {
            let s = match r {
                Ok(s) => s,
                Err(e) => {
                    report.error(id, "co-occurrence sample", e);
                    continue;
                }
            };
            rate_defect = rate_defect.max(s.rate_defect);
            let (l_zero, b_zero) = (s.l <= s.small, s.b_fiber <= s.small);
            let (rate_zero, lin_zero) = (s.rate <= tol, s.linearity <= tol);
            if l_zero {
                margins[1] = f64::max(margins[1], s.rate);
            } else {
                margins[0] = margins[0].min(s.rate);
            }
            if b_zero {
                margins[3] = f64::max(margins[3], s.linearity);
            } else {
                margins[2] = margins[2].min(s.linearity);
            }
            let note = |what: &str| {
                Some(Witness {
                    x: Some(s.x.clone()),
                    y: Some(s.y.clone()),
                    note: Some(format!(
                        "{what}: |L| = {:.3e}, |B| = {:.3e}, rate = {:.3e}, linearity = {:.3e}",
                        s.l, s.b_fiber, s.rate, s.linearity
                    )),
                })
            };
            if rate_zero != l_zero {
                rate_mismatch.0 += 1;
                rate_mismatch.1.get_or_insert_with(|| note("rate vs L"));
            }
            if lin_zero != b_zero {
                lin_mismatch.0 += 1;
                lin_mismatch.1.get_or_insert_with(|| note("linearity vs B"));
            }
            if s.l < UNICORN.0 && s.e < UNICORN.1 && s.b > UNICORN.2 {
                flagged += 1;
                report.finding(
                    id,
                    "unicorn-candidate",
                    format!("|L| = {:.3e}, |E| = {:.3e}, |B| = {:.3e}", s.l, s.e, s.b),
                    Some(Witness::at(&s.x, &s.y)),
                );
            }
        }
        report.agrees(id, "ghat-rate = 0 iff |L| = 0", rate_mismatch.0, rate_mismatch.1.flatten());
        report.agrees(id, "transport linear iff |B| = 0", lin_mismatch.0, lin_mismatch.1.flatten());
        let keys = ["min_rate_L_nonzero", "max_rate_L_zero", "min_linearity_B_nonzero", "max_linearity_B_zero"];
        for (key, v) in keys.iter().zip(margins) {
            if v.is_finite() {
                report.calibrate(format!("{id}/{key}"), v);
            }
        }
        report.calibrate(format!("{id}/ghat_rate_vs_landsberg_defect"), rate_defect);
    }
    report.calibrate("unicorn_candidates", flagged as f64);
}
