use super::*;
use nalgebra::{DMatrix, DVector};
use crate::jets::Jet;
use crate::tensor::Tensor3;
use crate::expr::parse;
use crate::jets::{fd_oracle_extrapolated, FnField, MultiIndex};
use crate::tensor::{matrix_max_abs, max_abs};

fn hyperbolic(n: usize) -> FinslerMetric {
    FinslerMetric::catalog("riemannian-hyperbolic", n, &[]).unwrap()
}

fn randers_hyperbolic() -> FinslerMetric {
    FinslerMetric::catalog("randers-hyperbolic", 2, &[]).unwrap()
}

fn all_catalog() -> Vec<FinslerMetric> {
    let mut out = vec![
        FinslerMetric::catalog("euclidean", 3, &[]).unwrap(),
        hyperbolic(2),
        hyperbolic(3),
        randers_hyperbolic(),
        FinslerMetric::catalog("randers-hyperbolic", 3, &[0.2, 0.1, -0.1]).unwrap(),
        FinslerMetric::catalog("randers-berwald-product", 3, &[]).unwrap(),
        FinslerMetric::catalog("randers", 2, &[0.4, -0.2]).unwrap(),
        FinslerMetric::catalog("quartic-smoothed", 3, &[]).unwrap(),
    ];
    out.push(FinslerMetric::catalog("linear-image", 2, &[2.0, 0.5, 0.0, 1.0]).unwrap());
    out
}

fn samples(m: &FinslerMetric, count: usize, seed: u64) -> Vec<(Vec<f64>, Vec<f64>)> {
    GridSpec {
        points: count,
        directions: 1,
        seed,
    }
    .samples(m)
}

/// Christoffel symbols of `diag(1, e^{2x¹}, …, e^{2x¹})`, worked by hand.
fn christoffel_hyperbolic(x: &[f64]) -> Tensor3 {
    let n = x.len();
    let w = (2.0 * x[0]).exp();
    Tensor3::from_fn(n, |i, j, k| {
        if i == 0 && j == k && j > 0 {
            -w
        } else if i > 0 && ((j == 0 && k == i) || (k == 0 && j == i)) {
            1.0
        } else {
            0.0
        }
    })
}

#[test]
fn riemannian_spray_matches_christoffel_oracle() {
    let m = hyperbolic(2);
    for (x, y) in samples(&m, 20, 1) {
        let w = (2.0 * x[0]).exp();
        let g = spray(&m, &x, &y).unwrap();
        assert!((g[0] + 0.5 * w * y[1] * y[1]).abs() < 1e-12);
        assert!((g[1] - y[0] * y[1]).abs() < 1e-12);
        let nc = nonlinear_connection(&m, &x, &y).unwrap();
        let expected = DMatrix::from_row_slice(2, 2, &[0.0, -w * y[1], y[1], y[0]]);
        assert!((nc - expected).amax() < 1e-12);
    }
}

#[test]
fn riemannian_chern_is_levi_civita() {
    for n in [2, 3] {
        let m = hyperbolic(n);
        for (x, y) in samples(&m, 20, 2) {
            let c = curvature_bundle(&m, &x, &y).unwrap();
            let oracle = christoffel_hyperbolic(&x);
            let diff = c.gamma.data.iter().zip(&oracle.data).map(|(a, b)| (a - b).abs());
            assert!(diff.fold(0.0, f64::max) < 1e-9);
            for v in [c.a.max_abs(), c.b.max_abs(), c.l.max_abs(), c.p.max_abs()] {
                assert!(v < 1e-9, "{v}");
            }
            assert!(matrix_max_abs(&c.e) < 1e-9 && max_abs(c.j.as_slice()) < 1e-9);
            // the auxiliary volume equals the Riemannian one
            assert!(c.tau.abs() < 1e-12 && c.s.abs() < 1e-10);
        }
    }
}

#[test]
fn locally_minkowski_has_flat_connection() {
    let m = FinslerMetric::catalog("randers", 3, &[0.3, 0.0, 0.2]).unwrap();
    for (x, y) in samples(&m, 20, 3) {
        let c = curvature_bundle(&m, &x, &y).unwrap();
        assert_eq!(max_abs(c.spray.as_slice()), 0.0);
        assert_eq!(matrix_max_abs(&c.n_conn), 0.0);
        assert_eq!(c.gamma.max_abs(), 0.0);
        assert_eq!(c.b.max_abs(), 0.0);
        assert_eq!(c.s, 0.0);
        assert_eq!(max_abs(c.hdtau.as_slice()), 0.0);
        assert!(c.a.max_abs() > 1e-3);
    }
}

#[test]
fn euclidean_distortion_vanishes() {
    let m = FinslerMetric::catalog("euclidean", 2, &[]).unwrap();
    let c = curvature_bundle(&m, &[0.0, 0.0], &[1.0, 0.0]).unwrap();
    assert_eq!(c.tau, 0.0);
    assert_eq!(c.s, 0.0);
    assert_eq!(max_abs(c.hdtau.as_slice()), 0.0);
}

#[test]
fn homogeneity_ladder() {
    for m in all_catalog() {
        for (x, y) in samples(&m, 8, 4) {
            let base = curvature_bundle(&m, &x, &y).unwrap();
            for lambda in [0.5, 2.0] {
                let ys: Vec<f64> = y.iter().map(|c| c * lambda).collect();
                let s = curvature_bundle(&m, &x, &ys).unwrap();
                let rel = |a: &[f64], b: &[f64], deg: i32| {
                    let scale = max_abs(b).max(1.0);
                    let d = a
                        .iter()
                        .zip(b)
                        .map(|(p, q)| (p - lambda.powi(deg) * q).abs())
                        .fold(0.0, f64::max);
                    d / (scale * lambda.powi(deg).max(1.0))
                };
                assert!(rel(s.spray.as_slice(), base.spray.as_slice(), 2) < 1e-8, "{}", m.label());
                assert!(rel(s.n_conn.as_slice(), base.n_conn.as_slice(), 1) < 1e-8);
                assert!(rel(&s.gamma.data, &base.gamma.data, 0) < 1e-8);
                assert!(rel(&s.b.data, &base.b.data, -1) < 1e-8);
                assert!((s.s - lambda * base.s).abs() < 1e-8 * (1.0 + base.s.abs()));
            }
            let g2 = spray(&m, &x, &y.iter().map(|c| 2.0 * c).collect::<Vec<_>>()).unwrap();
            assert!((g2 - 4.0 * &base.spray).amax() < 1e-9);
        }
    }
}

#[test]
fn euler_contractions_and_symmetries() {
    for m in all_catalog() {
        let n = m.dimension();
        for (x, y) in samples(&m, 50, 5) {
            let c = curvature_bundle(&m, &x, &y).unwrap();
            let yv = DVector::from_column_slice(&y);
            assert!((&c.n_conn * &yv - 2.0 * &c.spray).amax() < 1e-9, "{}", m.label());
            let mut by: f64 = 0.0;
            let mut ly: f64 = 0.0;
            let mut gy: f64 = 0.0;
            let mut sym: f64 = 0.0;
            for i in 0..n {
                for j in 0..n {
                    for k in 0..n {
                        let mut sb = 0.0;
                        for l in 0..n {
                            sb += c.b.get(i, j, k, l) * y[l];
                            sym = sym.max((c.p.get(i, j, k, l) - c.p.get(i, k, j, l)).abs());
                            sym = sym.max((c.b.get(i, j, k, l) - c.b.get(i, l, k, j)).abs());
                        }
                        by = by.max(sb.abs());
                        ly = ly.max((0..n).map(|a| c.l.get(a, j, k) * y[a]).sum::<f64>().abs());
                        sym = sym.max((c.gamma.get(i, j, k) - c.gamma.get(i, k, j)).abs());
                    }
                    let contracted: f64 = (0..n).map(|a| y[a] * c.gamma.get(i, a, j)).sum();
                    gy = gy.max((contracted - c.n_conn[(i, j)]).abs());
                }
            }
            assert!(by < 1e-9 && ly < 1e-9, "{}: {by} {ly}", m.label());
            assert!(gy < 1e-8, "{}: {gy}", m.label());
            assert!(sym < 1e-10, "{}: {sym}", m.label());
            assert!(c.l.symmetry_defect() < 1e-10);
            assert!(c.j.dot(&yv).abs() < 1e-9);
            assert!((c.hdtau.dot(&yv) - c.s).abs() < 1e-8);
            assert!((&c.e - c.e.transpose()).amax() < 1e-12);
        }
    }
}

#[test]
fn chern_differs_from_berwald_by_landsberg() {
    // Γⁱ_jk = ∂²Gⁱ/∂yʲ∂yᵏ − gⁱᵐ L_mjk
    let m = randers_hyperbolic();
    let n = 2;
    for (x, y) in samples(&m, 10, 6) {
        let c = curvature_bundle(&m, &x, &y).unwrap();
        let (_, dn) = connection_with_vertical_derivative(&m, &x, &y).unwrap();
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let lup: f64 = (0..n).map(|a| c.g_inv[(i, a)] * c.l.get(a, j, k)).sum();
                    let berwald = dn[k][(i, j)];
                    let d = c.gamma.get(i, j, k) - berwald + lup;
                    assert!(d.abs() < 1e-9, "{d}");
                }
            }
        }
    }
}

#[test]
fn non_berwald_randers_magnitudes_match_finite_differences() {
    let m = randers_hyperbolic();
    let x = vec![0.2, -0.1];
    let y = vec![0.6, 0.8];
    let c = curvature_bundle(&m, &x, &y).unwrap();
    for i in 0..2 {
        let mm = m.clone();
        let xc = x.clone();
        let g_i = FnField::new(
            2,
            move |v: &[f64]| {
                spray(&mm, &xc, v)
                    .map(|g| g[i])
                    .map_err(|_| crate::jets::EvalError::NonFinite { op: "spray" })
            },
            |_: &[Jet]| Err(crate::jets::EvalError::Unbound("jet".into())),
        );
        for idx in [[3, 0], [2, 1], [1, 2], [0, 3]] {
            let est = fd_oracle_extrapolated(&g_i, &y, &MultiIndex::new(&idx), 1e-2).unwrap();
            let vars: Vec<usize> = (0..idx[0]).map(|_| 0).chain((0..idx[1]).map(|_| 1)).collect();
            let exact = c.b.get(i, vars[0], vars[1], vars[2]);
            assert!((est.value - exact).abs() < 1e-5, "{est:?} vs {exact}");
        }
    }
    assert!(c.b.max_abs() > 1e-3);
    assert!(matrix_max_abs(&c.e) > 1e-4);
    assert!(c.l.max_abs() > 1e-4);
    assert!(c.p.max_abs() > 1e-4);
}

#[test]
fn product_randers_is_berwald() {
    let m = FinslerMetric::catalog("randers-berwald-product", 3, &[]).unwrap();
    for (x, y) in samples(&m, 20, 7) {
        let c = curvature_bundle(&m, &x, &y).unwrap();
        assert!(c.b.max_abs() < 1e-9 && c.p.max_abs() < 1e-9 && c.l.max_abs() < 1e-9);
        assert!(c.a.max_abs() > 1e-3);
    }
}

#[test]
fn expression_metric_matches_catalog() {
    let e = parse("sqrt(y1^2+exp(2*x1)*y2^2)+0.3*y1", 2).unwrap();
    let m = FinslerMetric::from_expr(e, Domain::cube(2, 1.0), Volume::Coordinate).unwrap();
    let r = randers_hyperbolic().with_volume(Volume::Coordinate).unwrap();
    for (x, y) in samples(&m, 5, 8) {
        let a = curvature_bundle(&m, &x, &y).unwrap();
        let b = curvature_bundle(&r, &x, &y).unwrap();
        assert!((a.b.max_abs() - b.b.max_abs()).abs() < 1e-12);
        assert!((a.s - b.s).abs() < 1e-12);
    }
}

#[test]
fn auxiliary_volume_from_text() {
    let aux = ["1", "0", "0", "exp(2*x1)"]
        .iter()
        .map(|t| parse(t, 2).unwrap())
        .collect();
    let m = hyperbolic(2).with_volume(Volume::riemannian_from_exprs(aux)).unwrap();
    assert!(distortion(&m, &[0.4, 0.1], &[1.0, 2.0]).unwrap().abs() < 1e-14);
    let coord = hyperbolic(2).with_volume(Volume::Coordinate).unwrap();
    assert!((distortion(&coord, &[0.4, 0.1], &[1.0, 2.0]).unwrap() - 0.4).abs() < 1e-14);
}

#[test]
fn invalid_metrics_are_rejected() {
    assert!(matches!(
        FinslerMetric::catalog("nope", 2, &[]),
        Err(MetricError::UnknownName(_))
    ));
    assert!(FinslerMetric::catalog("randers-hyperbolic", 2, &[0.0, 0.5]).is_err());
    let e = parse("sqrt(y1^2+x1*y2^2)", 2).unwrap();
    assert!(matches!(
        FinslerMetric::from_expr(e, Domain::cube(2, 1.0), Volume::Coordinate),
        Err(MetricError::Fiber { .. }) | Err(MetricError::Eval(_))
    ));
    let m = hyperbolic(2);
    assert!(matches!(
        spray(&m, &[2.0, 0.0], &[1.0, 0.0]),
        Err(MetricError::OutsideDomain { .. })
    ));
    assert!(matches!(spray(&m, &[0.0, 0.0], &[0.0, 0.0]), Err(MetricError::ZeroVector)));
}

#[test]
fn classification_verdicts() {
    let grid = GridSpec::default();
    let tol = Tolerances::default();
    let e = classify(&FinslerMetric::catalog("euclidean", 2, &[]).unwrap(), &grid, &tol).unwrap();
    assert!(e.riemannian && e.is_berwald && e.is_landsberg && e.is_weak_landsberg);
    let q = classify(&FinslerMetric::catalog("quartic-smoothed", 2, &[]).unwrap(), &grid, &tol).unwrap();
    assert!(q.is_berwald && !q.riemannian);
    assert!(q.cartan.value > 1e-3 && q.berwald.value < 1e-9);
    let r = classify(&randers_hyperbolic(), &grid, &tol).unwrap();
    assert!(!r.riemannian && !r.is_berwald && !r.is_landsberg && !r.is_weak_landsberg, "{r:?}");
    assert!(r.consistent && r.unicorn_candidates.is_empty());
    let p = classify(&FinslerMetric::catalog("randers-berwald-product", 3, &[]).unwrap(), &grid, &tol).unwrap();
    assert!(p.is_berwald && p.is_landsberg && !p.riemannian && p.consistent);
}

#[test]
fn fiber_norm_agrees_with_bundle_cartan_tensor() {
    let m = randers_hyperbolic();
    let x = [0.3, 0.4];
    let y = [0.2, -1.0];
    let t = m.fiber_norm(&x).unwrap().tensors(&y).unwrap();
    let c = curvature_bundle(&m, &x, &y).unwrap();
    assert!((t.g - &c.g).amax() < 1e-13);
    assert!(t.a.data.iter().zip(&c.a.data).all(|(p, q)| (p - q).abs() < 1e-13));
    assert!((t.eta - &c.eta).amax() < 1e-12);
}
