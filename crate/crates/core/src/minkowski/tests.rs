use super::*;
use crate::expr::parse;
use crate::jets::{fd_oracle, MultiIndex};
use crate::sampling;
use catalog::Squared;

fn randers_half() -> MinkowskiNorm {
    MinkowskiNorm::randers(vec![0.5, 0.0]).unwrap()
}

#[test]
fn catalog_values() {
    assert_eq!(MinkowskiNorm::euclidean(3).eval(&[1.0, 2.0, 2.0]).unwrap(), 3.0);
    assert_eq!(randers_half().eval(&[1.0, 0.0]).unwrap(), 1.5);
}

#[test]
fn catalog_rejects_bad_input() {
    assert!(matches!(
        MinkowskiNorm::catalog("randers", 2, &[1.0, 0.0]),
        Err(NormError::InvalidParams(_))
    ));
    assert!(matches!(
        MinkowskiNorm::catalog("kropina", 2, &[]),
        Err(NormError::UnknownName(_))
    ));
    assert!(matches!(
        MinkowskiNorm::catalog("linear-image", 2, &[1.0, 2.0, 2.0, 4.0]),
        Err(NormError::InvalidParams(_))
    ));
    assert!(matches!(
        MinkowskiNorm::catalog("quartic-smoothed", 2, &[0.0]),
        Err(NormError::InvalidParams(_))
    ));
    assert!(matches!(
        MinkowskiNorm::euclidean(2).eval(&[0.0, 0.0]),
        Err(NormError::ZeroVector)
    ));
}

#[test]
fn euclidean_tensors_are_trivial() {
    let t = MinkowskiNorm::euclidean(3).tensors(&[0.3, -1.0, 2.0]).unwrap();
    assert!((t.g.clone() - DMatrix::identity(3, 3)).abs().max() < 1e-14);
    assert!(t.a.max_abs() < 1e-12);
    assert!(t.eta.amax() < 1e-12);
    let check = check_minkowski(&MinkowskiNorm::euclidean(3), &default_directions(3), 1e-12);
    assert!(check.valid);
    assert!((check.min_eigenvalue - 1.0).abs() < 1e-12);
}

#[test]
fn randers_fundamental_tensor_at_axis() {
    let t = randers_half().tensors(&[1.0, 0.0]).unwrap();
    assert!((t.g[(0, 0)] - 2.25).abs() < 1e-14);
    assert!((t.g[(1, 1)] - 1.5).abs() < 1e-14);
    assert!(t.g[(0, 1)].abs() < 1e-14);
    // finite-difference Hessian of F²
    let sq = Squared(randers_half().gauge().clone());
    for (idx, expect) in [([2, 0], 2.25), ([0, 2], 1.5), ([1, 1], 0.0)] {
        let e = fd_oracle(&sq, &[1.0, 0.0], &MultiIndex::new(&idx), 1e-4).unwrap();
        assert!((0.5 * e.value - expect).abs() < 1e-6, "{idx:?}: {e:?}");
    }
}

#[test]
fn randers_cartan_tensor_matches_fd_and_is_nonzero() {
    let y = [1.0, 0.3];
    let t = randers_half().tensors(&y).unwrap();
    assert!(t.a.max_abs() > 1e-3);
    let sq = Squared(randers_half().gauge().clone());
    for i in 0..2 {
        for j in 0..2 {
            for k in 0..2 {
                let idx = MultiIndex::from_vars(2, &[i, j, k]);
                let e = crate::jets::fd_oracle_extrapolated(&sq, &y, &idx, 1e-3).unwrap();
                let fd = 0.25 * t.f * e.value;
                assert!((fd - t.a.get(i, j, k)).abs() < 1e-6, "{i}{j}{k}");
            }
        }
    }
}

#[test]
fn randers_cartan_form_matches_fd_of_log_volume() {
    let f = randers_half();
    // η vanishes on the symmetry axis y = (1, 0), so probe off-axis
    let y = [1.0, 0.3];
    let t = f.tensors(&y).unwrap();
    assert!(t.eta.amax() > 1e-3);
    assert!(t.eta.dot(&DVector::from_column_slice(&y)).abs() < 1e-10);
    let h = 1e-4;
    for i in 0..2 {
        let mut yp = y.to_vec();
        let mut ym = y.to_vec();
        yp[i] += h;
        ym[i] -= h;
        let lv = |v: &[f64]| 0.5 * f.tensors(v).unwrap().g.determinant().ln();
        let fd = (lv(&yp) - lv(&ym)) / (2.0 * h);
        assert!((fd - t.eta[i]).abs() < 1e-7, "{i}: {fd} vs {}", t.eta[i]);
    }
}

#[test]
fn eta_routes_agree_and_contract_to_zero() {
    let mut rng = sampling::rng(4);
    let norms = [
        randers_half(),
        MinkowskiNorm::catalog("quartic-smoothed", 3, &[]).unwrap(),
        MinkowskiNorm::randers(vec![0.2, -0.4, 0.1]).unwrap(),
    ];
    for f in &norms {
        for _ in 0..20 {
            let y = sampling::unit_vector(&mut rng, f.dimension());
            let t = f.tensors(&y).unwrap();
            assert!((&t.eta - &t.eta_trace).amax() < 1e-8);
            let yv = DVector::from_column_slice(&y);
            assert!(t.eta.dot(&yv).abs() < 1e-10);
            assert!(t.a.contract_first(&y).abs().max() < 1e-10);
            assert!(t.a.symmetry_defect() < 1e-12);
        }
    }
}

#[test]
fn tensors_have_the_right_homogeneity() {
    let f = MinkowskiNorm::randers(vec![0.3, 0.1, -0.2]).unwrap();
    let mut rng = sampling::rng(9);
    for _ in 0..10 {
        let y = sampling::unit_vector(&mut rng, 3);
        let t = f.tensors(&y).unwrap();
        for lambda in [0.5, 2.0, 10.0] {
            let ys: Vec<f64> = y.iter().map(|c| c * lambda).collect();
            let s = f.tensors(&ys).unwrap();
            assert!((&s.g - &t.g).abs().max() < 1e-10);
            let a_diff = s.a.data.iter().zip(&t.a.data).map(|(p, q)| (p - q).abs());
            assert!(a_diff.fold(0.0, f64::max) < 1e-10);
            // η is a covector of degree −1: λ η(λy) = η(y)
            assert!((&s.eta * lambda - &t.eta).amax() < 1e-10);
        }
    }
}

#[test]
fn angular_metric_decomposes_g() {
    let f = randers_half();
    let mut rng = sampling::rng(2);
    for _ in 0..20 {
        let y = sampling::unit_vector(&mut rng, 2);
        let t = f.tensors(&y).unwrap();
        let recomposed = &t.h + &t.df * t.df.transpose();
        assert!((recomposed - &t.g).abs().max() < 1e-10);
        assert!((&t.h * DVector::from_column_slice(&y)).amax() < 1e-10);
        let eig = t.h.symmetric_eigenvalues();
        let positive = eig.iter().filter(|&&e| e > 1e-8).count();
        assert_eq!(positive, 1);
    }
    let e = MinkowskiNorm::euclidean(2).tensors(&[1.0, 0.0]).unwrap();
    assert!((e.h - DMatrix::from_diagonal(&DVector::from_vec(vec![0.0, 1.0]))).abs().max() < 1e-14);
}

#[test]
fn quartic_is_strongly_convex_on_many_directions() {
    let f = MinkowskiNorm::catalog("quartic-smoothed", 3, &[0.1]).unwrap();
    let c = check_minkowski(&f, &sampling::directions(3, 200, 1), 1e-10);
    assert!(c.valid, "{c:?}");
    assert!(c.min_eigenvalue > 0.0);
}

#[test]
fn relative_invariance_under_linear_maps() {
    let f = MinkowskiNorm::randers(vec![0.3, 0.2]).unwrap();
    let mut rng = sampling::rng(21);
    for _ in 0..20 {
        let l = sampling::matrix_with_condition(&mut rng, 2, 4.0);
        let ft = f.linear_image(&l).unwrap();
        let y = sampling::unit_vector(&mut rng, 2);
        let ly: Vec<f64> = (&l * DVector::from_column_slice(&y)).iter().copied().collect();
        let t = ft.tensors(&y).unwrap();
        let s = f.tensors(&ly).unwrap();
        let g_expect = l.transpose() * &s.g * &l;
        assert!((&t.g - g_expect).abs().max() < 1e-8);
        let a_expect = s.a.pullback(&l);
        let diff: f64 = t.a.data.iter().zip(&a_expect.data).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);
        assert!(diff < 1e-8);
        let eta_expect = l.transpose() * &s.eta;
        assert!((&t.eta - eta_expect).amax() < 1e-8);
    }
}

#[test]
fn radial_constructions() {
    let one = parse("1", 3).unwrap();
    let sphere = MinkowskiNorm::from_radial(Arc::new(FiberField(one))).unwrap();
    assert!((sphere.eval(&[1.0, 2.0, 2.0]).unwrap() - 3.0).abs() < 1e-14);

    let ellipse = parse("1/sqrt(2*y1^2+y2^2)", 2).unwrap();
    let f = MinkowskiNorm::from_radial(Arc::new(FiberField(ellipse))).unwrap();
    for y in sampling::directions(2, 16, 0) {
        let expect = (2.0 * y[0] * y[0] + y[1] * y[1]).sqrt();
        assert!((f.eval(&y).unwrap() - expect).abs() < 1e-14);
    }

    let mild = parse("1+0.5*y1^4", 2).unwrap();
    assert!(MinkowskiNorm::from_radial(Arc::new(FiberField(mild))).is_ok());

    let star = parse("1+y1^4", 2).unwrap();
    match MinkowskiNorm::from_radial(Arc::new(FiberField(star))) {
        Err(NormError::NotConvex { min_eigenvalue, witness }) => {
            assert!(min_eigenvalue < 0.0);
            assert_eq!(witness.len(), 2);
        }
        other => panic!("expected convexity failure, got {other:?}"),
    }
}

#[test]
fn expression_gauge_matches_compiled_randers() {
    let e = parse("sqrt(y1^2+y2^2)+0.5*y1", 2).unwrap();
    let from_text = MinkowskiNorm::from_expr(e).unwrap();
    let a = from_text.jet(&[1.0, 0.3], 6).unwrap();
    let b = randers_half().jet(&[1.0, 0.3], 6).unwrap();
    assert!(a.max_abs_diff(&b) < 1e-12);
    assert!(MinkowskiNorm::from_expr(parse("x1*y1", 1).unwrap()).is_err());
}
