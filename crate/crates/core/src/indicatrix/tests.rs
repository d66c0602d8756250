use super::*;
use crate::sampling;

fn randers3() -> MinkowskiNorm {
    MinkowskiNorm::randers(vec![0.5, 0.0, 0.0]).unwrap()
}

#[test]
fn euclidean_point_and_frame() {
    let f = MinkowskiNorm::euclidean(3);
    let p = indicatrix_point(&f, &[0.0, 0.0, 1.0]).unwrap();
    assert_eq!(p.v, vec![0.0, 0.0, 1.0]);
    assert!(p.basis.row(2).amax() < 1e-15);
    let h = induced_metric(&p);
    assert!((h - DMatrix::identity(2, 2)).amax() < 1e-14);
    let d = centroaffine_data(&p);
    assert!(d.c.max_abs() < 1e-12);
    assert!(d.t.amax() < 1e-12);
    assert_eq!(semi_c_residual(&d, 2.0).unwrap(), 0.0);
}

#[test]
fn randers_point_on_axis() {
    let f = MinkowskiNorm::randers(vec![0.5, 0.0]).unwrap();
    let p = indicatrix_point(&f, &[1.0, 0.0]).unwrap();
    assert!((p.v[0] - 2.0 / 3.0).abs() < 1e-15);
    assert_eq!(p.v[1], 0.0);
}

#[test]
fn frame_lies_in_kernel_of_df() {
    let norms = [
        randers3(),
        MinkowskiNorm::catalog("quartic-smoothed", 3, &[]).unwrap(),
        MinkowskiNorm::catalog("linear-image", 3, &[2.0, 0.3, 0.0, 0.0, 1.0, 0.2, 0.1, 0.0, 1.5]).unwrap(),
    ];
    let mut rng = sampling::rng(8);
    for f in &norms {
        for _ in 0..30 {
            let u = sampling::unit_vector(&mut rng, 3);
            let p = indicatrix_point(f, &u).unwrap();
            assert!((f.eval(&p.v).unwrap() - 1.0).abs() < 1e-12);
            let df_b = p.basis.transpose() * &p.tensors.df;
            assert!(df_b.amax() < 1e-10);
            let h = induced_metric(&p);
            let h2 = induced_metric_angular(&p);
            let h3 = induced_metric_gauss(f, &p).unwrap();
            assert!((&h - &h2).amax() < 1e-10);
            assert!((&h - &h3).amax() < 1e-10, "{h} vs {h3}");
            assert!((h - DMatrix::identity(2, 2)).amax() < 1e-10);
        }
    }
}

#[test]
fn randers_cubic_form_is_symmetric_and_nonzero() {
    let f = randers3();
    let p = indicatrix_point(&f, &[0.0, 1.0, 0.0]).unwrap();
    let d = centroaffine_data(&p);
    assert!(tensor_norm_sq(&d.c, &d.h).sqrt() > 1e-3);
    assert!(d.c.symmetry_defect() < 1e-12);
}

#[test]
fn tchebychev_three_routes_agree() {
    let f = randers3();
    let mut rng = sampling::rng(10);
    for _ in 0..10 {
        let u = sampling::unit_vector(&mut rng, 3);
        let p = indicatrix_point(&f, &u).unwrap();
        let d = centroaffine_data(&p);
        let trace = tchebychev_from_trace(&d.h, &d.c);
        let volume = tchebychev_from_volume(&f, &p, 1e-3).unwrap();
        assert!((&d.t - &trace).amax() < 1e-8, "{} vs {}", d.t, trace);
        assert!((&d.t - &volume).amax() < 1e-4, "{} vs {}", d.t, volume);
    }
}

#[test]
fn randers_is_matsumoto_flat() {
    let f = MinkowskiNorm::randers(vec![0.2, -0.3, 0.4]).unwrap();
    for u in sampling::directions(3, 50, 0) {
        let d = centroaffine_data(&indicatrix_point(&f, &u).unwrap());
        assert!(semi_c_residual(&d, 2.0).unwrap() < 1e-8);
    }
    let quartic = MinkowskiNorm::catalog("quartic-smoothed", 3, &[]).unwrap();
    let d = centroaffine_data(&indicatrix_point(&quartic, &[0.6, 0.3, 0.2]).unwrap());
    assert!(semi_c_residual(&d, 2.0).unwrap() > 1e-3);
}

#[test]
fn best_fit_q_finds_two_for_randers() {
    let f = randers3();
    let d = centroaffine_data(&indicatrix_point(&f, &[0.3, 0.8, -0.2]).unwrap());
    let best = best_fit_q(&d);
    assert!((best.q - 2.0).abs() < 1e-4, "{best:?}");
    assert!(best.residual < 1e-8);
}

#[test]
fn excluded_q_is_rejected() {
    let d = centroaffine_data(&indicatrix_point(&randers3(), &[0.3, 0.8, -0.2]).unwrap());
    assert!(matches!(semi_c_residual(&d, -2.0), Err(SemiCError::ExcludedQ { .. })));
}

#[test]
fn synthetic_norm_identity() {
    for m in [3usize, 4] {
        let n = (m + 1) as f64;
        for q in [2.0, 0.5, -1.0] {
            let mut t = vec![0.0; m];
            t[0] = 0.7;
            let c = synthetic_semi_c(&t, q);
            let h = DMatrix::identity(m, m);
            let lhs = tensor_norm_sq(&c, &h);
            let factor = (n - 1.0).powi(2) * (3.0 * (n - 2.0) + (q + 1.0).powi(2)) / (n + q - 1.0).powi(2);
            let rhs = factor * 0.49;
            assert!((lhs - rhs).abs() <= 1e-12 * rhs, "n={n} q={q}: {lhs} vs {rhs}");
            // the synthetic C has T as its normalized trace
            let trace = tchebychev_from_trace(&h, &c);
            assert!((trace[0] - 0.7).abs() < 1e-14);
        }
    }
    let c = synthetic_semi_c(&[0.5, 0.0, 0.0], 2.0);
    let ratio = tensor_norm_sq(&c, &DMatrix::identity(3, 3)) / 0.25;
    assert!((ratio - 5.4).abs() < 1e-12);
}

#[test]
fn invariants_match_under_linear_images() {
    let f = MinkowskiNorm::randers(vec![0.3, 0.1, 0.0]).unwrap();
    let mut rng = sampling::rng(31);
    for _ in 0..20 {
        let l = sampling::matrix_with_condition(&mut rng, 3, 4.0);
        let ft = f.linear_image(&l).unwrap();
        let u = sampling::unit_vector(&mut rng, 3);
        let lu: Vec<f64> = (&l * DVector::from_column_slice(&u)).iter().copied().collect();
        let a = centroaffine_data(&indicatrix_point(&ft, &u).unwrap());
        let b = centroaffine_data(&indicatrix_point(&f, &lu).unwrap());
        let pairs = [
            (tensor_norm_sq(&a.c, &a.h), tensor_norm_sq(&b.c, &b.h)),
            (vector_norm_sq(&a.t, &a.h), vector_norm_sq(&b.t, &b.h)),
            (
                semi_c_residual(&a, 0.5).unwrap(),
                semi_c_residual(&b, 0.5).unwrap(),
            ),
        ];
        for (x, y) in pairs {
            assert!((x - y).abs() < 1e-8, "{x} vs {y}");
        }
    }
}

#[test]
fn equivalence_check_examples() {
    let e = MinkowskiNorm::euclidean(2);
    let dirs = sampling::directions(2, 64, 0);
    assert_eq!(equivalence_check(&e, &e, &DMatrix::identity(2, 2), &dirs).unwrap(), 0.0);
    let l0 = DMatrix::from_diagonal(&DVector::from_vec(vec![2.0, 1.0]));
    let f1 = e.linear_image(&l0).unwrap();
    assert!(equivalence_check(&f1, &e, &l0, &dirs).unwrap() < 1e-12);
    assert!(matches!(
        equivalence_check(&e, &e, &DMatrix::zeros(2, 2), &dirs),
        Err(EquivalenceError::Singular)
    ));
    let r = MinkowskiNorm::randers(vec![0.5, 0.0]).unwrap();
    let mut rng = sampling::rng(1);
    let mut best = f64::INFINITY;
    for _ in 0..200 {
        let l = sampling::matrix_with_condition(&mut rng, 2, 5.0);
        best = best.min(equivalence_check(&e, &r, &l, &dirs).unwrap());
    }
    assert!(best > 0.05, "{best}");
}

#[test]
fn solver_recovers_constructed_equivalences() {
    let e = MinkowskiNorm::euclidean(2);
    let l0 = DMatrix::from_diagonal(&DVector::from_vec(vec![2.0, 1.0]));
    let f2 = e.linear_image(&l0).unwrap();
    let res = equivalence_solve(&e, &f2, &EquivalenceOptions::default()).unwrap();
    assert!(res.success && res.residual < 1e-6, "{res:?}");

    let f1 = MinkowskiNorm::randers(vec![0.3, 0.0]).unwrap();
    let mut rng = sampling::rng(7);
    let l0 = sampling::matrix_with_condition(&mut rng, 2, 5.0);
    let f2 = f1.linear_image(&l0).unwrap();
    let opts = EquivalenceOptions {
        seed: 7,
        ..EquivalenceOptions::default()
    };
    let res = equivalence_solve(&f1, &f2, &opts).unwrap();
    assert!(res.success, "{res:?}");
    let signs = cartan_sign_report(&f1, &f2, &res.matrix, &sampling::directions(2, 16, 0), 1e-6).unwrap();
    assert!(signs.metric_defect < 1e-5 && !signs.mixed);
    assert!(signs.signs.iter().all(|&s| s == 1));
}

#[test]
fn solver_reports_non_equivalence() {
    let e = MinkowskiNorm::euclidean(2);
    let r = MinkowskiNorm::randers(vec![0.5, 0.0]).unwrap();
    let res = equivalence_solve(&e, &r, &EquivalenceOptions::default()).unwrap();
    assert!(!res.success);
    assert!(res.residual > 1e-2, "{res:?}");
    assert_eq!(res.restarts_used, 20);
}

#[test]
fn blaschke_deicke_examples() {
    let dirs = sampling::directions(3, 100, 0);
    let e = blaschke_deicke_residual(&MinkowskiNorm::euclidean(3), &dirs).unwrap();
    assert!(e.sup_eta < 1e-10 && e.fit_residual < 1e-10, "{e:?}");
    let l0 = DMatrix::from_row_slice(3, 3, &[2.0, 0.5, 0.0, 0.0, 1.0, -0.3, 0.2, 0.0, 0.7]);
    let li = MinkowskiNorm::euclidean(3).linear_image(&l0).unwrap();
    let b = blaschke_deicke_residual(&li, &dirs).unwrap();
    assert!(b.sup_eta < 1e-8 && b.fit_residual < 1e-8, "{b:?}");
    let r = blaschke_deicke_residual(&randers3(), &dirs).unwrap();
    assert!(r.sup_eta > 1e-2 && r.fit_residual > 1e-2, "{r:?}");
}
