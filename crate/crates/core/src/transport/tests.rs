use super::*;
use crate::finsler::{curvature_bundle, Domain};
use crate::sampling;
use rand::Rng;

fn metric(name: &str, n: usize) -> FinslerMetric {
    FinslerMetric::catalog(name, n, &[]).unwrap()
}

fn opts() -> TransportOptions {
    TransportOptions::default()
}

/// Random segment inside the interior box with length about `len`.
fn random_segment(rng: &mut impl Rng, d: &Domain, len: f64) -> Curve {
    let inner = d.shrunk(0.1);
    loop {
        let p = sampling::point_in_box(rng, &inner.lo, &inner.hi);
        let v = sampling::unit_vector(rng, p.len());
        let q: Vec<f64> = p.iter().zip(&v).map(|(a, b)| a + len * b).collect();
        if inner.contains(&q) {
            return Curve::segment(p, q);
        }
    }
}

/// Levi-Civita transport for `diag(1, e^{2x¹}, …)` by classical RK4 with a
/// fine fixed step: `ẏⁱ = −Γⁱ_jk(σ) σ̇ʲ yᵏ` with the hand-computed symbols.
fn levi_civita_oracle(curve: &Curve, y0: &[f64], steps: usize) -> (Vec<f64>, DMatrix<f64>) {
    let n = y0.len();
    let matrix = |t: f64| {
        let x = curve.point(t);
        let v = curve.velocity(t);
        let w = (2.0 * x[0]).exp();
        // A(t) with ẏ = A y
        let mut a = DMatrix::zeros(n, n);
        for i in 1..n {
            a[(0, i)] += w * v[i];
            a[(i, i)] -= v[0];
            a[(i, 0)] -= v[i];
        }
        a
    };
    let h = 1.0 / steps as f64;
    let mut phi = DMatrix::<f64>::identity(n, n);
    for s in 0..steps {
        let t = s as f64 * h;
        let k1 = matrix(t) * &phi;
        let k2 = matrix(t + 0.5 * h) * (&phi + &k1 * (0.5 * h));
        let k3 = matrix(t + 0.5 * h) * (&phi + &k2 * (0.5 * h));
        let k4 = matrix(t + h) * (&phi + &k3 * h);
        phi += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
    }
    let y = &phi * DVector::from_column_slice(y0);
    (y.iter().copied().collect(), phi)
}

#[test]
fn euclidean_transport_is_identity() {
    let m = metric("euclidean", 3);
    let c = Curve::Polynomial {
        coefficients: vec![vec![0.1, 0.0, -0.2], vec![0.3, 0.2, 0.1], vec![-0.2, 0.1, 0.3]],
    };
    let r = transport(&m, &c, &[1.0, -2.0, 0.5], 1.0, &opts()).unwrap();
    assert_eq!(r.y, vec![1.0, -2.0, 0.5]);
    assert_eq!(r.max_drift(), 0.0);
    assert_eq!(r.times.len(), 33);
    let d = transport_differential(&m, &c, &[1.0, -2.0, 0.5], &[0.3, 0.1, 0.0], 1.0, &opts()).unwrap();
    assert_eq!(d.as_slice(), &[0.3, 0.1, 0.0]);
}

#[test]
fn riemannian_transport_matches_levi_civita() {
    for n in [2, 3] {
        let m = metric("riemannian-hyperbolic", n);
        let mut rng = sampling::rng(11 + n as u64);
        for _ in 0..5 {
            let c = random_segment(&mut rng, m.domain(), 1.0);
            let y0 = sampling::unit_vector(&mut rng, n);
            let r = transport(&m, &c, &y0, 1.0, &opts()).unwrap();
            let (oracle, phi) = levi_civita_oracle(&c, &y0, 4000);
            for (a, b) in r.y.iter().zip(&oracle) {
                assert!((a - b).abs() < 1e-8, "{a} vs {b}");
            }
            let jac = transport_jacobian(&m, &c, &y0, 1.0, &opts()).unwrap();
            assert!((jac.jacobian - phi).amax() < 1e-8);
        }
    }
}

#[test]
fn norm_is_preserved_and_transport_is_homogeneous() {
    let names = ["riemannian-hyperbolic", "randers-hyperbolic", "quartic-smoothed"];
    let mut rng = sampling::rng(12);
    for name in names {
        let m = metric(name, 2);
        let items: Vec<(Curve, Vec<f64>)> = (0..10)
            .map(|_| (random_segment(&mut rng, m.domain(), 0.8), sampling::unit_vector(&mut rng, 2)))
            .collect();
        let results = transport_batch(&m, &items, 1.0, &opts());
        for ((c, y0), r) in items.iter().zip(results) {
            let r = r.unwrap();
            let f0 = m.eval(&c.point(0.0), y0).unwrap();
            assert_eq!(r.drift[0], 0.0);
            assert!(r.max_drift() <= 1e-8 * f0, "{name}: {}", r.max_drift());
            for lambda in [0.5, 2.0, 10.0] {
                let ys: Vec<f64> = y0.iter().map(|v| lambda * v).collect();
                let rs = transport(&m, c, &ys, 1.0, &opts()).unwrap();
                for (a, b) in rs.y.iter().zip(&r.y) {
                    assert!((a - lambda * b).abs() <= 1e-9 * lambda, "{name} λ={lambda}");
                }
            }
        }
    }
}

#[test]
fn reversal_returns_to_start() {
    let m = FinslerMetric::catalog("randers-berwald-product", 3, &[]).unwrap();
    let c = Curve::Chain {
        points: vec![vec![-0.5, 0.0, 0.1], vec![0.2, 0.4, 0.0], vec![0.3, -0.3, 0.5]],
    };
    let y0 = [0.3, -0.7, 1.1];
    let fwd = transport(&m, &c, &y0, 1.0, &opts()).unwrap();
    let back = transport(&m, &c.reversed(), &fwd.y, 1.0, &opts()).unwrap();
    for (a, b) in back.y.iter().zip(&y0) {
        assert!((a - b).abs() < 1e-8);
    }
}

#[test]
fn halving_tolerance_stays_within_error_estimate() {
    let m = metric("randers-hyperbolic", 2);
    let c = Curve::segment(vec![-0.6, -0.5], vec![0.5, 0.6]);
    let coarse = transport(&m, &c, &[0.2, 1.0], 1.0, &TransportOptions::with_tolerance(1e-8, 1e-8)).unwrap();
    let fine = transport(&m, &c, &[0.2, 1.0], 1.0, &TransportOptions::with_tolerance(5e-9, 5e-9)).unwrap();
    let change = coarse
        .y
        .iter()
        .zip(&fine.y)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    assert!(change < coarse.stats.error_estimate, "{change} vs {:?}", coarse.stats);
}

#[test]
fn rk4_agrees_with_dopri5() {
    let m = metric("randers-hyperbolic", 2);
    let c = Curve::segment(vec![-0.5, 0.3], vec![0.4, -0.2]);
    let a = transport(&m, &c, &[1.0, 0.4], 1.0, &opts()).unwrap();
    let rk = TransportOptions {
        method: Method::Rk4 { steps: 400 },
        samples: 5,
    };
    let b = transport(&m, &c, &[1.0, 0.4], 1.0, &rk).unwrap();
    assert!((DVector::from_vec(a.y) - DVector::from_vec(b.y)).amax() < 1e-9);
    assert_eq!(b.times.len(), 5);
}

#[test]
fn differential_matches_symmetric_difference() {
    let m = metric("randers-hyperbolic", 2);
    let c = Curve::Polynomial {
        coefficients: vec![vec![-0.4, 0.2], vec![0.6, -0.1], vec![0.1, -0.4]],
    };
    let y0 = [0.5, 0.9];
    let u = [0.3, -0.8];
    let d = transport_differential(&m, &c, &y0, &u, 1.0, &opts()).unwrap();
    let s = 1e-5;
    let shifted = |sign: f64| -> Vec<f64> {
        let y: Vec<f64> = y0.iter().zip(&u).map(|(a, b)| a + sign * s * b).collect();
        transport(&m, &c, &y, 1.0, &opts()).unwrap().y
    };
    let (p, q) = (shifted(1.0), shifted(-1.0));
    for i in 0..2 {
        let fd = (p[i] - q[i]) / (2.0 * s);
        assert!((fd - d[i]).abs() < 1e-5 * d.norm(), "{fd} vs {}", d[i]);
    }
    let v = [0.1, 0.4];
    let dv = transport_differential(&m, &c, &y0, &v, 1.0, &opts()).unwrap();
    let comb: Vec<f64> = u.iter().zip(&v).map(|(a, b)| 2.0 * a - 3.0 * b).collect();
    let dc = transport_differential(&m, &c, &y0, &comb, 1.0, &opts()).unwrap();
    assert!((dc - (2.0 * d - 3.0 * dv)).amax() < 1e-10);
}

#[test]
fn pullbacks() {
    let id = DMatrix::identity(2, 2);
    let e = metric("euclidean", 2);
    let c = Curve::segment(vec![-0.5, 0.0], vec![0.5, 0.3]);
    for which in FiberTensor::ALL {
        let pulled = pullback_tensor(&e, &c, 1.0, which, &[0.6, 0.8], &opts()).unwrap();
        let orig = fiber_tensor(&e, &[-0.5, 0.0], &[0.6, 0.8], which, &id).unwrap();
        for (a, b) in pulled.iter().zip(&orig) {
            assert!((a - b).abs() < 1e-12);
        }
    }
    let h = metric("riemannian-hyperbolic", 2);
    let pulled = pullback_tensor(&h, &c, 1.0, FiberTensor::GHat, &[0.6, 0.8], &opts()).unwrap();
    let orig = fiber_tensor(&h, &[-0.5, 0.0], &[0.6, 0.8], FiberTensor::GHat, &id).unwrap();
    for (a, b) in pulled.iter().zip(&orig) {
        assert!((a - b).abs() < 1e-7);
    }
    let r = metric("randers-hyperbolic", 2);
    let c = Curve::segment(vec![-0.5, -0.5], vec![0.5, 0.5]);
    let mut worst: f64 = 0.0;
    for y in sampling::directions(2, 8, 0) {
        let pulled = pullback_tensor(&r, &c, 0.5, FiberTensor::AHat, &y, &opts()).unwrap();
        let orig = fiber_tensor(&r, &[-0.5, -0.5], &y, FiberTensor::AHat, &id).unwrap();
        for (a, b) in pulled.iter().zip(&orig) {
            worst = worst.max((a - b).abs());
        }
    }
    assert!(worst > 1e-4, "{worst}");
}

#[test]
fn stability_rates() {
    let h = metric("riemannian-hyperbolic", 2);
    let lm = metric("quartic-smoothed", 2);
    for which in FiberTensor::ALL {
        let rate = stability_rate(&h, &[0.2, -0.1], &[0.6, 0.8], &[0.3, 0.9], which, &opts()).unwrap();
        assert!(rate.iter().all(|v| v.abs() < 1e-6), "{which:?} {rate:?}");
        let rate = stability_rate(&lm, &[0.2, -0.1], &[0.6, 0.8], &[0.3, 0.9], which, &opts()).unwrap();
        assert!(rate.iter().all(|v| v.abs() < 1e-8));
    }
}

#[test]
fn ghat_rate_is_minus_twice_landsberg() {
    // d/dt (P^* ĝ)_ij = −2 L_ijk σ̇ᵏ / F²
    let m = metric("randers-hyperbolic", 3);
    let mut rng = sampling::rng(14);
    let inner = m.domain().interior();
    for _ in 0..5 {
        let p = sampling::point_in_box(&mut rng, &inner.lo, &inner.hi);
        let y = sampling::unit_vector(&mut rng, 3);
        let d = sampling::unit_vector(&mut rng, 3);
        let rate = stability_rate(&m, &p, &y, &d, FiberTensor::GHat, &opts()).unwrap();
        let c = curvature_bundle(&m, &p, &y).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let l: f64 = (0..3).map(|k| c.l.get(i, j, k) * d[k]).sum();
                let expected = -2.0 * l / (c.f * c.f);
                assert!((rate[3 * i + j] - expected).abs() < 1e-7, "{} vs {expected}", rate[3 * i + j]);
            }
        }
    }
}

#[test]
fn linearity_of_transport() {
    let samples = sampling::directions(2, 8, 3);
    let c = Curve::segment(vec![-0.5, -0.5], vec![0.3, 0.2]);
    let h = linearity_residual(&metric("riemannian-hyperbolic", 2), &c, 1.0, &samples, &opts()).unwrap();
    assert!(h.residual < 1e-7 && h.additivity < 1e-7, "{h:?}");
    let lm = linearity_residual(&FinslerMetric::catalog("randers", 2, &[0.3, 0.1]).unwrap(), &c, 1.0, &samples, &opts()).unwrap();
    assert!(lm.residual < 1e-12 && lm.additivity < 1e-12);
    let r = linearity_residual(&metric("randers-hyperbolic", 2), &c, 1.0, &samples, &opts()).unwrap();
    assert!(r.residual > 1e-3 && r.additivity > 1e-3, "{r:?}");
    assert!(matches!(
        linearity_residual(&FinslerMetric::catalog("randers", 2, &[0.3, 0.1]).unwrap(), &c, 1.0, &samples[..3], &opts()),
        Err(TransportError::Degenerate(_))
    ));
}

#[test]
fn bad_inputs_are_reported() {
    let m = metric("riemannian-hyperbolic", 2);
    let c = Curve::segment(vec![0.0, 0.0], vec![0.99, 0.0]);
    assert!(matches!(
        transport(&m, &c, &[1.0, 0.0], 1.0, &opts()),
        Err(TransportError::CurveOutside { .. })
    ));
    let c = Curve::segment(vec![0.0, 0.0], vec![0.5, 0.0]);
    assert!(matches!(
        transport(&m, &c, &[0.0, 0.0], 1.0, &opts()),
        Err(TransportError::Metric(MetricError::ZeroVector))
    ));
    assert!(matches!(
        transport(&m, &c, &[1.0, 0.0], 1.5, &opts()),
        Err(TransportError::InvalidTime(_))
    ));
    let csv = transport(&m, &c, &[1.0, 0.0], 0.5, &opts()).unwrap().to_csv();
    assert!(csv.starts_with("t,y1,y2,F,drift\n"));
    assert_eq!(csv.lines().count(), 34);
}
