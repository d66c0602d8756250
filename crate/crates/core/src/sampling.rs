//! Reproducible direction grids and random draws.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type SeededRng = ChaCha8Rng;

pub fn rng(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Unit directions covering the sphere in `R^n`.
///
/// Uniform angular grid for `n = 2`, Fibonacci sphere for `n = 3`, seeded
/// rejection sampling otherwise.
pub fn directions(n: usize, count: usize, seed: u64) -> Vec<Vec<f64>> {
    match n {
        2 => (0..count)
            .map(|k| {
                let t = 2.0 * PI * (k as f64 + 0.5) / count as f64;
                vec![t.cos(), t.sin()]
            })
            .collect(),
        3 => {
            let golden = PI * (3.0 - 5f64.sqrt());
            (0..count)
                .map(|k| {
                    let z = 1.0 - 2.0 * (k as f64 + 0.5) / count as f64;
                    let r = (1.0 - z * z).sqrt();
                    let phi = golden * k as f64;
                    vec![r * phi.cos(), r * phi.sin(), z]
                })
                .collect()
        }
        _ => {
            let mut rng = rng(seed);
            (0..count).map(|_| unit_vector(&mut rng, n)).collect()
        }
    }
}

/// Uniform random unit vector by rejection from the cube.
pub fn unit_vector(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let r2: f64 = v.iter().map(|c| c * c).sum();
        if r2 > 1e-4 && r2 <= 1.0 {
            let r = r2.sqrt();
            return v.into_iter().map(|c| c / r).collect();
        }
    }
}

/// Uniform random point of the box `[lo, hi]`.
pub fn point_in_box(rng: &mut impl Rng, lo: &[f64], hi: &[f64]) -> Vec<f64> {
    lo.iter()
        .zip(hi)
        .map(|(&a, &b)| if a < b { rng.gen_range(a..b) } else { a })
        .collect()
}

/// Random matrix `U diag(s) Vᵀ` with singular values in `[1, max_cond)` up to
/// a random overall scale, so `cond < max_cond`.
pub fn matrix_with_condition(rng: &mut impl Rng, n: usize, max_cond: f64) -> DMatrix<f64> {
    let u = orthogonal(rng, n);
    let v = orthogonal(rng, n);
    let scale = rng.gen_range(0.5..2.0);
    let s = DMatrix::from_diagonal(&nalgebra::DVector::from_fn(n, |i, _| {
        if i == 0 {
            scale
        } else {
            scale * rng.gen_range(1.0..max_cond)
        }
    }));
    u * s * v.transpose()
}

/// Haar-ish random orthogonal matrix from the QR factorization of a Gaussian-like draw.
pub fn orthogonal(rng: &mut impl Rng, n: usize) -> DMatrix<f64> {
    let m = DMatrix::from_fn(n, n, |_, _| {
        // Box–Muller keeps the draw rotation invariant
        let a: f64 = rng.gen_range(f64::EPSILON..1.0);
        let b: f64 = rng.gen_range(0.0..1.0);
        (-2.0 * a.ln()).sqrt() * (2.0 * PI * b).cos()
    });
    let qr = m.qr();
    let (q, r) = (qr.q(), qr.r());
    let signs = DMatrix::from_diagonal(&nalgebra::DVector::from_fn(n, |i, _| r[(i, i)].signum()));
    q * signs
}

/// SplitMix64 finalizer, used to derive independent child seeds.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Child seed for item `index` of a batch seeded with `seed`.
pub fn child_seed(seed: u64, index: u64) -> u64 {
    splitmix64(seed ^ splitmix64(index))
}
