use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use super::CentroaffineData;
use crate::tensor::Tensor3;

/// Below this `h`-norm the Tchebychev form is treated as zero.
pub const ZERO_TCHEBYCHEV: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SemiCError {
    #[error("q = {q} equals 1 - n and is excluded")]
    ExcludedQ { q: f64 },
}

/// `|T|² = h^{ab} T_a T_b`.
pub fn vector_norm_sq(t: &DVector<f64>, h: &DMatrix<f64>) -> f64 {
    let h_inv = h.clone().try_inverse().expect("induced metric is invertible");
    (t.transpose() * h_inv * t)[(0, 0)]
}

/// `|C|² = h^{aa'} h^{bb'} h^{cc'} C_abc C_a'b'c'`.
pub fn tensor_norm_sq(c: &Tensor3, h: &DMatrix<f64>) -> f64 {
    let m = c.n;
    let h_inv = h.clone().try_inverse().expect("induced metric is invertible");
    // raise all three indices, then contract
    let mut raised = Tensor3::zeros(m);
    for a in 0..m {
        for b in 0..m {
            for g in 0..m {
                let mut s = 0.0;
                for x in 0..m {
                    for y in 0..m {
                        for z in 0..m {
                            s += h_inv[(a, x)] * h_inv[(b, y)] * h_inv[(g, z)] * c.get(x, y, z);
                        }
                    }
                }
                raised.set(a, b, g, s);
            }
        }
    }
    raised.data.iter().zip(&c.data).map(|(p, q)| p * q).sum()
}

/// `M^q` built from `(h, Ĉ, T̂)` on an `(n−1)`-dimensional tangent space.
pub fn semi_c_tensor(data: &CentroaffineData, q: f64) -> Result<Tensor3, SemiCError> {
    let m = data.c.n;
    let mf = m as f64;
    if (q + mf).abs() < 1e-12 {
        return Err(SemiCError::ExcludedQ { q });
    }
    let t = &data.t;
    let t2 = vector_norm_sq(t, &data.h);
    if t2.sqrt() < ZERO_TCHEBYCHEV {
        return Ok(data.c.clone());
    }
    let h = &data.h;
    let coef = mf / (mf + q);
    let cubic = (q - 2.0) / t2;
    Ok(Tensor3::from_fn(m, |a, b, g| {
        let sym = h[(a, b)] * t[g] + h[(b, g)] * t[a] + h[(g, a)] * t[b];
        data.c.get(a, b, g) - coef * (sym + cubic * t[a] * t[b] * t[g])
    }))
}

/// `‖M^q‖_h`.
pub fn semi_c_residual(data: &CentroaffineData, q: f64) -> Result<f64, SemiCError> {
    let mq = semi_c_tensor(data, q)?;
    Ok(tensor_norm_sq(&mq, &data.h).max(0.0).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BestFitQ {
    pub q: f64,
    pub residual: f64,
}

/// Minimizes `‖M^q‖_h` over `q ∈ [−(n−2) + 0.01, 10]`: a 241-point grid
/// followed by golden-section refinement around the best node.
pub fn best_fit_q(data: &CentroaffineData) -> BestFitQ {
    let m = data.c.n as f64;
    let lo = -(m - 1.0) + 0.01;
    let hi = 10.0;
    let eval = |q: f64| semi_c_residual(data, q).unwrap_or(f64::INFINITY);
    let nodes = 240;
    let dq = (hi - lo) / nodes as f64;
    let (mut best_q, mut best_r) = (lo, eval(lo));
    for k in 1..=nodes {
        let q = lo + k as f64 * dq;
        let r = eval(q);
        if r < best_r {
            best_q = q;
            best_r = r;
        }
    }
    let (mut a, mut b) = ((best_q - dq).max(lo), (best_q + dq).min(hi));
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - phi * (b - a);
    let mut d = a + phi * (b - a);
    let (mut fc, mut fd) = (eval(c), eval(d));
    for _ in 0..60 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - phi * (b - a);
            fc = eval(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + phi * (b - a);
            fd = eval(d);
        }
    }
    let q = 0.5 * (a + b);
    let r = eval(q);
    if r < best_r {
        BestFitQ { q, residual: r }
    } else {
        BestFitQ {
            q: best_q,
            residual: best_r,
        }
    }
}

/// The cubic form of a semi-C-reducible indicatrix in an orthonormal frame,
/// `C = (n−1)/(n+q−1) [ sym(δ ⊗ T) + (q−2)/|T|² T⊗T⊗T ]`, with `n − 1 = t.len()`.
pub fn synthetic_semi_c(t: &[f64], q: f64) -> Tensor3 {
    let m = t.len();
    let mf = m as f64;
    let t2: f64 = t.iter().map(|x| x * x).sum();
    let coef = mf / (mf + q);
    let delta = |a: usize, b: usize| if a == b { 1.0 } else { 0.0 };
    Tensor3::from_fn(m, |a, b, g| {
        coef * (delta(a, b) * t[g]
            + delta(b, g) * t[a]
            + delta(g, a) * t[b]
            + (q - 2.0) / t2 * t[a] * t[b] * t[g])
    })
}
