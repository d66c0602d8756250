//! Centroaffine geometry of the indicatrix `{F = 1}` and the linear
//! equivalence problem for Minkowski norms.

mod equivalence;
mod semi_c;

use nalgebra::{DMatrix, DVector};

use crate::jets::{Jet, ScalarField};
use crate::minkowski::{MinkowskiNorm, NormError, NormTensors};
use crate::tensor::Tensor3;

pub use equivalence::{
    blaschke_deicke_residual, cartan_sign_report, equivalence_check, equivalence_solve,
    quadratic_fit, BlaschkeDeicke, EquivalenceError, EquivalenceOptions, EquivalenceResult,
    QuadraticFit, SignReport,
};
pub use semi_c::{
    best_fit_q, semi_c_residual, semi_c_tensor, synthetic_semi_c, tensor_norm_sq, vector_norm_sq,
    BestFitQ, SemiCError, ZERO_TCHEBYCHEV,
};

/// A point `v = u / F(u)` of the indicatrix with a tangent frame.
#[derive(Debug, Clone)]
pub struct IndicatrixPoint {
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    /// Columns span `ker dF(v)`; orthonormal for the induced metric.
    pub basis: DMatrix<f64>,
    pub tensors: NormTensors,
}

/// Induced metric, cubic form and Tchebychev form in the point's frame.
#[derive(Debug, Clone)]
pub struct CentroaffineData {
    pub h: DMatrix<f64>,
    pub c: Tensor3,
    pub t: DVector<f64>,
}

pub fn indicatrix_point(f: &MinkowskiNorm, u: &[f64]) -> Result<IndicatrixPoint, NormError> {
    let fu = f.eval(u)?;
    let v: Vec<f64> = u.iter().map(|c| c / fu).collect();
    let tensors = f.tensors(&v)?;
    let basis = tangent_basis(&tensors, &v);
    Ok(IndicatrixPoint {
        u: u.to_vec(),
        v,
        basis,
        tensors,
    })
}

/// Projects the standard basis onto `ker dF` along `v`, then runs
/// Gram–Schmidt in `ĝ`, always taking the candidate with the largest residual.
fn tangent_basis(t: &NormTensors, v: &[f64]) -> DMatrix<f64> {
    let n = v.len();
    let g_hat = t.g_hat();
    let dfv: f64 = t.df.iter().zip(v).map(|(a, b)| a * b).sum();
    let vv = DVector::from_column_slice(v);
    let mut candidates: Vec<DVector<f64>> = (0..n)
        .map(|i| {
            let e = DVector::from_fn(n, |k, _| if k == i { 1.0 } else { 0.0 });
            &e - &vv * (t.df[i] / dfv)
        })
        .collect();
    let inner = |a: &DVector<f64>, b: &DVector<f64>| (a.transpose() * &g_hat * b)[(0, 0)];
    let mut chosen: Vec<DVector<f64>> = Vec::with_capacity(n - 1);
    for _ in 0..n - 1 {
        let (best, _) = candidates
            .iter()
            .enumerate()
            .map(|(i, c)| (i, inner(c, c)))
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .expect("candidates remain");
        let pick = candidates.swap_remove(best);
        let unit = &pick / inner(&pick, &pick).sqrt();
        for c in candidates.iter_mut() {
            let proj = inner(c, &unit);
            *c -= &unit * proj;
        }
        chosen.push(unit);
    }
    DMatrix::from_columns(&chosen)
}

/// `h_{αβ} = ĝ(b_α, b_β)`.
pub fn induced_metric(p: &IndicatrixPoint) -> DMatrix<f64> {
    p.basis.transpose() * p.tensors.g_hat() * &p.basis
}

/// `𝐡(b_α, b_β)` with `𝐡 = ∇̄dF`, the second route to the induced metric.
pub fn induced_metric_angular(p: &IndicatrixPoint) -> DMatrix<f64> {
    let hess_f = &p.tensors.h / p.tensors.f;
    p.basis.transpose() * hess_f * &p.basis
}

/// `Ĉ = −Â(b, b, b)`.
pub fn cubic_form(p: &IndicatrixPoint) -> Tensor3 {
    p.tensors.a_hat().pullback(&p.basis).scaled(-1.0)
}

/// `T̂ = −η(b) / (n − 1)`.
pub fn tchebychev_form(p: &IndicatrixPoint) -> DVector<f64> {
    let m = p.basis.ncols() as f64;
    -(p.basis.transpose() * &p.tensors.eta) / m
}

/// `T̂_α = h^{βγ} Ĉ_{αβγ} / (n − 1)`.
pub fn tchebychev_from_trace(h: &DMatrix<f64>, c: &Tensor3) -> DVector<f64> {
    let m = c.n;
    let h_inv = h.clone().try_inverse().expect("induced metric is positive definite");
    DVector::from_fn(m, |a, _| {
        let mut s = 0.0;
        for b in 0..m {
            for g in 0..m {
                s += h_inv[(b, g)] * c.get(a, b, g);
            }
        }
        s / m as f64
    })
}

/// `T̂ = d log|ω / ω(h)| / (n − 1)` by central differences in the chart
/// `s ↦ (v + Σ s_α b_α) / F(v + Σ s_α b_α)`.
pub fn tchebychev_from_volume(
    f: &MinkowskiNorm,
    p: &IndicatrixPoint,
    step: f64,
) -> Result<DVector<f64>, NormError> {
    let m = p.basis.ncols();
    let mut out = DVector::zeros(m);
    for a in 0..m {
        let mut s = vec![0.0; m];
        s[a] = step;
        let plus = log_volume_ratio(f, p, &s)?;
        s[a] = -step;
        let minus = log_volume_ratio(f, p, &s)?;
        s[a] = 2.0 * step;
        let plus2 = log_volume_ratio(f, p, &s)?;
        s[a] = -2.0 * step;
        let minus2 = log_volume_ratio(f, p, &s)?;
        // fourth-order central difference
        out[a] = (8.0 * (plus - minus) - (plus2 - minus2)) / (12.0 * step) / m as f64;
    }
    Ok(out)
}

/// Jets of `s ↦ w(s) / F(w(s))` with `w(s) = v + Σ s_α b_α`.
fn chart(f: &MinkowskiNorm, p: &IndicatrixPoint, s: &[f64], order: usize) -> Result<Vec<Jet>, NormError> {
    let m = s.len();
    let w: Vec<Jet> = (0..p.v.len())
        .map(|i| {
            let mut w = Jet::constant(m, order, p.v[i]);
            for (a, &sa) in s.iter().enumerate() {
                w = w + Jet::variable(m, order, a, sa) * p.basis[(i, a)];
            }
            w
        })
        .collect();
    let inv = f.gauge().eval_jet(&w)?.recip()?;
    Ok(w.iter().map(|c| c * &inv).collect())
}

/// Third route to the induced metric: the Gauss formula
/// `∂_α∂_β v = Γ^γ_αβ ∂_γ v − h_αβ v` for the centroaffine normal `−v`,
/// solved from a second-order jet of the chart.
pub fn induced_metric_gauss(f: &MinkowskiNorm, p: &IndicatrixPoint) -> Result<DMatrix<f64>, NormError> {
    let n = p.v.len();
    let m = n - 1;
    let point = chart(f, p, &vec![0.0; m], 2)?;
    let mut frame = DMatrix::zeros(n, n);
    for i in 0..n {
        frame[(i, 0)] = point[i].value();
        for a in 0..m {
            frame[(i, a + 1)] = point[i].partial(&[a]);
        }
    }
    let lu = frame.lu();
    let mut h = DMatrix::zeros(m, m);
    for a in 0..m {
        for b in a..m {
            let second = DVector::from_fn(n, |i, _| point[i].partial(&[a, b]));
            let coef = lu.solve(&second).ok_or(NormError::Singular)?;
            h[(a, b)] = -coef[0];
            h[(b, a)] = -coef[0];
        }
    }
    Ok(h)
}

/// `log( |det(v(s), ∂v/∂s)| / √det h(s) )` at chart parameter `s`.
fn log_volume_ratio(f: &MinkowskiNorm, p: &IndicatrixPoint, s: &[f64]) -> Result<f64, NormError> {
    let n = p.v.len();
    let m = s.len();
    let point = chart(f, p, s, 1)?;
    let v = DVector::from_fn(n, |i, _| point[i].value());
    let dv = DMatrix::from_fn(n, m, |i, a| point[i].partial(&[a]));
    let mut frame = DMatrix::zeros(n, n);
    frame.set_column(0, &v);
    frame.view_mut((0, 1), (n, m)).copy_from(&dv);
    let vs: Vec<f64> = v.iter().copied().collect();
    let g_hat = f.tensors(&vs)?.g_hat();
    let h = dv.transpose() * g_hat * &dv;
    Ok(frame.determinant().abs().ln() - 0.5 * h.determinant().ln())
}

pub fn centroaffine_data(p: &IndicatrixPoint) -> CentroaffineData {
    CentroaffineData {
        h: induced_metric(p),
        c: cubic_form(p),
        t: tchebychev_form(p),
    }
}

#[cfg(test)]
mod tests;
