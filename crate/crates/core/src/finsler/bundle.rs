use nalgebra::{DMatrix, DVector};

use super::{FinslerMetric, MetricError};
use crate::jets::{jet_eval, Jet};
use crate::tensor::{jet_inverse_det, Tensor3, Tensor4};

/// Every curvature quantity at one point `(x, y)` of the slit tangent bundle.
///
/// Index conventions: `n_conn[(i, j)] = ∂Gⁱ/∂yʲ`; `gamma.get(i, j, k) = Γⁱ_jk`;
/// `b.get(i, j, k, l) = Bⁱ_jkl`; `p.get(i, j, k, l) = Pⁱ_jkl`; `l` is fully
/// lowered.
#[derive(Debug, Clone)]
pub struct CurvatureBundle {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub f: f64,
    pub g: DMatrix<f64>,
    pub g_inv: DMatrix<f64>,
    /// Cartan tensor `¼F[F²]_{yyy}`.
    pub a: Tensor3,
    pub spray: DVector<f64>,
    pub n_conn: DMatrix<f64>,
    pub gamma: Tensor3,
    pub b: Tensor4,
    pub e: DMatrix<f64>,
    pub l: Tensor3,
    pub j: DVector<f64>,
    pub p: Tensor4,
    pub tau: f64,
    pub s: f64,
    pub hdtau: DVector<f64>,
    /// `∂τ/∂yⁱ`, the Cartan form of the fiber norm.
    pub eta: DVector<f64>,
}

/// Jets shared by every curvature computation: `F`, `F²`, `g`, `g⁻¹`,
/// `det g` and the spray, all expanded in the `2n` variables `(x, y)`.
pub(crate) struct SprayJets {
    pub f: Jet,
    pub g: Vec<Vec<Jet>>,
    pub g_inv: Vec<Vec<Jet>>,
    pub det: Jet,
    /// Order `order − 2`.
    pub spray: Vec<Jet>,
}

/// `Gⁱ = ¼ gⁱʲ([F²]_{yʲxᵏ} yᵏ − [F²]_{xʲ})` from a jet of `F` of the given order.
pub(crate) fn spray_jets(
    m: &FinslerMetric,
    x: &[f64],
    y: &[f64],
    order: usize,
) -> Result<SprayJets, MetricError> {
    m.check_point(x, y)?;
    let n = m.dimension();
    let mut point = x.to_vec();
    point.extend_from_slice(y);
    let f = jet_eval(&**m.gauge(), &point, order)?;
    let f2 = &f * &f;
    let fy: Vec<Jet> = (0..n).map(|i| f2.diff(n + i)).collect();
    let g: Vec<Vec<Jet>> = (0..n)
        .map(|i| (0..n).map(|j| fy[i].diff(n + j) * 0.5).collect())
        .collect();
    let not_positive = || MetricError::NotPositive {
        x: x.to_vec(),
        y: y.to_vec(),
    };
    let (g_inv, det) = jet_inverse_det(&g).map_err(|_| not_positive())?;
    if !(det.value() > 0.0) {
        return Err(not_positive());
    }
    let lower = order - 2;
    let y_vars: Vec<Jet> = (0..n)
        .map(|k| Jet::variable(2 * n, lower, n + k, y[k]))
        .collect();
    let w: Vec<Jet> = (0..n)
        .map(|j| {
            let mut s = -f2.diff(j).truncate(lower);
            for (k, yk) in y_vars.iter().enumerate() {
                s = &s + &(&fy[j].diff(k) * yk);
            }
            s
        })
        .collect();
    let spray = (0..n)
        .map(|i| {
            let mut s = Jet::constant(2 * n, lower, 0.0);
            for (j, wj) in w.iter().enumerate() {
                s = &s + &(&g_inv[i][j] * wj);
            }
            s * 0.25
        })
        .collect();
    Ok(SprayJets {
        f,
        g,
        g_inv,
        det,
        spray,
    })
}

/// The full bundle from one fifth-order jet of `F`.
pub fn curvature_bundle(m: &FinslerMetric, x: &[f64], y: &[f64]) -> Result<CurvatureBundle, MetricError> {
    let n = m.dimension();
    let sj = spray_jets(m, x, y, 5)?;
    let f = sj.f.value();
    let f2 = &sj.f * &sj.f;
    let g = DMatrix::from_fn(n, n, |i, j| sj.g[i][j].value());
    let g_inv = DMatrix::from_fn(n, n, |i, j| sj.g_inv[i][j].value());
    let a = Tensor3::from_fn(n, |i, j, k| 0.25 * f * f2.partial(&[n + i, n + j, n + k]));
    let spray = DVector::from_fn(n, |i, _| sj.spray[i].value());

    // order 2
    let n_jets: Vec<Vec<Jet>> = (0..n)
        .map(|i| (0..n).map(|j| sj.spray[i].diff(n + j)).collect())
        .collect();
    let n_conn = DMatrix::from_fn(n, n, |i, j| n_jets[i][j].value());

    let mut b = Tensor4::zeros(n);
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    b.set(i, j, k, l, sj.spray[i].partial(&[n + j, n + k, n + l]));
                }
            }
        }
    }

    let gamma_jets = chern_jets(&sj, &n_jets, n);
    let gamma = Tensor3::from_fn(n, |i, j, k| gamma_jets[i][j][k].value());
    let mut p = Tensor4::zeros(n);
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    p.set(i, j, k, l, -f * gamma_jets[i][j][k].partial(&[n + l]));
                }
            }
        }
    }

    let e = mean_berwald_of(&b);
    let y_low = &g * DVector::from_column_slice(y);
    let l = landsberg_of(&b, &y_low);
    let j = mean_landsberg_of(&l, &g_inv);

    let tau_jet = distortion_jet(m, &sj, x)?;
    let tau = tau_jet.value();
    let dtau_x = DVector::from_fn(n, |i, _| tau_jet.partial(&[i]));
    let eta = DVector::from_fn(n, |i, _| tau_jet.partial(&[n + i]));
    let s = (0..n).map(|i| y[i] * dtau_x[i] - 2.0 * spray[i] * eta[i]).sum();
    let hdtau = horizontal_of(&dtau_x, &eta, &n_conn);

    Ok(CurvatureBundle {
        x: x.to_vec(),
        y: y.to_vec(),
        f,
        g,
        g_inv,
        a,
        spray,
        n_conn,
        gamma,
        b,
        e,
        l,
        j,
        p,
        tau,
        s,
        hdtau,
        eta,
    })
}

/// `Γⁱ_jk = ½ gⁱˡ(δ_k g_lj + δ_j g_lk − δ_l g_jk)` with `δ_k = ∂_{xᵏ} − Nᵐ_k ∂_{yᵐ}`,
/// as jets of order one less than `N`.
fn chern_jets(sj: &SprayJets, n_jets: &[Vec<Jet>], n: usize) -> Vec<Vec<Vec<Jet>>> {
    // delta[l][j][k] = δ_k g_lj
    let delta: Vec<Vec<Vec<Jet>>> = (0..n)
        .map(|l| {
            (0..n)
                .map(|j| {
                    let glj = &sj.g[l][j];
                    (0..n)
                        .map(|k| {
                            let mut s = glj.diff(k);
                            for (mm, row) in n_jets.iter().enumerate() {
                                s = &s - &(&row[k] * &glj.diff(n + mm));
                            }
                            s
                        })
                        .collect()
                })
                .collect()
        })
        .collect();
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    (0..n)
                        .map(|k| {
                            let mut s = Jet::constant(2 * n, n_jets[0][0].order(), 0.0);
                            for l in 0..n {
                                let bracket = &(&delta[l][j][k] + &delta[l][k][j]) - &delta[j][k][l];
                                s = &s + &(&sj.g_inv[i][l] * &bracket);
                            }
                            s * 0.5
                        })
                        .collect()
                })
                .collect()
        })
        .collect()
}

/// `ln(√det g / σ)` as a jet in `(x, y)`.
fn distortion_jet(m: &FinslerMetric, sj: &SprayJets, x: &[f64]) -> Result<Jet, MetricError> {
    let n = x.len();
    let order = sj.det.order();
    let x_jets: Vec<Jet> = (0..n)
        .map(|i| Jet::variable(2 * n, order, i, x[i]))
        .collect();
    let log_sigma = m.volume().log_sigma(&x_jets)?;
    Ok(&(sj.det.ln()? * 0.5) - &log_sigma)
}

fn mean_berwald_of(b: &Tensor4) -> DMatrix<f64> {
    let n = b.n;
    DMatrix::from_fn(n, n, |j, k| 0.5 * (0..n).map(|m| b.get(m, m, j, k)).sum::<f64>())
}

/// `L_jkl = −½ y_i Bⁱ_jkl` with `y_i = g_im yᵐ`.
fn landsberg_of(b: &Tensor4, y_low: &DVector<f64>) -> Tensor3 {
    let n = b.n;
    Tensor3::from_fn(n, |j, k, l| {
        -0.5 * (0..n).map(|i| y_low[i] * b.get(i, j, k, l)).sum::<f64>()
    })
}

/// `J_k = gʲˡ L_jkl`.
fn mean_landsberg_of(l: &Tensor3, g_inv: &DMatrix<f64>) -> DVector<f64> {
    let n = l.n;
    DVector::from_fn(n, |k, _| {
        let mut s = 0.0;
        for j in 0..n {
            for m in 0..n {
                s += g_inv[(j, m)] * l.get(j, k, m);
            }
        }
        s
    })
}

/// `δτ/δxⁱ = ∂τ/∂xⁱ − (∂Gʲ/∂yⁱ) ∂τ/∂yʲ`.
fn horizontal_of(dtau_x: &DVector<f64>, dtau_y: &DVector<f64>, n_conn: &DMatrix<f64>) -> DVector<f64> {
    dtau_x - n_conn.transpose() * dtau_y
}

pub fn spray(m: &FinslerMetric, x: &[f64], y: &[f64]) -> Result<DVector<f64>, MetricError> {
    let sj = spray_jets(m, x, y, 2)?;
    Ok(DVector::from_fn(m.dimension(), |i, _| sj.spray[i].value()))
}

pub fn nonlinear_connection(m: &FinslerMetric, x: &[f64], y: &[f64]) -> Result<DMatrix<f64>, MetricError> {
    let n = m.dimension();
    let sj = spray_jets(m, x, y, 3)?;
    Ok(DMatrix::from_fn(n, n, |i, j| sj.spray[i].partial(&[n + j])))
}

/// `N` together with its fiber derivatives: entry `l` of the returned vector
/// holds `∂N/∂yˡ`.
pub fn connection_with_vertical_derivative(
    m: &FinslerMetric,
    x: &[f64],
    y: &[f64],
) -> Result<(DMatrix<f64>, Vec<DMatrix<f64>>), MetricError> {
    let n = m.dimension();
    let sj = spray_jets(m, x, y, 4)?;
    let conn = DMatrix::from_fn(n, n, |i, j| sj.spray[i].partial(&[n + j]));
    let derivs = (0..n)
        .map(|l| DMatrix::from_fn(n, n, |i, j| sj.spray[i].partial(&[n + j, n + l])))
        .collect();
    Ok((conn, derivs))
}

pub fn chern_coefficients(m: &FinslerMetric, x: &[f64], y: &[f64]) -> Result<Tensor3, MetricError> {
    let n = m.dimension();
    let sj = spray_jets(m, x, y, 4)?;
    let n_jets: Vec<Vec<Jet>> = (0..n)
        .map(|i| (0..n).map(|j| sj.spray[i].diff(n + j)).collect())
        .collect();
    let gamma = chern_jets(&sj, &n_jets, n);
    Ok(Tensor3::from_fn(n, |i, j, k| gamma[i][j][k].value()))
}

pub fn berwald_curvature(m: &FinslerMetric, x: &[f64], y: &[f64]) -> Result<Tensor4, MetricError> {
    let n = m.dimension();
    let sj = spray_jets(m, x, y, 5)?;
    let mut b = Tensor4::zeros(n);
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    b.set(i, j, k, l, sj.spray[i].partial(&[n + j, n + k, n + l]));
                }
            }
        }
    }
    Ok(b)
}

pub fn mean_berwald(m: &FinslerMetric, x: &[f64], y: &[f64]) -> Result<DMatrix<f64>, MetricError> {
    Ok(mean_berwald_of(&berwald_curvature(m, x, y)?))
}

pub fn landsberg_curvature(m: &FinslerMetric, x: &[f64], y: &[f64]) -> Result<Tensor3, MetricError> {
    Ok(curvature_bundle(m, x, y)?.l)
}

pub fn mean_landsberg(m: &FinslerMetric, x: &[f64], y: &[f64]) -> Result<DVector<f64>, MetricError> {
    Ok(curvature_bundle(m, x, y)?.j)
}

pub fn chern_hv_curvature(m: &FinslerMetric, x: &[f64], y: &[f64]) -> Result<Tensor4, MetricError> {
    Ok(curvature_bundle(m, x, y)?.p)
}

pub fn distortion(m: &FinslerMetric, x: &[f64], y: &[f64]) -> Result<f64, MetricError> {
    let sj = spray_jets(m, x, y, 2)?;
    Ok(distortion_jet(m, &sj, x)?.value())
}

pub fn s_curvature(m: &FinslerMetric, x: &[f64], y: &[f64]) -> Result<f64, MetricError> {
    Ok(curvature_bundle(m, x, y)?.s)
}

pub fn horizontal_dtau(m: &FinslerMetric, x: &[f64], y: &[f64]) -> Result<DVector<f64>, MetricError> {
    Ok(curvature_bundle(m, x, y)?.hdtau)
}
