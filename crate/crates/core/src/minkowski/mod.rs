//! Minkowski norms on a single vector space and their fiber tensors.

pub mod catalog;

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::expr::{FiberField, GaugeExpr};
use crate::jets::{jet_eval, EvalError, Jet, ScalarField};
use crate::sampling;
use crate::tensor::{jet_inverse_det, Tensor3};
use catalog::{Euclidean, LinearImage, QuarticSmoothed, Radial, Randers};

/// Names accepted by [`MinkowskiNorm::catalog`].
pub const CATALOG: [&str; 4] = ["euclidean", "randers", "quartic-smoothed", "linear-image"];

pub const DEFAULT_QUARTIC_EPS: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NormError {
    #[error("unknown norm '{0}'")]
    UnknownName(String),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("dimension must be at least 2, got {0}")]
    Dimension(usize),
    #[error("the zero vector is outside the domain of a norm")]
    ZeroVector,
    #[error("fundamental tensor is singular")]
    Singular,
    #[error("not strongly convex: min eigenvalue {min_eigenvalue:.3e} of g at direction {witness:?}")]
    NotConvex {
        min_eigenvalue: f64,
        witness: Vec<f64>,
    },
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// A positively 1-homogeneous gauge `F` on `R^n`.
#[derive(Clone)]
pub struct MinkowskiNorm {
    label: String,
    params: Vec<f64>,
    gauge: Arc<dyn ScalarField>,
}

impl fmt::Debug for MinkowskiNorm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MinkowskiNorm")
            .field("label", &self.label)
            .field("dimension", &self.dimension())
            .field("params", &self.params)
            .finish()
    }
}

impl MinkowskiNorm {
    pub fn new(
        label: impl Into<String>,
        params: Vec<f64>,
        gauge: Arc<dyn ScalarField>,
    ) -> Result<Self, NormError> {
        let n = gauge.dimension();
        if n < 2 {
            return Err(NormError::Dimension(n));
        }
        Ok(MinkowskiNorm {
            label: label.into(),
            params,
            gauge,
        })
    }

    /// Built-in norm families.
    ///
    /// * `euclidean`: no parameters.
    /// * `randers`: `params = b`, requires `|b| < 1`.
    /// * `quartic-smoothed`: `params = [ε]` (default 0.1), requires `ε > 0`.
    /// * `linear-image`: Euclidean norm composed with the `n × n` matrix
    ///   given row-major in `params`.
    pub fn catalog(name: &str, n: usize, params: &[f64]) -> Result<Self, NormError> {
        if n < 2 {
            return Err(NormError::Dimension(n));
        }
        match name {
            "euclidean" => {
                expect_len(name, params, &[0])?;
                Self::new(name, vec![], Arc::new(Euclidean { n }))
            }
            "randers" => Self::randers(params.to_vec()).and_then(|f| {
                if f.dimension() == n {
                    Ok(f)
                } else {
                    Err(NormError::InvalidParams(format!(
                        "randers drift has {} components, expected {n}",
                        params.len()
                    )))
                }
            }),
            "quartic-smoothed" => {
                expect_len(name, params, &[0, 1])?;
                let eps = params.first().copied().unwrap_or(DEFAULT_QUARTIC_EPS);
                if !(eps > 0.0 && eps.is_finite()) {
                    return Err(NormError::InvalidParams(format!(
                        "quartic-smoothed needs eps > 0, got {eps}"
                    )));
                }
                Self::new(name, vec![eps], Arc::new(QuarticSmoothed { n, eps }))
            }
            "linear-image" => {
                expect_len(name, params, &[n * n])?;
                let m = DMatrix::from_row_slice(n, n, params);
                Self::catalog("euclidean", n, &[])?.linear_image(&m)
            }
            other => Err(NormError::UnknownName(other.to_string())),
        }
    }

    pub fn euclidean(n: usize) -> Self {
        Self::catalog("euclidean", n, &[]).expect("valid dimension")
    }

    pub fn randers(b: Vec<f64>) -> Result<Self, NormError> {
        let len = b.iter().map(|c| c * c).sum::<f64>().sqrt();
        if !(len < 1.0) {
            return Err(NormError::InvalidParams(format!(
                "randers drift must satisfy |b| < 1, got {len}"
            )));
        }
        Self::new("randers", b.clone(), Arc::new(Randers { b }))
    }

    /// `F ∘ L`. Rejects singular `L`.
    pub fn linear_image(&self, matrix: &DMatrix<f64>) -> Result<Self, NormError> {
        let n = self.dimension();
        if matrix.nrows() != n || matrix.ncols() != n {
            return Err(NormError::InvalidParams(format!(
                "linear-image matrix must be {n}x{n}"
            )));
        }
        let s = matrix.singular_values();
        if !(s.min() > 1e-12 * s.max().max(1.0)) {
            return Err(NormError::InvalidParams(
                "linear-image matrix is singular".into(),
            ));
        }
        let mut params = self.params.clone();
        params.extend(matrix.transpose().iter());
        Self::new(
            format!("linear-image({})", self.label),
            params,
            Arc::new(LinearImage {
                inner: self.gauge.clone(),
                matrix: matrix.clone(),
            }),
        )
    }

    /// Norm from a radial function: `F(y) = |y| / ρ(y/|y|)`. The indicatrix
    /// is `{ρ(u) u}`. Strong convexity is checked on a default grid.
    pub fn from_radial(rho: Arc<dyn ScalarField>) -> Result<Self, NormError> {
        let f = Self::new("radial", vec![], Arc::new(Radial { rho }))?;
        let report = check_minkowski(&f, &default_directions(f.dimension()), 1e-10);
        if !report.valid {
            return Err(NormError::NotConvex {
                min_eigenvalue: report.min_eigenvalue,
                witness: report.witness,
            });
        }
        Ok(f)
    }

    /// Norm from a text gauge in `y1..yn`.
    pub fn from_expr(expr: GaugeExpr) -> Result<Self, NormError> {
        if expr.uses_base() {
            return Err(NormError::InvalidParams(
                "a norm gauge cannot depend on base coordinates".into(),
            ));
        }
        let label = expr.to_string();
        Self::new(label, vec![], Arc::new(FiberField(expr)))
    }

    pub fn dimension(&self) -> usize {
        self.gauge.dimension()
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn gauge(&self) -> &Arc<dyn ScalarField> {
        &self.gauge
    }

    pub fn eval(&self, y: &[f64]) -> Result<f64, NormError> {
        check_nonzero(y)?;
        Ok(self.gauge.eval_real(y)?)
    }

    pub fn jet(&self, y: &[f64], order: usize) -> Result<Jet, NormError> {
        check_nonzero(y)?;
        Ok(jet_eval(&*self.gauge, y, order)?)
    }

    pub fn tensors(&self, y: &[f64]) -> Result<NormTensors, NormError> {
        NormTensors::compute(&*self.gauge, y)
    }
}

fn expect_len(name: &str, params: &[f64], allowed: &[usize]) -> Result<(), NormError> {
    if allowed.contains(&params.len()) {
        Ok(())
    } else {
        Err(NormError::InvalidParams(format!(
            "{name} takes {allowed:?} parameters, got {}",
            params.len()
        )))
    }
}

fn check_nonzero(y: &[f64]) -> Result<(), NormError> {
    if y.iter().all(|&c| c == 0.0) {
        Err(NormError::ZeroVector)
    } else {
        Ok(())
    }
}

/// Seeded default grid of 200 directions.
pub fn default_directions(n: usize) -> Vec<Vec<f64>> {
    sampling::directions(n, 200, 0x5eed)
}

/// Fiber tensors of a gauge at a nonzero vector `y`.
#[derive(Debug, Clone)]
pub struct NormTensors {
    pub f: f64,
    /// `∂F/∂y^i`.
    pub df: DVector<f64>,
    /// `g_ij = ½ [F²]_{y^i y^j}`.
    pub g: DMatrix<f64>,
    pub g_inv: DMatrix<f64>,
    /// `A_ijk = ¼ F [F²]_{y^i y^j y^k}`.
    pub a: Tensor3,
    /// `η_i = ∂_{y^i} log √det g`.
    pub eta: DVector<f64>,
    /// `g^{jk} A_ijk / F`, an independent route to `η`.
    pub eta_trace: DVector<f64>,
    /// Angular metric `F F_{y^i y^j}`.
    pub h: DMatrix<f64>,
}

impl NormTensors {
    /// Evaluates every tensor from a single third-order jet of `F` at `y`.
    pub fn compute(gauge: &dyn ScalarField, y: &[f64]) -> Result<Self, NormError> {
        check_nonzero(y)?;
        let n = y.len();
        let fj = jet_eval(gauge, y, 3)?;
        Self::from_jet(&fj, n)
    }

    /// Same as [`NormTensors::compute`] given a jet of `F` of order ≥ 3 in
    /// exactly the `n` fiber variables.
    pub(crate) fn from_jet(fj: &Jet, n: usize) -> Result<Self, NormError> {
        let fj = fj.truncate(3);
        let f = fj.value();
        let f2 = &fj * &fj;
        let df = DVector::from_fn(n, |i, _| fj.partial(&[i]));
        let g = DMatrix::from_fn(n, n, |i, j| 0.5 * f2.partial(&[i, j]));
        let h = DMatrix::from_fn(n, n, |i, j| f * fj.partial(&[i, j]));
        let g_inv = g.clone().try_inverse().ok_or(NormError::Singular)?;
        let a = Tensor3::from_fn(n, |i, j, k| 0.25 * f * f2.partial(&[i, j, k]));

        let g_jets: Vec<Vec<Jet>> = (0..n)
            .map(|i| (0..n).map(|j| f2.diff(i).diff(j) * 0.5).collect())
            .collect();
        let (_, det) = jet_inverse_det(&g_jets).map_err(|_| NormError::Singular)?;
        let log_vol = det.ln().map_err(|_| NormError::Singular)? * 0.5;
        let eta = DVector::from_fn(n, |i, _| log_vol.partial(&[i]));
        let eta_trace = DVector::from_fn(n, |i, _| {
            let mut s = 0.0;
            for j in 0..n {
                for k in 0..n {
                    s += g_inv[(j, k)] * a.get(i, j, k);
                }
            }
            s / f
        });
        Ok(NormTensors {
            f,
            df,
            g,
            g_inv,
            a,
            eta,
            eta_trace,
            h,
        })
    }

    /// `ĝ = g / F²`.
    pub fn g_hat(&self) -> DMatrix<f64> {
        &self.g / (self.f * self.f)
    }

    /// `Â = A / F³`, the 0-homogeneous Cartan tensor (`¼[F²]''' / F²`).
    pub fn a_hat(&self) -> Tensor3 {
        self.a.scaled(1.0 / self.f.powi(3))
    }
}

pub fn fundamental_tensor(f: &MinkowskiNorm, y: &[f64]) -> Result<DMatrix<f64>, NormError> {
    Ok(f.tensors(y)?.g)
}

pub fn cartan_tensor(f: &MinkowskiNorm, y: &[f64]) -> Result<Tensor3, NormError> {
    Ok(f.tensors(y)?.a)
}

pub fn cartan_form(f: &MinkowskiNorm, y: &[f64]) -> Result<DVector<f64>, NormError> {
    Ok(f.tensors(y)?.eta)
}

pub fn angular_metric(f: &MinkowskiNorm, y: &[f64]) -> Result<DMatrix<f64>, NormError> {
    Ok(f.tensors(y)?.h)
}

/// Outcome of [`check_minkowski`].
#[derive(Debug, Clone, PartialEq)]
pub struct MinkowskiCheck {
    /// `max |F(2y) − 2F(y)|`.
    pub homogeneity: f64,
    /// `max |F_{y^i} y^i − F|`.
    pub euler: f64,
    pub min_eigenvalue: f64,
    /// Direction attaining the minimum eigenvalue.
    pub witness: Vec<f64>,
    /// Number of samples where evaluation failed.
    pub failures: usize,
    pub valid: bool,
}

/// Scans `samples` for violations of homogeneity, the Euler identity and
/// positive definiteness of `g`.
pub fn check_minkowski(f: &MinkowskiNorm, samples: &[Vec<f64>], tol: f64) -> MinkowskiCheck {
    let mut out = MinkowskiCheck {
        homogeneity: 0.0,
        euler: 0.0,
        min_eigenvalue: f64::INFINITY,
        witness: Vec::new(),
        failures: 0,
        valid: true,
    };
    for y in samples {
        let step = || -> Result<(f64, f64, f64), NormError> {
            let fy = f.eval(y)?;
            let y2: Vec<f64> = y.iter().map(|c| 2.0 * c).collect();
            let hom = (f.eval(&y2)? - 2.0 * fy).abs();
            let fj = f.jet(y, 2)?;
            let f2 = &fj * &fj;
            let euler = (fj.gradient().iter().zip(y).map(|(d, c)| d * c).sum::<f64>() - fy).abs();
            let n = y.len();
            let g = DMatrix::from_fn(n, n, |i, j| 0.5 * f2.partial(&[i, j]));
            let eig = g.symmetric_eigenvalues().min();
            Ok((hom, euler, eig))
        };
        match step() {
            Ok((hom, euler, eig)) => {
                out.homogeneity = out.homogeneity.max(hom);
                out.euler = out.euler.max(euler);
                if eig < out.min_eigenvalue {
                    out.min_eigenvalue = eig;
                    out.witness = y.clone();
                }
            }
            Err(_) => out.failures += 1,
        }
    }
    out.valid = out.failures == 0
        && out.homogeneity <= tol
        && out.euler <= tol
        && out.min_eigenvalue > 0.0;
    out
}

#[cfg(test)]
mod tests;
