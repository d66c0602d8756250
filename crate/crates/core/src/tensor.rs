//! Small dense tensors and jet-valued matrix algebra.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::jets::{EvalError, Jet};

/// Dense `n × n × n` array, index order `(i, j, k)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Tensor3 {
    pub n: usize,
    pub data: Vec<f64>,
}

impl Tensor3 {
    pub fn zeros(n: usize) -> Self {
        Tensor3 {
            n,
            data: vec![0.0; n * n * n],
        }
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize, usize) -> f64) -> Self {
        let mut t = Tensor3::zeros(n);
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    t.data[(i * n + j) * n + k] = f(i, j, k);
                }
            }
        }
        t
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.data[(i * self.n + j) * self.n + k]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, k: usize, v: f64) {
        let n = self.n;
        self.data[(i * n + j) * n + k] = v;
    }

    pub fn max_abs(&self) -> f64 {
        max_abs(&self.data)
    }

    /// Largest deviation from total symmetry.
    pub fn symmetry_defect(&self) -> f64 {
        let n = self.n;
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let v = self.get(i, j, k);
                    for w in [
                        self.get(i, k, j),
                        self.get(j, i, k),
                        self.get(j, k, i),
                        self.get(k, i, j),
                        self.get(k, j, i),
                    ] {
                        worst = worst.max((v - w).abs());
                    }
                }
            }
        }
        worst
    }

    /// `T(u, v, w)`.
    pub fn apply(&self, u: &[f64], v: &[f64], w: &[f64]) -> f64 {
        let n = self.n;
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    s += self.get(i, j, k) * u[i] * v[j] * w[k];
                }
            }
        }
        s
    }

    /// Contraction of the first slot with `v`: `v^i T_ijk`.
    pub fn contract_first(&self, v: &[f64]) -> DMatrix<f64> {
        let n = self.n;
        DMatrix::from_fn(n, n, |j, k| (0..n).map(|i| v[i] * self.get(i, j, k)).sum())
    }

    pub fn scaled(&self, s: f64) -> Tensor3 {
        Tensor3 {
            n: self.n,
            data: self.data.iter().map(|v| v * s).collect(),
        }
    }

    /// Pullback `T(B·, B·, B·)` by the columns of `basis` (`n × m`).
    pub fn pullback(&self, basis: &DMatrix<f64>) -> Tensor3 {
        let m = basis.ncols();
        let cols: Vec<Vec<f64>> = (0..m).map(|a| basis.column(a).iter().copied().collect()).collect();
        Tensor3::from_fn(m, |a, b, c| self.apply(&cols[a], &cols[b], &cols[c]))
    }
}

/// Dense `n⁴` array, index order `(i, j, k, l)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Tensor4 {
    pub n: usize,
    pub data: Vec<f64>,
}

impl Tensor4 {
    pub fn zeros(n: usize) -> Self {
        Tensor4 {
            n,
            data: vec![0.0; n * n * n * n],
        }
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize, l: usize) -> f64 {
        let n = self.n;
        self.data[((i * n + j) * n + k) * n + l]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, k: usize, l: usize, v: f64) {
        let n = self.n;
        self.data[((i * n + j) * n + k) * n + l] = v;
    }

    pub fn max_abs(&self) -> f64 {
        max_abs(&self.data)
    }
}

pub fn max_abs(values: &[f64]) -> f64 {
    values.iter().fold(0.0, |m, v| m.max(v.abs()))
}

pub fn matrix_max_abs(m: &DMatrix<f64>) -> f64 {
    max_abs(m.as_slice())
}

/// Gauss–Jordan inverse and determinant of a jet-valued matrix, with partial
/// pivoting on the degree-0 coefficients.
pub fn jet_inverse_det(m: &[Vec<Jet>]) -> Result<(Vec<Vec<Jet>>, Jet), EvalError> {
    let n = m.len();
    let template = &m[0][0];
    let zero = Jet::constant(template.dimension(), template.order(), 0.0);
    let one = Jet::constant(template.dimension(), template.order(), 1.0);
    let mut a: Vec<Vec<Jet>> = m.to_vec();
    let mut inv: Vec<Vec<Jet>> = (0..n)
        .map(|i| (0..n).map(|j| if i == j { one.clone() } else { zero.clone() }).collect())
        .collect();
    let mut det = one.clone();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&r, &s| a[r][col].value().abs().total_cmp(&a[s][col].value().abs()))
            .expect("non-empty range");
        if a[pivot][col].value() == 0.0 {
            return Err(EvalError::Domain {
                op: "matrix inverse",
                value: 0.0,
            });
        }
        if pivot != col {
            a.swap(pivot, col);
            inv.swap(pivot, col);
            det = -det;
        }
        let p = a[col][col].clone();
        det = &det * &p;
        let r = p.recip()?;
        for j in 0..n {
            a[col][j] = &a[col][j] * &r;
            inv[col][j] = &inv[col][j] * &r;
        }
        for row in 0..n {
            if row == col {
                continue;
            }
            let factor = a[row][col].clone();
            if factor.raw().iter().all(|&c| c == 0.0) {
                continue;
            }
            for j in 0..n {
                a[row][j] = &a[row][j] - &(&factor * &a[col][j]);
                inv[row][j] = &inv[row][j] - &(&factor * &inv[col][j]);
            }
        }
    }
    Ok((inv, det))
}

/// Values of a jet matrix at the expansion point.
pub fn jet_values(m: &[Vec<Jet>]) -> DMatrix<f64> {
    let n = m.len();
    DMatrix::from_fn(n, n, |i, j| m[i][j].value())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jet_inverse_matches_closed_form() {
        // [[a, b], [b, c]] with a = 2 + t, b = t s, c = 3 + s^2 in (t, s)
        let v = Jet::variables(&[0.3, -0.4], 3);
        let a = v[0].clone() + 2.0;
        let b = &v[0] * &v[1];
        let c = (&v[1] * &v[1]) + 3.0;
        let m = vec![vec![a.clone(), b.clone()], vec![b.clone(), c.clone()]];
        let (inv, det) = jet_inverse_det(&m).unwrap();
        let expect_det = &(&a * &c) - &(&b * &b);
        assert!(det.max_abs_diff(&expect_det) < 1e-13);
        let r = expect_det.recip().unwrap();
        assert!(inv[0][0].max_abs_diff(&(&c * &r)) < 1e-13);
        assert!(inv[0][1].max_abs_diff(&(-(&b * &r))) < 1e-13);
        assert!(inv[1][1].max_abs_diff(&(&a * &r)) < 1e-13);
    }

    #[test]
    fn pivoting_handles_zero_leading_entry() {
        let v = Jet::variables(&[0.0], 2);
        let zero = Jet::constant(1, 2, 0.0);
        let one = Jet::constant(1, 2, 1.0);
        let m = vec![vec![v[0].clone(), one.clone()], vec![one, zero]];
        let (inv, det) = jet_inverse_det(&m).unwrap();
        assert_eq!(det.value(), -1.0);
        assert_eq!(inv[1][1].partial(&[0]), -1.0);
    }

    #[test]
    fn symmetry_defect_detects_asymmetry() {
        let mut t = Tensor3::zeros(2);
        t.set(0, 0, 1, 1.0);
        assert_eq!(t.symmetry_defect(), 1.0);
        t.set(0, 1, 0, 1.0);
        t.set(1, 0, 0, 1.0);
        assert_eq!(t.symmetry_defect(), 0.0);
    }
}
