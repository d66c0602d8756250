use std::sync::Arc;

use nalgebra::DMatrix;

use crate::jets::{check_arity, EvalError, Jet, Scalar, ScalarField};

/// Implements [`ScalarField`] for a type with a generic
/// `fn eval<S: Scalar>(&self, v: &[S]) -> Result<S, EvalError>` and a `dim()`.
macro_rules! generic_gauge {
    ($ty:ty) => {
        impl ScalarField for $ty {
            fn dimension(&self) -> usize {
                self.dim()
            }
            fn eval_real(&self, point: &[f64]) -> Result<f64, EvalError> {
                check_arity(self.dim(), point.len())?;
                self.eval(point)
            }
            fn eval_jet(&self, point: &[Jet]) -> Result<Jet, EvalError> {
                check_arity(self.dim(), point.len())?;
                self.eval(point)
            }
        }
    };
}
pub(crate) use generic_gauge;

pub(crate) fn sum_squares<S: Scalar>(v: &[S]) -> S {
    v.iter()
        .skip(1)
        .fold(v[0].clone() * v[0].clone(), |acc, c| acc + c.clone() * c.clone())
}

/// `Σ_j m_ij v_j` for each row `i`.
pub(crate) fn mat_vec<S: Scalar>(m: &DMatrix<f64>, v: &[S]) -> Vec<S> {
    (0..m.nrows())
        .map(|i| {
            (0..m.ncols()).fold(v[0].constant_like(0.0), |acc, j| {
                if m[(i, j)] == 0.0 {
                    acc
                } else {
                    acc + v[j].clone() * m[(i, j)]
                }
            })
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct Euclidean {
    pub n: usize,
}

impl Euclidean {
    fn dim(&self) -> usize {
        self.n
    }
    fn eval<S: Scalar>(&self, v: &[S]) -> Result<S, EvalError> {
        sum_squares(v).try_sqrt()
    }
}
generic_gauge!(Euclidean);

/// `|y| + ⟨b, y⟩`.
#[derive(Debug, Clone)]
pub struct Randers {
    pub b: Vec<f64>,
}

impl Randers {
    fn dim(&self) -> usize {
        self.b.len()
    }
    fn eval<S: Scalar>(&self, v: &[S]) -> Result<S, EvalError> {
        let alpha = sum_squares(v).try_sqrt()?;
        Ok(self
            .b
            .iter()
            .zip(v)
            .fold(alpha, |acc, (&b, y)| acc + y.clone() * b))
    }
}
generic_gauge!(Randers);

/// `(Σ y_i⁴ + ε (Σ y_i²)²)^(1/4)`.
#[derive(Debug, Clone)]
pub struct QuarticSmoothed {
    pub n: usize,
    pub eps: f64,
}

impl QuarticSmoothed {
    fn dim(&self) -> usize {
        self.n
    }
    fn eval<S: Scalar>(&self, v: &[S]) -> Result<S, EvalError> {
        let quartic = v
            .iter()
            .map(|c| {
                let sq = c.clone() * c.clone();
                sq.clone() * sq
            })
            .reduce(|a, b| a + b)
            .expect("nonempty");
        let r2 = sum_squares(v);
        (quartic + r2.clone() * r2 * self.eps).try_powf(0.25)
    }
}
generic_gauge!(QuarticSmoothed);

/// `F(L y)` for an inner gauge `F`.
#[derive(Clone)]
pub struct LinearImage {
    pub inner: Arc<dyn ScalarField>,
    pub matrix: DMatrix<f64>,
}

impl ScalarField for LinearImage {
    fn dimension(&self) -> usize {
        self.matrix.ncols()
    }
    fn eval_real(&self, point: &[f64]) -> Result<f64, EvalError> {
        check_arity(self.dimension(), point.len())?;
        self.inner.eval_real(&mat_vec(&self.matrix, point))
    }
    fn eval_jet(&self, point: &[Jet]) -> Result<Jet, EvalError> {
        check_arity(self.dimension(), point.len())?;
        self.inner.eval_jet(&mat_vec(&self.matrix, point))
    }
}

/// `|y| / ρ(y / |y|)` for a radial function `ρ` on unit directions.
#[derive(Clone)]
pub struct Radial {
    pub rho: Arc<dyn ScalarField>,
}

impl Radial {
    fn eval_generic<S: Scalar>(
        &self,
        v: &[S],
        rho: impl Fn(&[S]) -> Result<S, EvalError>,
    ) -> Result<S, EvalError> {
        let r = sum_squares(v).try_sqrt()?;
        let u: Vec<S> = v.iter().map(|c| c.try_div(&r)).collect::<Result<_, _>>()?;
        r.try_div(&rho(&u)?)
    }
}

impl ScalarField for Radial {
    fn dimension(&self) -> usize {
        self.rho.dimension()
    }
    fn eval_real(&self, point: &[f64]) -> Result<f64, EvalError> {
        check_arity(self.dimension(), point.len())?;
        self.eval_generic(point, |u| self.rho.eval_real(u))
    }
    fn eval_jet(&self, point: &[Jet]) -> Result<Jet, EvalError> {
        check_arity(self.dimension(), point.len())?;
        self.eval_generic(point, |u| self.rho.eval_jet(u))
    }
}

/// `F²` of a gauge, for finite-difference checks of the fundamental tensor.
pub struct Squared<F>(pub F);

impl<F: ScalarField> ScalarField for Squared<F> {
    fn dimension(&self) -> usize {
        self.0.dimension()
    }
    fn eval_real(&self, point: &[f64]) -> Result<f64, EvalError> {
        let f = self.0.eval_real(point)?;
        Ok(f * f)
    }
    fn eval_jet(&self, point: &[Jet]) -> Result<Jet, EvalError> {
        let f = self.0.eval_jet(point)?;
        Ok(&f * &f)
    }
}
