use std::sync::Arc;

use crate::jets::{check_arity, EvalError, Jet, Scalar, ScalarField};
use crate::minkowski::catalog::generic_gauge;
use crate::minkowski::MinkowskiNorm;

/// `F(x, y) = F₀(y)`.
pub(crate) struct LocallyMinkowski {
    n: usize,
    gauge: Arc<dyn ScalarField>,
}

impl LocallyMinkowski {
    pub(crate) fn new(norm: MinkowskiNorm) -> Self {
        LocallyMinkowski {
            n: norm.dimension(),
            gauge: norm.gauge().clone(),
        }
    }
}

impl ScalarField for LocallyMinkowski {
    fn dimension(&self) -> usize {
        2 * self.n
    }
    fn eval_real(&self, point: &[f64]) -> Result<f64, EvalError> {
        check_arity(2 * self.n, point.len())?;
        self.gauge.eval_real(&point[self.n..])
    }
    fn eval_jet(&self, point: &[Jet]) -> Result<Jet, EvalError> {
        check_arity(2 * self.n, point.len())?;
        self.gauge.eval_jet(&point[self.n..])
    }
}

/// `y ↦ F(x₀, y)` for a fixed base point.
pub(crate) struct FrozenBase {
    pub(crate) gauge: Arc<dyn ScalarField>,
    pub(crate) x: Vec<f64>,
}

impl ScalarField for FrozenBase {
    fn dimension(&self) -> usize {
        self.x.len()
    }
    fn eval_real(&self, point: &[f64]) -> Result<f64, EvalError> {
        check_arity(self.x.len(), point.len())?;
        let mut p = self.x.clone();
        p.extend_from_slice(point);
        self.gauge.eval_real(&p)
    }
    fn eval_jet(&self, point: &[Jet]) -> Result<Jet, EvalError> {
        check_arity(self.x.len(), point.len())?;
        let t = &point[0];
        let mut p: Vec<Jet> = self
            .x
            .iter()
            .map(|&c| Jet::constant(t.dimension(), t.order(), c))
            .collect();
        p.extend_from_slice(point);
        self.gauge.eval_jet(&p)
    }
}

/// `α² = (y¹)² + e^{2x¹} Σ_{i≥2} (yⁱ)²`.
fn hyperbolic_alpha<S: Scalar>(v: &[S]) -> Result<S, EvalError> {
    let n = v.len() / 2;
    let (x, y) = v.split_at(n);
    let mut tail = y[1].clone() * y[1].clone();
    for c in &y[2..] {
        tail = tail + c.clone() * c.clone();
    }
    let weight = (x[0].clone() * 2.0).try_exp()?;
    (y[0].clone() * y[0].clone() + weight * tail).try_sqrt()
}

pub(crate) struct RiemannHyperbolic {
    pub(crate) n: usize,
}

impl RiemannHyperbolic {
    fn dim(&self) -> usize {
        2 * self.n
    }
    fn eval<S: Scalar>(&self, v: &[S]) -> Result<S, EvalError> {
        hyperbolic_alpha(v)
    }
}
generic_gauge!(RiemannHyperbolic);

/// Hyperbolic `α` plus the constant one-form `b`.
pub(crate) struct RandersHyperbolic {
    pub(crate) b: Vec<f64>,
}

impl RandersHyperbolic {
    fn dim(&self) -> usize {
        2 * self.b.len()
    }
    fn eval<S: Scalar>(&self, v: &[S]) -> Result<S, EvalError> {
        let y = &v[self.b.len()..];
        Ok(self
            .b
            .iter()
            .zip(y)
            .fold(hyperbolic_alpha(v)?, |acc, (&b, c)| acc + c.clone() * b))
    }
}
generic_gauge!(RandersHyperbolic);

/// `√((y¹)² + (y²)² + e^{2x²}(y³)²) + c y¹` on `R × H²`; `dx¹` is parallel.
pub(crate) struct ProductRanders {
    pub(crate) c: f64,
}

impl ProductRanders {
    fn dim(&self) -> usize {
        6
    }
    fn eval<S: Scalar>(&self, v: &[S]) -> Result<S, EvalError> {
        let (x, y) = v.split_at(3);
        let weight = (x[1].clone() * 2.0).try_exp()?;
        let alpha = (y[0].clone() * y[0].clone()
            + y[1].clone() * y[1].clone()
            + weight * y[2].clone() * y[2].clone())
        .try_sqrt()?;
        Ok(alpha + y[0].clone() * self.c)
    }
}
generic_gauge!(ProductRanders);

/// `σ(x) = e^{rate · x^index}`.
pub(crate) struct ExpCoordinate {
    pub(crate) n: usize,
    pub(crate) index: usize,
    pub(crate) rate: f64,
}

impl ExpCoordinate {
    fn dim(&self) -> usize {
        self.n
    }
    fn eval<S: Scalar>(&self, v: &[S]) -> Result<S, EvalError> {
        (v[self.index].clone() * self.rate).try_exp()
    }
}
generic_gauge!(ExpCoordinate);
