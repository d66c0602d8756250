//! Truncated multivariate Taylor arithmetic and a finite-difference oracle.
//!
//! A [`Jet`] carries every mixed partial derivative of a scalar up to a fixed
//! total order. Gauge functions are written once against the [`Scalar`]
//! trait and evaluate over plain `f64` or over jets.

mod fd;
mod jet;
mod layout;

use thiserror::Error;

pub use fd::{default_step, fd_oracle, fd_oracle_extrapolated, FdEstimate};
pub use jet::{Jet, Scalar};
pub use layout::MultiIndex;

/// Default total order used by [`jet_eval`] callers that do not care.
pub const DEFAULT_ORDER: usize = 6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("{op} is undefined at value {value}")]
    Domain { op: &'static str, value: f64 },
    #[error("{op} produced a non-finite result")]
    NonFinite { op: &'static str },
    #[error("expected {expected} arguments, got {got}")]
    Arity { expected: usize, got: usize },
    #[error("variable {0} is not bound")]
    Unbound(String),
}

/// A scalar function of `dimension()` real variables that can be evaluated on
/// reals and on jets.
pub trait ScalarField: Send + Sync {
    fn dimension(&self) -> usize;
    fn eval_real(&self, point: &[f64]) -> Result<f64, EvalError>;
    fn eval_jet(&self, point: &[Jet]) -> Result<Jet, EvalError>;
}

impl<T: ScalarField + ?Sized> ScalarField for &T {
    fn dimension(&self) -> usize {
        (**self).dimension()
    }
    fn eval_real(&self, point: &[f64]) -> Result<f64, EvalError> {
        (**self).eval_real(point)
    }
    fn eval_jet(&self, point: &[Jet]) -> Result<Jet, EvalError> {
        (**self).eval_jet(point)
    }
}

impl<T: ScalarField + ?Sized> ScalarField for std::sync::Arc<T> {
    fn dimension(&self) -> usize {
        (**self).dimension()
    }
    fn eval_real(&self, point: &[f64]) -> Result<f64, EvalError> {
        (**self).eval_real(point)
    }
    fn eval_jet(&self, point: &[Jet]) -> Result<Jet, EvalError> {
        (**self).eval_jet(point)
    }
}

pub(crate) fn check_arity(expected: usize, got: usize) -> Result<(), EvalError> {
    if expected == got {
        Ok(())
    } else {
        Err(EvalError::Arity { expected, got })
    }
}

/// Taylor expansion of `f` at `point` through total degree `order`.
pub fn jet_eval<F: ScalarField + ?Sized>(
    f: &F,
    point: &[f64],
    order: usize,
) -> Result<Jet, EvalError> {
    check_arity(f.dimension(), point.len())?;
    f.eval_jet(&Jet::variables(point, order))
}

/// Sum of monomials `c · v^α`.
#[derive(Debug, Clone)]
pub struct PolynomialField {
    dim: usize,
    terms: Vec<(f64, MultiIndex)>,
}

impl PolynomialField {
    pub fn new(dim: usize, terms: Vec<(f64, MultiIndex)>) -> Self {
        assert!(terms.iter().all(|(_, m)| m.dimension() == dim));
        PolynomialField { dim, terms }
    }

    pub fn terms(&self) -> &[(f64, MultiIndex)] {
        &self.terms
    }

    fn eval<S: Scalar>(&self, v: &[S]) -> S {
        let zero = v[0].constant_like(0.0);
        self.terms.iter().fold(zero, |acc, (c, m)| {
            let mut term = v[0].constant_like(*c);
            for (i, e) in m.exponents().enumerate() {
                for _ in 0..e {
                    term = term * v[i].clone();
                }
            }
            acc + term
        })
    }
}

impl ScalarField for PolynomialField {
    fn dimension(&self) -> usize {
        self.dim
    }

    fn eval_real(&self, point: &[f64]) -> Result<f64, EvalError> {
        check_arity(self.dim, point.len())?;
        Ok(self.eval(point))
    }

    fn eval_jet(&self, point: &[Jet]) -> Result<Jet, EvalError> {
        check_arity(self.dim, point.len())?;
        Ok(self.eval(point))
    }
}

/// Adapter turning a generic closure pair into a [`ScalarField`].
///
/// Mostly useful in tests and for small hand-written gauges.
pub struct FnField<R, J> {
    dim: usize,
    real: R,
    jet: J,
}

impl<R, J> FnField<R, J>
where
    R: Fn(&[f64]) -> Result<f64, EvalError> + Send + Sync,
    J: Fn(&[Jet]) -> Result<Jet, EvalError> + Send + Sync,
{
    pub fn new(dim: usize, real: R, jet: J) -> Self {
        FnField { dim, real, jet }
    }
}

impl<R, J> ScalarField for FnField<R, J>
where
    R: Fn(&[f64]) -> Result<f64, EvalError> + Send + Sync,
    J: Fn(&[Jet]) -> Result<Jet, EvalError> + Send + Sync,
{
    fn dimension(&self) -> usize {
        self.dim
    }
    fn eval_real(&self, point: &[f64]) -> Result<f64, EvalError> {
        check_arity(self.dim, point.len())?;
        (self.real)(point)
    }
    fn eval_jet(&self, point: &[Jet]) -> Result<Jet, EvalError> {
        check_arity(self.dim, point.len())?;
        (self.jet)(point)
    }
}

/// Builds an [`FnField`] from a single generic function body.
///
/// ```
/// use finsler_core::jets::{generic_field, Scalar, ScalarField};
/// let f = generic_field!(2, |v| Ok(v[0].clone() * v[1].clone()));
/// assert_eq!(f.eval_real(&[2.0, 3.0]).unwrap(), 6.0);
/// ```
#[macro_export]
macro_rules! generic_field {
    ($dim:expr, |$v:ident| $body:expr) => {
        $crate::jets::FnField::new(
            $dim,
            |$v: &[f64]| -> Result<f64, $crate::jets::EvalError> { $body },
            |$v: &[$crate::jets::Jet]| -> Result<$crate::jets::Jet, $crate::jets::EvalError> {
                $body
            },
        )
    };
}
pub use generic_field;
