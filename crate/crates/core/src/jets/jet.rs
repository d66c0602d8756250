use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Arc;

use super::layout::{layout, Layout, MultiIndex};
use super::EvalError;

/// Truncated multivariate Taylor expansion of a scalar at a point.
///
/// The coefficient of multi-index `α` is `∂^α f(p) / α!`. Arithmetic follows
/// truncated power-series semantics: every result is exact up to floating
/// point for all monomials of total degree `<= order`. Binary operations on
/// jets of different orders truncate to the smaller order.
#[derive(Clone)]
pub struct Jet {
    layout: Arc<Layout>,
    coeffs: Vec<f64>,
}

impl fmt::Debug for Jet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Jet")
            .field("dim", &self.layout.dim)
            .field("order", &self.layout.order)
            .field("coeffs", &self.coeffs)
            .finish()
    }
}

impl Jet {
    pub fn constant(dim: usize, order: usize, value: f64) -> Jet {
        let layout = layout(dim, order);
        let mut coeffs = vec![0.0; layout.len()];
        coeffs[0] = value;
        Jet { layout, coeffs }
    }

    /// The coordinate function `v_var` expanded at `value`.
    pub fn variable(dim: usize, order: usize, var: usize, value: f64) -> Jet {
        assert!(var < dim, "variable {var} out of range for dimension {dim}");
        let mut jet = Jet::constant(dim, order, value);
        if order >= 1 {
            jet.coeffs[1 + var] = 1.0;
        }
        jet
    }

    /// Coordinate jets for every variable of `point`.
    pub fn variables(point: &[f64], order: usize) -> Vec<Jet> {
        let dim = point.len();
        point
            .iter()
            .enumerate()
            .map(|(i, &v)| Jet::variable(dim, order, i, v))
            .collect()
    }

    /// Builds a jet from `(index, coefficient)` pairs; unspecified entries are zero.
    pub fn from_coefficients<'a>(
        dim: usize,
        order: usize,
        entries: impl IntoIterator<Item = (&'a MultiIndex, f64)>,
    ) -> Jet {
        let mut jet = Jet::constant(dim, order, 0.0);
        for (m, c) in entries {
            let i = jet
                .layout
                .index_of(m)
                .unwrap_or_else(|| panic!("multi-index {m:?} outside jet table"));
            jet.coeffs[i] = c;
        }
        jet
    }

    pub fn dimension(&self) -> usize {
        self.layout.dim
    }

    pub fn order(&self) -> usize {
        self.layout.order
    }

    pub fn value(&self) -> f64 {
        self.coeffs[0]
    }

    /// Raw Taylor coefficient `∂^α f / α!`; zero above the jet's order.
    pub fn coefficient(&self, index: &MultiIndex) -> f64 {
        self.layout.index_of(index).map_or(0.0, |i| self.coeffs[i])
    }

    /// The partial derivative `∂^α f` at the expansion point.
    pub fn derivative(&self, index: &MultiIndex) -> f64 {
        assert!(
            index.degree() <= self.order(),
            "derivative of degree {} requested from a jet of order {}",
            index.degree(),
            self.order()
        );
        self.coefficient(index) * index.factorial()
    }

    /// `∂^k f / ∂v1 ... ∂vk` given the list of differentiated variables.
    pub fn partial(&self, vars: &[usize]) -> f64 {
        self.derivative(&MultiIndex::from_vars(self.dimension(), vars))
    }

    pub fn gradient(&self) -> Vec<f64> {
        (0..self.dimension()).map(|i| self.partial(&[i])).collect()
    }

    pub fn coefficients(&self) -> impl Iterator<Item = (&MultiIndex, f64)> + '_ {
        self.layout.monomials.iter().zip(self.coeffs.iter().copied())
    }

    pub(crate) fn raw(&self) -> &[f64] {
        &self.coeffs
    }

    /// Drops every monomial of degree above `order`.
    pub fn truncate(&self, order: usize) -> Jet {
        if order >= self.order() {
            return self.clone();
        }
        let layout = layout(self.dimension(), order);
        let coeffs = self.coeffs[..layout.len()].to_vec();
        Jet { layout, coeffs }
    }

    /// Jet of `∂f/∂v_var`, one order lower.
    pub fn diff(&self, var: usize) -> Jet {
        assert!(self.order() >= 1, "cannot differentiate an order-0 jet");
        let target = layout(self.dimension(), self.order() - 1);
        let mut coeffs = vec![0.0; target.len()];
        for &(src, dst, factor) in &self.layout.derivs[var] {
            coeffs[dst as usize] = factor * self.coeffs[src as usize];
        }
        Jet {
            layout: target,
            coeffs,
        }
    }

    /// Repeated differentiation in the listed variables.
    pub fn diff_many(&self, vars: &[usize]) -> Jet {
        vars.iter().fold(self.clone(), |j, &v| j.diff(v))
    }

    fn aligned(&self, other: &Jet) -> (Jet, Jet) {
        assert_eq!(
            self.dimension(),
            other.dimension(),
            "jet dimension mismatch"
        );
        let order = self.order().min(other.order());
        (self.truncate(order), other.truncate(order))
    }

    fn zip_with(&self, other: &Jet, f: impl Fn(f64, f64) -> f64) -> Jet {
        if Arc::ptr_eq(&self.layout, &other.layout) {
            let coeffs = self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(&a, &b)| f(a, b))
                .collect();
            return Jet {
                layout: self.layout.clone(),
                coeffs,
            };
        }
        let (a, b) = self.aligned(other);
        a.zip_with(&b, f)
    }

    fn product(&self, other: &Jet) -> Jet {
        if !Arc::ptr_eq(&self.layout, &other.layout) {
            let (a, b) = self.aligned(other);
            return a.product(&b);
        }
        let layout = &self.layout;
        let mut out = vec![0.0; layout.len()];
        for (ai, row) in layout.products.iter().enumerate() {
            let a = self.coeffs[ai];
            if a == 0.0 {
                continue;
            }
            for &(bi, ci) in row {
                out[ci as usize] += a * other.coeffs[bi as usize];
            }
        }
        Jet {
            layout: layout.clone(),
            coeffs: out,
        }
    }

    fn scaled(&self, s: f64) -> Jet {
        Jet {
            layout: self.layout.clone(),
            coeffs: self.coeffs.iter().map(|c| c * s).collect(),
        }
    }

    /// Evaluates `Σ_k a_k (f - f(p))^k` by Horner's scheme. This is the
    /// truncated composition of a univariate series with `self`.
    fn compose_series(&self, series: &[f64]) -> Jet {
        let mut h = self.clone();
        h.coeffs[0] = 0.0;
        let k = self.order();
        let mut acc = Jet::constant(self.dimension(), k, series[k]);
        for &a in series[..k].iter().rev() {
            acc = acc.product(&h);
            acc.coeffs[0] += a;
        }
        acc
    }

    fn check_finite(self, op: &'static str) -> Result<Jet, EvalError> {
        if self.coeffs.iter().all(|c| c.is_finite()) {
            Ok(self)
        } else {
            Err(EvalError::NonFinite { op })
        }
    }

    pub fn recip(&self) -> Result<Jet, EvalError> {
        let c0 = self.value();
        if c0 == 0.0 || !c0.is_finite() {
            return Err(EvalError::Domain {
                op: "division",
                value: c0,
            });
        }
        let mut series = Vec::with_capacity(self.order() + 1);
        let mut term = 1.0 / c0;
        for _ in 0..=self.order() {
            series.push(term);
            term *= -1.0 / c0;
        }
        self.compose_series(&series).check_finite("division")
    }

    pub fn try_div(&self, rhs: &Jet) -> Result<Jet, EvalError> {
        Ok(self.product(&rhs.recip()?))
    }

    pub fn sqrt(&self) -> Result<Jet, EvalError> {
        let c0 = self.value();
        if c0 <= 0.0 || !c0.is_finite() {
            return Err(EvalError::Domain { op: "sqrt", value: c0 });
        }
        self.compose_series(&binomial_series(0.5, c0, self.order()))
            .check_finite("sqrt")
    }

    pub fn ln(&self) -> Result<Jet, EvalError> {
        let c0 = self.value();
        if c0 <= 0.0 || !c0.is_finite() {
            return Err(EvalError::Domain { op: "log", value: c0 });
        }
        let mut series = vec![c0.ln()];
        let mut p = 1.0;
        for k in 1..=self.order() {
            p *= -1.0 / c0;
            series.push(-p / k as f64);
        }
        self.compose_series(&series).check_finite("log")
    }

    pub fn exp(&self) -> Result<Jet, EvalError> {
        let e0 = self.value().exp();
        let mut series = Vec::with_capacity(self.order() + 1);
        let mut term = e0;
        for k in 0..=self.order() {
            series.push(term);
            term /= (k + 1) as f64;
        }
        self.compose_series(&series).check_finite("exp")
    }

    /// Integer power by repeated squaring; valid at any base value for `n >= 0`.
    pub fn powi(&self, n: i32) -> Result<Jet, EvalError> {
        if n < 0 {
            return self.recip()?.powi(-n);
        }
        let mut result = Jet::constant(self.dimension(), self.order(), 1.0);
        let mut base = self.clone();
        let mut e = n as u32;
        while e > 0 {
            if e & 1 == 1 {
                result = result.product(&base);
            }
            e >>= 1;
            if e > 0 {
                base = base.product(&base);
            }
        }
        result.check_finite("pow")
    }

    /// Real power with a constant exponent. Integer exponents are exact at any
    /// base; other exponents need a positive base.
    pub fn powf(&self, p: f64) -> Result<Jet, EvalError> {
        if p.fract() == 0.0 && p.abs() <= 64.0 {
            return self.powi(p as i32);
        }
        let c0 = self.value();
        if c0 <= 0.0 || !c0.is_finite() {
            return Err(EvalError::Domain { op: "pow", value: c0 });
        }
        self.compose_series(&binomial_series(p, c0, self.order()))
            .check_finite("pow")
    }

    /// Composition `outer ∘ (inner_1, ..., inner_m)`.
    ///
    /// `outer` must be the jet of a function of `m` variables expanded at the
    /// values of `inner`; the result is the jet of the composite in the
    /// variables of `inner`.
    pub fn compose(outer: &Jet, inner: &[Jet]) -> Jet {
        assert_eq!(outer.dimension(), inner.len(), "composition arity mismatch");
        let dim = inner[0].dimension();
        let order = inner
            .iter()
            .map(Jet::order)
            .min()
            .unwrap_or(0)
            .min(outer.order());
        let shifts: Vec<Jet> = inner
            .iter()
            .map(|j| {
                let mut h = j.truncate(order);
                h.coeffs[0] = 0.0;
                h
            })
            .collect();
        // powers[i][k] = shifts[i]^k
        let powers: Vec<Vec<Jet>> = shifts
            .iter()
            .map(|h| {
                let mut v = vec![Jet::constant(dim, order, 1.0)];
                for k in 1..=order {
                    let next = v[k - 1].product(h);
                    v.push(next);
                }
                v
            })
            .collect();
        let mut out = Jet::constant(dim, order, 0.0);
        for (m, c) in outer.coefficients() {
            if c == 0.0 || m.degree() > order {
                continue;
            }
            let mut term = Jet::constant(dim, order, c);
            for (i, e) in m.exponents().enumerate() {
                if e > 0 {
                    term = term.product(&powers[i][e]);
                }
            }
            out = out + term;
        }
        out
    }

    /// Maximum absolute coefficient difference, used by tests.
    pub fn max_abs_diff(&self, other: &Jet) -> f64 {
        let (a, b) = self.aligned(other);
        a.coeffs
            .iter()
            .zip(&b.coeffs)
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max)
    }

    /// Coefficients of a given total degree.
    pub fn homogeneous_part(&self, degree: usize) -> &[f64] {
        &self.coeffs[self.layout.degree_range(degree)]
    }
}

/// Coefficients of `(c0 + h)^p = Σ_k binom(p, k) c0^(p-k) h^k`.
fn binomial_series(p: f64, c0: f64, order: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(order + 1);
    let mut binom = 1.0;
    for k in 0..=order {
        out.push(binom * c0.powf(p - k as f64));
        binom *= (p - k as f64) / (k + 1) as f64;
    }
    out
}

impl Add for Jet {
    type Output = Jet;
    fn add(self, rhs: Jet) -> Jet {
        self.zip_with(&rhs, |a, b| a + b)
    }
}

impl Sub for Jet {
    type Output = Jet;
    fn sub(self, rhs: Jet) -> Jet {
        self.zip_with(&rhs, |a, b| a - b)
    }
}

impl Mul for Jet {
    type Output = Jet;
    fn mul(self, rhs: Jet) -> Jet {
        self.product(&rhs)
    }
}

impl<'a> Add<&'a Jet> for &'a Jet {
    type Output = Jet;
    fn add(self, rhs: &Jet) -> Jet {
        self.zip_with(rhs, |a, b| a + b)
    }
}

impl<'a> Sub<&'a Jet> for &'a Jet {
    type Output = Jet;
    fn sub(self, rhs: &Jet) -> Jet {
        self.zip_with(rhs, |a, b| a - b)
    }
}

impl<'a> Mul<&'a Jet> for &'a Jet {
    type Output = Jet;
    fn mul(self, rhs: &Jet) -> Jet {
        self.product(rhs)
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scaled(-1.0)
    }
}

impl Add<f64> for Jet {
    type Output = Jet;
    fn add(mut self, rhs: f64) -> Jet {
        self.coeffs[0] += rhs;
        self
    }
}

impl Sub<f64> for Jet {
    type Output = Jet;
    fn sub(mut self, rhs: f64) -> Jet {
        self.coeffs[0] -= rhs;
        self
    }
}

impl Mul<f64> for Jet {
    type Output = Jet;
    fn mul(self, rhs: f64) -> Jet {
        self.scaled(rhs)
    }
}

impl Mul<f64> for &Jet {
    type Output = Jet;
    fn mul(self, rhs: f64) -> Jet {
        self.scaled(rhs)
    }
}

/// Numbers that gauge functions can be evaluated over: plain reals and jets.
pub trait Scalar:
    Clone
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Neg<Output = Self>
    + Add<f64, Output = Self>
    + Sub<f64, Output = Self>
    + Mul<f64, Output = Self>
{
    fn value(&self) -> f64;
    /// A constant living in the same space as `self`.
    fn constant_like(&self, c: f64) -> Self;
    fn try_div(&self, rhs: &Self) -> Result<Self, EvalError>;
    fn try_sqrt(&self) -> Result<Self, EvalError>;
    fn try_ln(&self) -> Result<Self, EvalError>;
    fn try_exp(&self) -> Result<Self, EvalError>;
    fn try_powf(&self, p: f64) -> Result<Self, EvalError>;
}

impl Scalar for f64 {
    fn value(&self) -> f64 {
        *self
    }

    fn constant_like(&self, c: f64) -> f64 {
        c
    }

    fn try_div(&self, rhs: &f64) -> Result<f64, EvalError> {
        if *rhs == 0.0 {
            return Err(EvalError::Domain {
                op: "division",
                value: *rhs,
            });
        }
        finite(self / rhs, "division")
    }

    fn try_sqrt(&self) -> Result<f64, EvalError> {
        if *self <= 0.0 {
            return Err(EvalError::Domain {
                op: "sqrt",
                value: *self,
            });
        }
        Ok(self.sqrt())
    }

    fn try_ln(&self) -> Result<f64, EvalError> {
        if *self <= 0.0 {
            return Err(EvalError::Domain {
                op: "log",
                value: *self,
            });
        }
        Ok(self.ln())
    }

    fn try_exp(&self) -> Result<f64, EvalError> {
        finite(self.exp(), "exp")
    }

    fn try_powf(&self, p: f64) -> Result<f64, EvalError> {
        if p.fract() == 0.0 && p.abs() <= 64.0 {
            if p < 0.0 && *self == 0.0 {
                return Err(EvalError::Domain {
                    op: "division",
                    value: 0.0,
                });
            }
            return finite(self.powi(p as i32), "pow");
        }
        if *self <= 0.0 {
            return Err(EvalError::Domain {
                op: "pow",
                value: *self,
            });
        }
        finite(self.powf(p), "pow")
    }
}

fn finite(v: f64, op: &'static str) -> Result<f64, EvalError> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(EvalError::NonFinite { op })
    }
}

impl Scalar for Jet {
    fn value(&self) -> f64 {
        self.coeffs[0]
    }

    fn constant_like(&self, c: f64) -> Jet {
        Jet::constant(self.dimension(), self.order(), c)
    }

    fn try_div(&self, rhs: &Jet) -> Result<Jet, EvalError> {
        Jet::try_div(self, rhs)
    }

    fn try_sqrt(&self) -> Result<Jet, EvalError> {
        self.sqrt()
    }

    fn try_ln(&self) -> Result<Jet, EvalError> {
        self.ln()
    }

    fn try_exp(&self) -> Result<Jet, EvalError> {
        self.exp()
    }

    fn try_powf(&self, p: f64) -> Result<Jet, EvalError> {
        self.powf(p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * (1.0 + b.abs())
    }

    #[test]
    fn product_rule_on_polynomial() {
        // f = y1^2 y2 at (3, 5)
        let v = Jet::variables(&[3.0, 5.0], 4);
        let f = &(&v[0] * &v[0]) * &v[1];
        assert_eq!(f.value(), 45.0);
        assert_eq!(f.partial(&[0, 1]), 6.0);
        assert_eq!(f.partial(&[0, 0]), 10.0);
        assert_eq!(f.partial(&[0, 0, 1]), 2.0);
        assert_eq!(f.partial(&[1, 1]), 0.0);
    }

    #[test]
    fn univariate_series_match_closed_forms() {
        let x = Jet::variable(1, 5, 0, 0.7);
        let e = x.exp().unwrap();
        let s = x.sqrt().unwrap();
        let l = x.ln().unwrap();
        let r = x.recip().unwrap();
        let p = x.powf(-1.5).unwrap();
        for k in 0..=5usize {
            let idx = MultiIndex::new(&[k]);
            assert!(close(e.derivative(&idx), 0.7f64.exp(), 1e-13));
            let falling = |a: f64| (0..k).map(|i| a - i as f64).product::<f64>();
            assert!(close(s.derivative(&idx), falling(0.5) * 0.7f64.powf(0.5 - k as f64), 1e-12));
            assert!(close(p.derivative(&idx), falling(-1.5) * 0.7f64.powf(-1.5 - k as f64), 1e-12));
            assert!(close(r.derivative(&idx), falling(-1.0) * 0.7f64.powf(-1.0 - k as f64), 1e-12));
            if k >= 1 {
                // d^k/dx^k ln x = (-1)^(k-1) (k-1)! x^-k
                let expect = (-1f64).powi(k as i32 - 1)
                    * (1..k).map(|i| i as f64).product::<f64>()
                    * 0.7f64.powi(-(k as i32));
                assert!(close(l.derivative(&idx), expect, 1e-12));
            }
        }
    }

    #[test]
    fn domain_errors_name_the_primitive() {
        let z = Jet::variable(2, 3, 0, 0.0);
        assert!(matches!(z.sqrt(), Err(EvalError::Domain { op: "sqrt", .. })));
        assert!(matches!(z.recip(), Err(EvalError::Domain { op: "division", .. })));
        assert!(matches!((z.clone() - 1.0).ln(), Err(EvalError::Domain { op: "log", .. })));
        assert!(matches!(z.powf(0.5), Err(EvalError::Domain { op: "pow", .. })));
        // integer powers stay valid at zero
        assert_eq!(z.powf(2.0).unwrap().partial(&[0, 0]), 2.0);
    }

    #[test]
    fn mixed_orders_truncate() {
        let a = Jet::variable(2, 4, 0, 1.0);
        let b = Jet::variable(2, 2, 1, 2.0);
        let c = &a * &b;
        assert_eq!(c.order(), 2);
        assert_eq!(c.partial(&[0, 1]), 1.0);
    }

    #[test]
    fn diff_lowers_order() {
        let v = Jet::variables(&[1.0, 2.0], 3);
        let f = (&v[0] * &v[0]) * v[1].clone();
        let fx = f.diff(0);
        assert_eq!(fx.order(), 2);
        assert_eq!(fx.value(), 4.0);
        assert_eq!(fx.partial(&[1]), 2.0);
        assert_eq!(fx.partial(&[0]), 4.0);
    }

    #[test]
    fn composition_matches_direct_evaluation() {
        // outer u(a, b) = a^2 b + 3a, inner a = x + y^2, b = x y
        let x = Jet::variables(&[0.4, -1.2], 4);
        let a = &x[0] + &(&x[1] * &x[1]);
        let b = &x[0] * &x[1];
        let direct = (&(&a * &a) * &b) + a.clone() * 3.0;
        let ab = Jet::variables(&[a.value(), b.value()], 4);
        let outer = (&(&ab[0] * &ab[0]) * &ab[1]) + ab[0].clone() * 3.0;
        let composed = Jet::compose(&outer, &[a, b]);
        assert!(composed.max_abs_diff(&direct) < 1e-12);
    }
}
