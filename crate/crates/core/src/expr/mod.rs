//! Text definitions of gauge functions.
//!
//! Grammar (EBNF, whitespace ignored between tokens):
//!
//! ```text
//! expr    = term , { ("+" | "-") , term } ;
//! term    = unary , { ("*" | "/") , unary } ;
//! unary   = "-" , unary | power ;
//! power   = primary , [ "^" , unary ] ;          (* exponent must be constant *)
//! primary = number | variable | func , "(" , expr , ")" | "(" , expr , ")" ;
//! func    = "sqrt" | "exp" | "log" ;
//! variable= ("x" | "y") , digit , { digit } ;     (* 1-based, <= dimension *)
//! number  = digits , [ "." , [digits] ] , [ exponent ] | "." , digits , [ exponent ] ;
//! exponent= ("e" | "E") , [ "+" | "-" ] , digits ;
//! ```

mod parser;

use std::fmt;

use crate::jets::{EvalError, Jet, Scalar, ScalarField};

pub use parser::{parse, ParseError, ParseErrorKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sqrt,
    Exp,
    Log,
}

impl Func {
    fn name(self) -> &'static str {
        match self {
            Func::Sqrt => "sqrt",
            Func::Exp => "exp",
            Func::Log => "log",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Const(f64),
    /// Base coordinate `x{i+1}`.
    X(usize),
    /// Fiber coordinate `y{i+1}`.
    Y(usize),
    Neg(Box<Node>),
    Binary(BinOp, Box<Node>, Box<Node>),
    Pow(Box<Node>, f64),
    Call(Func, Box<Node>),
}

impl Node {
    fn eval<S: Scalar>(&self, x: &[S], y: &[S], unit: &S) -> Result<S, EvalError> {
        Ok(match self {
            Node::Const(c) => unit.constant_like(*c),
            Node::X(i) => x
                .get(*i)
                .cloned()
                .ok_or_else(|| EvalError::Unbound(format!("x{}", i + 1)))?,
            Node::Y(i) => y
                .get(*i)
                .cloned()
                .ok_or_else(|| EvalError::Unbound(format!("y{}", i + 1)))?,
            Node::Neg(a) => -a.eval(x, y, unit)?,
            Node::Binary(op, a, b) => {
                let a = a.eval(x, y, unit)?;
                let b = b.eval(x, y, unit)?;
                match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Div => a.try_div(&b)?,
                }
            }
            Node::Pow(a, p) => a.eval(x, y, unit)?.try_powf(*p)?,
            Node::Call(f, a) => {
                let a = a.eval(x, y, unit)?;
                match f {
                    Func::Sqrt => a.try_sqrt()?,
                    Func::Exp => a.try_exp()?,
                    Func::Log => a.try_ln()?,
                }
            }
        })
    }

    fn visit(&self, f: &mut impl FnMut(&Node)) {
        f(self);
        match self {
            Node::Neg(a) | Node::Pow(a, _) | Node::Call(_, a) => a.visit(f),
            Node::Binary(_, a, b) => {
                a.visit(f);
                b.visit(f);
            }
            _ => {}
        }
    }
}

impl fmt::Display for Node {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Node::Const(c) if *c < 0.0 => write!(f, "(-{})", -c),
            Node::Const(c) => write!(f, "{c}"),
            Node::X(i) => write!(f, "x{}", i + 1),
            Node::Y(i) => write!(f, "y{}", i + 1),
            Node::Neg(a) => write!(f, "(-{a})"),
            Node::Binary(op, a, b) => {
                let sym = match op {
                    BinOp::Add => '+',
                    BinOp::Sub => '-',
                    BinOp::Mul => '*',
                    BinOp::Div => '/',
                };
                write!(f, "({a}{sym}{b})")
            }
            Node::Pow(a, p) if *p < 0.0 => write!(f, "({a})^(-{})", -p),
            Node::Pow(a, p) => write!(f, "({a})^({p})"),
            Node::Call(func, a) => write!(f, "{}({a})", func.name()),
        }
    }
}

/// A parsed gauge definition over `x1..xn, y1..yn`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaugeExpr {
    dimension: usize,
    root: Node,
}

impl GaugeExpr {
    pub fn new(dimension: usize, root: Node) -> Self {
        GaugeExpr { dimension, root }
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn root(&self) -> &Node {
        &self.root
    }

    /// Whether any base coordinate `x_i` appears.
    pub fn uses_base(&self) -> bool {
        let mut found = false;
        self.root.visit(&mut |n| found |= matches!(n, Node::X(_)));
        found
    }

    /// Evaluates with the given bindings; `x` may be empty when no base
    /// coordinate appears.
    pub fn eval<S: Scalar>(&self, x: &[S], y: &[S]) -> Result<S, EvalError> {
        let unit = y
            .first()
            .or_else(|| x.first())
            .ok_or_else(|| EvalError::Unbound("y1".into()))?;
        self.root.eval(x, y, unit)
    }
}

impl fmt::Display for GaugeExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.root.fmt(f)
    }
}

/// A gauge expression in fiber variables only, viewed as a field of `y`.
#[derive(Debug, Clone)]
pub struct FiberField(pub GaugeExpr);

impl ScalarField for FiberField {
    fn dimension(&self) -> usize {
        self.0.dimension
    }
    fn eval_real(&self, point: &[f64]) -> Result<f64, EvalError> {
        self.0.eval(&[], point)
    }
    fn eval_jet(&self, point: &[Jet]) -> Result<Jet, EvalError> {
        self.0.eval(&[], point)
    }
}

/// An expression in base variables only, viewed as a field of `x`.
#[derive(Debug, Clone)]
pub struct BaseField(pub GaugeExpr);

impl ScalarField for BaseField {
    fn dimension(&self) -> usize {
        self.0.dimension
    }
    fn eval_real(&self, point: &[f64]) -> Result<f64, EvalError> {
        self.0.eval(point, &[])
    }
    fn eval_jet(&self, point: &[Jet]) -> Result<Jet, EvalError> {
        self.0.eval(point, &[])
    }
}

/// A gauge expression viewed as a field of `(x1..xn, y1..yn)`.
#[derive(Debug, Clone)]
pub struct BundleField(pub GaugeExpr);

impl ScalarField for BundleField {
    fn dimension(&self) -> usize {
        2 * self.0.dimension
    }
    fn eval_real(&self, point: &[f64]) -> Result<f64, EvalError> {
        let (x, y) = point.split_at(self.0.dimension);
        self.0.eval(x, y)
    }
    fn eval_jet(&self, point: &[Jet]) -> Result<Jet, EvalError> {
        let (x, y) = point.split_at(self.0.dimension);
        self.0.eval(x, y)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jets::jet_eval;

    #[test]
    fn randers_text_evaluates() {
        let e = parse("sqrt(y1^2+y2^2)+0.5*y1", 2).unwrap();
        assert_eq!(e.eval::<f64>(&[], &[1.0, 0.0]).unwrap(), 1.5);
        assert!(!e.uses_base());
    }

    #[test]
    fn base_dependent_text_evaluates() {
        let e = parse("sqrt(y1^2+exp(2*x1)*y2^2)", 2).unwrap();
        let v = e.eval::<f64>(&[1.0, 0.0], &[1.0, 1.0]).unwrap();
        assert!((v - (1.0 + 1f64.exp().powi(2)).sqrt()).abs() < 1e-14);
        assert!(e.uses_base());
    }

    #[test]
    fn sum_binding() {
        let e = parse("y1+y2", 2).unwrap();
        assert_eq!(e.eval::<f64>(&[], &[2.0, 3.0]).unwrap(), 5.0);
    }

    #[test]
    fn jet_gradient_of_norm() {
        let e = parse("sqrt(y1^2+y2^2)", 2).unwrap();
        let j = jet_eval(&FiberField(e), &[3.0, 4.0], 2).unwrap();
        assert!((j.partial(&[0]) - 0.6).abs() < 1e-15);
        assert!((j.partial(&[1]) - 0.8).abs() < 1e-15);
    }

    #[test]
    fn missing_binding_is_reported() {
        let e = parse("x1*y1", 1).unwrap();
        assert_eq!(
            e.eval::<f64>(&[], &[1.0]),
            Err(EvalError::Unbound("x1".into()))
        );
    }

    #[test]
    fn printing_round_trips() {
        for text in [
            "-y1^2",
            "y1^-2.5+3e-4*y2",
            "2^3^0.5*y1",
            "log(exp(y1)/(1+y2))-(-y1)",
            "sqrt(x1)*y1^(1/3)",
        ] {
            let e = parse(text, 2).unwrap();
            let again = parse(&e.to_string(), 2).unwrap();
            assert_eq!(e, again, "{text} -> {e}");
        }
    }
}
