use thiserror::Error;

use super::{BinOp, Func, GaugeExpr, Node};

const MAX_DEPTH: usize = 200;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseErrorKind {
    #[error("empty input")]
    Empty,
    #[error("unexpected character '{0}'")]
    UnexpectedChar(char),
    #[error("unexpected end of input")]
    UnexpectedEnd,
    #[error("expected '{0}'")]
    Expected(char),
    #[error("unknown identifier '{0}'")]
    UnknownIdentifier(String),
    #[error("variable '{name}' exceeds dimension {dimension}")]
    VariableOutOfRange { name: String, dimension: usize },
    #[error("invalid number '{0}'")]
    InvalidNumber(String),
    #[error("exponent must be a constant expression")]
    NonConstantExponent,
    #[error("expression nested too deeply")]
    TooDeep,
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("{kind} at offset {offset}")]
pub struct ParseError {
    /// Byte offset into the source text.
    pub offset: usize,
    pub kind: ParseErrorKind,
}

/// Parses a gauge definition in `dimension` base and fiber variables.
pub fn parse(text: &str, dimension: usize) -> Result<GaugeExpr, ParseError> {
    let mut p = Parser {
        src: text.as_bytes(),
        text,
        pos: 0,
        depth: 0,
        dimension,
    };
    p.skip_ws();
    if p.pos == p.src.len() {
        return Err(p.error(ParseErrorKind::Empty));
    }
    let root = p.expr()?;
    p.skip_ws();
    if p.pos < p.src.len() {
        return Err(p.unexpected());
    }
    Ok(GaugeExpr::new(dimension, root))
}

struct Parser<'a> {
    src: &'a [u8],
    text: &'a str,
    pos: usize,
    depth: usize,
    dimension: usize,
}

impl Parser<'_> {
    fn error(&self, kind: ParseErrorKind) -> ParseError {
        ParseError {
            offset: self.pos,
            kind,
        }
    }

    fn unexpected(&self) -> ParseError {
        match self.text[self.pos..].chars().next() {
            Some(c) => self.error(ParseErrorKind::UnexpectedChar(c)),
            None => self.error(ParseErrorKind::UnexpectedEnd),
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn enter(&mut self) -> Result<(), ParseError> {
        self.depth += 1;
        if self.depth > MAX_DEPTH {
            Err(self.error(ParseErrorKind::TooDeep))
        } else {
            Ok(())
        }
    }

    fn expr(&mut self) -> Result<Node, ParseError> {
        self.enter()?;
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                Some(b'+') => BinOp::Add,
                Some(b'-') => BinOp::Sub,
                _ => break,
            };
            self.pos += 1;
            let rhs = self.term()?;
            lhs = Node::Binary(op, Box::new(lhs), Box::new(rhs));
        }
        self.depth -= 1;
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Node, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Some(b'*') => BinOp::Mul,
                Some(b'/') => BinOp::Div,
                _ => break,
            };
            self.pos += 1;
            let rhs = self.unary()?;
            lhs = Node::Binary(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Node, ParseError> {
        self.enter()?;
        let node = if self.eat(b'-') {
            Node::Neg(Box::new(self.unary()?))
        } else {
            self.power()?
        };
        self.depth -= 1;
        Ok(node)
    }

    fn power(&mut self) -> Result<Node, ParseError> {
        let base = self.primary()?;
        if !self.eat(b'^') {
            return Ok(base);
        }
        self.skip_ws();
        let start = self.pos;
        let exponent = self.unary()?;
        match fold_constant(&exponent) {
            Some(p) if p.is_finite() => Ok(Node::Pow(Box::new(base), p)),
            _ => Err(ParseError {
                offset: start,
                kind: ParseErrorKind::NonConstantExponent,
            }),
        }
    }

    fn primary(&mut self) -> Result<Node, ParseError> {
        match self.peek() {
            None => Err(self.error(ParseErrorKind::UnexpectedEnd)),
            Some(b'(') => {
                self.pos += 1;
                let inner = self.expr()?;
                if !self.eat(b')') {
                    return Err(self.error(ParseErrorKind::Expected(')')));
                }
                Ok(inner)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() => self.identifier(),
            Some(_) => Err(self.unexpected()),
        }
    }

    fn number(&mut self) -> Result<Node, ParseError> {
        let start = self.pos;
        let digits = |p: &mut Self| {
            let s = p.pos;
            while p.pos < p.src.len() && p.src[p.pos].is_ascii_digit() {
                p.pos += 1;
            }
            p.pos - s
        };
        let mut count = digits(self);
        if self.src.get(self.pos) == Some(&b'.') {
            self.pos += 1;
            count += digits(self);
        }
        if count == 0 {
            self.pos = start;
            return Err(self.unexpected());
        }
        if matches!(self.src.get(self.pos), Some(b'e' | b'E')) {
            let mark = self.pos;
            self.pos += 1;
            if matches!(self.src.get(self.pos), Some(b'+' | b'-')) {
                self.pos += 1;
            }
            if digits(self) == 0 {
                self.pos = mark;
            }
        }
        let lexeme = &self.text[start..self.pos];
        match lexeme.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(Node::Const(v)),
            _ => Err(ParseError {
                offset: start,
                kind: ParseErrorKind::InvalidNumber(lexeme.to_string()),
            }),
        }
    }

    fn identifier(&mut self) -> Result<Node, ParseError> {
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_alphanumeric() {
            self.pos += 1;
        }
        let name = &self.text[start..self.pos];
        let func = match name {
            "sqrt" => Some(Func::Sqrt),
            "exp" => Some(Func::Exp),
            "log" => Some(Func::Log),
            _ => None,
        };
        if let Some(func) = func {
            if !self.eat(b'(') {
                return Err(self.error(ParseErrorKind::Expected('(')));
            }
            let arg = self.expr()?;
            if !self.eat(b')') {
                return Err(self.error(ParseErrorKind::Expected(')')));
            }
            return Ok(Node::Call(func, Box::new(arg)));
        }
        let (kind, rest) = name.split_at(1);
        let is_var = matches!(kind, "x" | "y")
            && !rest.is_empty()
            && rest.bytes().all(|b| b.is_ascii_digit());
        if !is_var {
            return Err(ParseError {
                offset: start,
                kind: ParseErrorKind::UnknownIdentifier(name.to_string()),
            });
        }
        let index = rest.parse::<usize>().ok().filter(|&i| i >= 1 && i <= self.dimension);
        let Some(index) = index else {
            return Err(ParseError {
                offset: start,
                kind: ParseErrorKind::VariableOutOfRange {
                    name: name.to_string(),
                    dimension: self.dimension,
                },
            });
        };
        Ok(if kind == "x" {
            Node::X(index - 1)
        } else {
            Node::Y(index - 1)
        })
    }
}

fn fold_constant(node: &Node) -> Option<f64> {
    match node {
        Node::Const(c) => Some(*c),
        Node::X(_) | Node::Y(_) => None,
        Node::Neg(a) => Some(-fold_constant(a)?),
        Node::Binary(op, a, b) => {
            let (a, b) = (fold_constant(a)?, fold_constant(b)?);
            Some(match op {
                BinOp::Add => a + b,
                BinOp::Sub => a - b,
                BinOp::Mul => a * b,
                BinOp::Div => a / b,
            })
        }
        Node::Pow(a, p) => Some(fold_constant(a)?.powf(*p)),
        Node::Call(f, a) => {
            let a = fold_constant(a)?;
            Some(match f {
                Func::Sqrt => a.sqrt(),
                Func::Exp => a.exp(),
                Func::Log => a.ln(),
            })
        }
    }
}
