//! Closed-form scalar expressions over named coordinates and constants.
//!
//! Grammar (whitespace-insensitive):
//!
//! ```text
//! sum     := product (('+' | '-') product)*
//! product := unary (('*' | '/') unary)*
//! unary   := '-' unary | power
//! power   := atom ('^' unary)?
//! atom    := number | name | name '(' sum ')' | '(' sum ')'
//! ```
//!
//! `^` binds tighter than unary minus, so `-x^2` is `-(x^2)`; its right
//! operand may carry its own sign (`x^-2`) and it associates to the right.
//! Functions: `sin cos exp log sqrt`.

use alloc::boxed::Box;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use crate::error::{Error, Result};
use crate::jet::{self, Jet};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Log,
    Sqrt,
}

impl Func {
    fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "exp" => Func::Exp,
            "log" => Func::Log,
            "sqrt" => Func::Sqrt,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
        }
    }
}

/// Expression tree. Coordinates refer to positions in the coordinate list
/// the expression was parsed against; constants carry their value.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Coord { index: usize, name: String },
    Const { name: String, value: f64 },
    Neg(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
    /// Partial derivative of `inner` along coordinate `index`.
    Partial { index: usize, name: String, inner: Box<Expr> },
}

/// Names an expression may refer to.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Symbols {
    pub coords: Vec<String>,
    pub constants: Vec<(String, f64)>,
}

impl Symbols {
    pub fn new(coords: &[&str]) -> Self {
        Symbols { coords: coords.iter().map(|s| s.to_string()).collect(), constants: Vec::new() }
    }

    pub fn with_constant(mut self, name: &str, value: f64) -> Self {
        self.constants.push((name.to_string(), value));
        self
    }
}

impl Expr {
    pub fn num(v: f64) -> Expr {
        Expr::Num(v)
    }

    pub fn coord(index: usize, name: &str) -> Expr {
        Expr::Coord { index, name: name.to_string() }
    }

    pub fn bin(op: BinOp, a: Expr, b: Expr) -> Expr {
        Expr::Bin(op, Box::new(a), Box::new(b))
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Expr::Num(v) if *v == 0.0)
    }

    /// Largest coordinate index referenced, plus one.
    pub fn arity(&self) -> usize {
        match self {
            Expr::Num(_) | Expr::Const { .. } => 0,
            Expr::Coord { index, .. } => index + 1,
            Expr::Neg(a) | Expr::Call(_, a) => a.arity(),
            Expr::Bin(_, a, b) => a.arity().max(b.arity()),
            Expr::Partial { index, inner, .. } => (index + 1).max(inner.arity()),
        }
    }

    pub fn eval(&self, point: &[f64]) -> Result<f64> {
        Ok(match self {
            Expr::Num(v) => *v,
            Expr::Const { value, .. } => *value,
            Expr::Coord { index, .. } => *point
                .get(*index)
                .ok_or(Error::DimensionMismatch { expected: index + 1, found: point.len() })?,
            Expr::Neg(a) => -a.eval(point)?,
            Expr::Bin(op, a, b) => {
                let (x, y) = (a.eval(point)?, b.eval(point)?);
                match op {
                    BinOp::Add => x + y,
                    BinOp::Sub => x - y,
                    BinOp::Mul => x * y,
                    BinOp::Div => {
                        if y == 0.0 {
                            return Err(Error::Domain("division by zero"));
                        }
                        x / y
                    }
                    BinOp::Pow => jet::pow_value(x, y)?,
                }
            }
            Expr::Call(f, a) => {
                let x = a.eval(point)?;
                match f {
                    Func::Sin => libm::sin(x),
                    Func::Cos => libm::cos(x),
                    Func::Exp => libm::exp(x),
                    Func::Log => {
                        if x <= 0.0 {
                            return Err(Error::Domain("log of a non-positive value"));
                        }
                        libm::log(x)
                    }
                    Func::Sqrt => {
                        if x < 0.0 {
                            return Err(Error::Domain("sqrt of a non-positive value"));
                        }
                        libm::sqrt(x)
                    }
                }
            }
            Expr::Partial { .. } => {
                let coords: Vec<Jet> = point.iter().map(|&v| Jet::constant(v)).collect();
                return self.eval_jet(&coords).map(|j| j.value());
            }
        })
    }

    pub fn eval_jet(&self, coords: &[Jet]) -> Result<Jet> {
        Ok(match self {
            Expr::Num(v) => Jet::constant(*v),
            Expr::Const { value, .. } => Jet::constant(*value),
            Expr::Coord { index, .. } => coords
                .get(*index)
                .ok_or(Error::DimensionMismatch { expected: index + 1, found: coords.len() })?
                .clone(),
            Expr::Neg(a) => -a.eval_jet(coords)?,
            Expr::Bin(op, a, b) => {
                let (x, y) = (a.eval_jet(coords)?, b.eval_jet(coords)?);
                match op {
                    BinOp::Add => x + y,
                    BinOp::Sub => x - y,
                    BinOp::Mul => x * y,
                    BinOp::Div => x.try_div(&y)?,
                    BinOp::Pow => x.pow(&y)?,
                }
            }
            Expr::Call(f, a) => {
                let x = a.eval_jet(coords)?;
                match f {
                    Func::Sin => x.sin(),
                    Func::Cos => x.cos(),
                    Func::Exp => x.exp(),
                    Func::Log => x.ln()?,
                    Func::Sqrt => x.sqrt()?,
                }
            }
            Expr::Partial { index, inner, .. } => partial_jet(inner, *index, coords)?,
        })
    }

    /// Replaces every coordinate with the matching expression.
    pub fn substitute(&self, subs: &[Expr]) -> Expr {
        match self {
            Expr::Coord { index, .. } => subs[*index].clone(),
            Expr::Num(_) | Expr::Const { .. } => self.clone(),
            Expr::Neg(a) => Expr::Neg(Box::new(a.substitute(subs))),
            Expr::Bin(op, a, b) => Expr::bin(*op, a.substitute(subs), b.substitute(subs)),
            Expr::Call(f, a) => Expr::Call(*f, Box::new(a.substitute(subs))),
            Expr::Partial { .. } => panic!("substitution into a derivative node"),
        }
    }
}

/// Derivative of `inner` along coordinate `index`, expanded to the order of
/// `coords`: an extra seed variable carries the direction and is sliced off.
fn partial_jet(inner: &Expr, index: usize, coords: &[Jet]) -> Result<Jet> {
    let nvars = coords.iter().map(Jet::nvars).max().unwrap_or(0);
    let order = coords.iter().filter(|c| c.nvars() > 0).map(Jet::order).min().unwrap_or(0);
    if order >= jet::INTERNAL_ORDER || nvars > jet::MAX_VARS {
        return Err(Error::OrderOutOfRange(order + 1));
    }
    let mut lifted: Vec<Jet> = coords
        .iter()
        .map(|c| {
            if c.nvars() == nvars {
                c.embed_with_extra_var(order + 1)
            } else {
                Jet::constant(c.value()).embed_with_extra_var(order + 1)
            }
        })
        .collect();
    let s = Jet::variable(nvars + 1, order + 1, 0.0, nvars);
    lifted[index] = &lifted[index] + &s;
    Ok(inner.eval_jet(&lifted)?.extra_var_derivative())
}

fn fmt_num(f: &mut fmt::Formatter<'_>, v: f64) -> fmt::Result {
    if v < 0.0 || (v == 0.0 && v.is_sign_negative()) {
        write!(f, "(-{:?})", -v)
    } else {
        write!(f, "{v:?}")
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(v) => fmt_num(f, *v),
            Expr::Coord { name, .. } | Expr::Const { name, .. } => f.write_str(name),
            Expr::Neg(a) => write!(f, "(-{a})"),
            Expr::Bin(op, a, b) => {
                let s = match op {
                    BinOp::Add => "+",
                    BinOp::Sub => "-",
                    BinOp::Mul => "*",
                    BinOp::Div => "/",
                    BinOp::Pow => "^",
                };
                write!(f, "({a} {s} {b})")
            }
            Expr::Call(func, a) => write!(f, "{}({a})", func.name()),
            Expr::Partial { name, inner, .. } => write!(f, "diff({inner}, {name})"),
        }
    }
}

/// Parses `text` against the declared coordinates and constants.
pub fn parse(text: &str, symbols: &Symbols) -> Result<Expr> {
    let mut p = Parser { src: text.as_bytes(), pos: 0, symbols };
    let e = p.sum()?;
    p.skip_ws();
    if p.pos < p.src.len() {
        return Err(p.error("unexpected trailing input"));
    }
    Ok(e)
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    symbols: &'a Symbols,
}

impl Parser<'_> {
    fn error(&self, message: &str) -> Error {
        Error::Syntax { offset: self.pos, message: message.to_string() }
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

    fn sum(&mut self) -> Result<Expr> {
        let mut lhs = self.product()?;
        loop {
            let op = match self.peek() {
                Some(b'+') => BinOp::Add,
                Some(b'-') => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.pos += 1;
            lhs = Expr::bin(op, lhs, self.product()?);
        }
    }

    fn product(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Some(b'*') => BinOp::Mul,
                Some(b'/') => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.pos += 1;
            lhs = Expr::bin(op, lhs, self.unary()?);
        }
    }

    fn unary(&mut self) -> Result<Expr> {
        if self.eat(b'-') {
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr> {
        let base = self.atom()?;
        if self.eat(b'^') {
            return Ok(Expr::bin(BinOp::Pow, base, self.unary()?));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let e = self.sum()?;
                if !self.eat(b')') {
                    return Err(self.error("expected `)`"));
                }
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => self.name(),
            Some(_) => Err(self.error("expected a number, name or `(`")),
            None => Err(self.error("unexpected end of input")),
        }
    }

    fn number(&mut self) -> Result<Expr> {
        let start = self.pos;
        let digits = |p: &mut Self| {
            while p.pos < p.src.len() && p.src[p.pos].is_ascii_digit() {
                p.pos += 1;
            }
        };
        digits(self);
        if self.src.get(self.pos) == Some(&b'.') {
            self.pos += 1;
            digits(self);
        }
        if matches!(self.src.get(self.pos), Some(b'e' | b'E')) {
            let mark = self.pos;
            self.pos += 1;
            if matches!(self.src.get(self.pos), Some(b'+' | b'-')) {
                self.pos += 1;
            }
            let before = self.pos;
            digits(self);
            if self.pos == before {
                self.pos = mark;
            }
        }
        let text = core::str::from_utf8(&self.src[start..self.pos]).expect("ascii");
        match text.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(Expr::Num(v)),
            _ => {
                self.pos = start;
                Err(self.error("malformed or non-finite number"))
            }
        }
    }

    fn name(&mut self) -> Result<Expr> {
        let start = self.pos;
        while self.pos < self.src.len()
            && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_')
        {
            self.pos += 1;
        }
        let name = core::str::from_utf8(&self.src[start..self.pos]).expect("ascii");
        if self.peek() == Some(b'(') {
            let func = Func::from_name(name).ok_or_else(|| Error::UnknownSymbol(name.to_string()))?;
            self.pos += 1;
            let arg = self.sum()?;
            if !self.eat(b')') {
                return Err(self.error("expected `)`"));
            }
            return Ok(Expr::Call(func, Box::new(arg)));
        }
        if let Some(index) = self.symbols.coords.iter().position(|c| c == name) {
            return Ok(Expr::coord(index, name));
        }
        if let Some((_, value)) = self.symbols.constants.iter().find(|(c, _)| c == name) {
            return Ok(Expr::Const { name: name.to_string(), value: *value });
        }
        if Func::from_name(name).is_some() {
            self.pos = start + name.len();
            return Err(Error::Syntax {
                offset: self.pos,
                message: format!("function `{name}` needs an argument"),
            });
        }
        Err(Error::UnknownSymbol(name.to_string()))
    }
}
