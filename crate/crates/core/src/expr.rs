//! A small expression language for Lipschitz function descriptors.
//!
//! ```text
//! expr  := term (('+' | '-') term)*
//! term  := unary (('*' | '/') unary)*
//! unary := '-' unary | power
//! power := atom ('^' unary)?          exponent must be constant
//! atom  := number | x1 … xn | t | name '(' expr (',' expr)* ')' | '(' expr ')'
//! name  := abs | sqrt | min | max
//! ```
//!
//! Variables are `x1, x2, …` (1-based, as written in formulas) plus an
//! optional parameter `t`. Evaluation is plain `f64`; [`Expr::gradient`]
//! runs forward-mode differentiation and refuses points on the non-smooth
//! locus (`abs` at 0, ties of `min`/`max`, `sqrt` and fractional powers at 0).

use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

#[derive(Clone, Debug, Error, PartialEq)]
pub enum ExprError {
    #[error("parse error at offset {pos}: {msg}")]
    Parse { pos: usize, msg: String },
    #[error("expression uses x{index} but only {available} coordinates were given")]
    MissingVariable { index: usize, available: usize },
    #[error("not differentiable: {0}")]
    NonSmooth(String),
    #[error("outside the domain: {0}")]
    Domain(String),
}

#[derive(Clone, Debug, PartialEq)]
enum Node {
    Num(f64),
    Var(usize),
    T,
    Neg(Box<Node>),
    Add(Box<Node>, Box<Node>),
    Sub(Box<Node>, Box<Node>),
    Mul(Box<Node>, Box<Node>),
    Div(Box<Node>, Box<Node>),
    Pow(Box<Node>, f64),
    Abs(Box<Node>),
    Min(Box<Node>, Box<Node>),
    Max(Box<Node>, Box<Node>),
}

/// A parsed expression in `x1, …, xn` and `t`.
#[derive(Clone, PartialEq)]
pub struct Expr {
    node: Node,
    source: String,
    n_vars: usize,
    uses_t: bool,
}

impl fmt::Debug for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Expr({:?})", self.source)
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.source)
    }
}

impl Serialize for Expr {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.source)
    }
}

impl<'de> Deserialize<'de> for Expr {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        Expr::parse(&s).map_err(serde::de::Error::custom)
    }
}

impl std::str::FromStr for Expr {
    type Err = ExprError;
    fn from_str(s: &str) -> Result<Self, ExprError> {
        Expr::parse(s)
    }
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn err<T>(&self, msg: impl Into<String>) -> Result<T, ExprError> {
        Err(ExprError::Parse {
            pos: self.pos,
            msg: msg.into(),
        })
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

    fn expect(&mut self, c: u8) -> Result<(), ExprError> {
        if self.eat(c) {
            Ok(())
        } else {
            self.err(format!("expected '{}'", c as char))
        }
    }

    fn expr(&mut self) -> Result<Node, ExprError> {
        let mut lhs = self.term()?;
        loop {
            if self.eat(b'+') {
                lhs = Node::Add(Box::new(lhs), Box::new(self.term()?));
            } else if self.eat(b'-') {
                lhs = Node::Sub(Box::new(lhs), Box::new(self.term()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> Result<Node, ExprError> {
        let mut lhs = self.unary()?;
        loop {
            if self.eat(b'*') {
                lhs = Node::Mul(Box::new(lhs), Box::new(self.unary()?));
            } else if self.eat(b'/') {
                lhs = Node::Div(Box::new(lhs), Box::new(self.unary()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn unary(&mut self) -> Result<Node, ExprError> {
        if self.eat(b'-') {
            return Ok(Node::Neg(Box::new(self.unary()?)));
        }
        if self.eat(b'+') {
            return self.unary();
        }
        self.power()
    }

    fn power(&mut self) -> Result<Node, ExprError> {
        let base = self.atom()?;
        if self.eat(b'^') {
            let at = self.pos;
            let e = self.unary()?;
            let Some(v) = constant_value(&e) else {
                self.pos = at;
                return self.err("exponent must be a constant");
            };
            return Ok(Node::Pow(Box::new(base), v));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Node, ExprError> {
        match self.peek() {
            None => self.err("unexpected end of input"),
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect(b')')?;
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() => {
                let start = self.pos;
                while self.pos < self.src.len() && self.src[self.pos].is_ascii_alphanumeric() {
                    self.pos += 1;
                }
                let name = std::str::from_utf8(&self.src[start..self.pos]).unwrap_or_default().to_string();
                self.ident(&name, start)
            }
            Some(c) => self.err(format!("unexpected '{}'", c as char)),
        }
    }

    fn number(&mut self) -> Result<Node, ExprError> {
        let start = self.pos;
        while self.pos < self.src.len() && (self.src[self.pos].is_ascii_digit() || self.src[self.pos] == b'.') {
            self.pos += 1;
        }
        if self.pos < self.src.len() && (self.src[self.pos] == b'e' || self.src[self.pos] == b'E') {
            let save = self.pos;
            self.pos += 1;
            if self.pos < self.src.len() && (self.src[self.pos] == b'-' || self.src[self.pos] == b'+') {
                self.pos += 1;
            }
            let digits = self.pos;
            while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                self.pos += 1;
            }
            if digits == self.pos {
                self.pos = save;
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap_or_default();
        match text.parse::<f64>() {
            Ok(v) => Ok(Node::Num(v)),
            Err(_) => {
                self.pos = start;
                self.err(format!("bad number '{text}'"))
            }
        }
    }

    fn ident(&mut self, name: &str, start: usize) -> Result<Node, ExprError> {
        if name == "t" {
            return Ok(Node::T);
        }
        if let Some(rest) = name.strip_prefix('x') {
            if let Ok(i) = rest.parse::<usize>() {
                if i == 0 {
                    self.pos = start;
                    return self.err("variables are numbered from x1");
                }
                return Ok(Node::Var(i - 1));
            }
        }
        let arity = match name {
            "abs" | "sqrt" => 1,
            "min" | "max" => 2,
            _ => {
                self.pos = start;
                return self.err(format!("unknown name '{name}'"));
            }
        };
        self.expect(b'(')?;
        let mut args = vec![self.expr()?];
        while self.eat(b',') {
            args.push(self.expr()?);
        }
        self.expect(b')')?;
        if args.len() < arity || (arity == 1 && args.len() > 1) {
            return self.err(format!("{name} takes {arity} argument(s)"));
        }
        let mut it = args.into_iter();
        let first = it.next().expect("nonempty");
        Ok(match name {
            "abs" => Node::Abs(Box::new(first)),
            "sqrt" => Node::Pow(Box::new(first), 0.5),
            // min/max fold left over any number of arguments
            "min" => it.fold(first, |a, b| Node::Min(Box::new(a), Box::new(b))),
            _ => it.fold(first, |a, b| Node::Max(Box::new(a), Box::new(b))),
        })
    }
}

fn constant_value(n: &Node) -> Option<f64> {
    Some(match n {
        Node::Num(v) => *v,
        Node::Var(_) | Node::T => return None,
        Node::Neg(a) => -constant_value(a)?,
        Node::Add(a, b) => constant_value(a)? + constant_value(b)?,
        Node::Sub(a, b) => constant_value(a)? - constant_value(b)?,
        Node::Mul(a, b) => constant_value(a)? * constant_value(b)?,
        Node::Div(a, b) => constant_value(a)? / constant_value(b)?,
        Node::Pow(a, e) => constant_value(a)?.powf(*e),
        Node::Abs(a) => constant_value(a)?.abs(),
        Node::Min(a, b) => constant_value(a)?.min(constant_value(b)?),
        Node::Max(a, b) => constant_value(a)?.max(constant_value(b)?),
    })
}

fn scan(n: &Node, vars: &mut usize, t: &mut bool) {
    match n {
        Node::Num(_) => {}
        Node::Var(i) => *vars = (*vars).max(i + 1),
        Node::T => *t = true,
        Node::Neg(a) | Node::Pow(a, _) | Node::Abs(a) => scan(a, vars, t),
        Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) | Node::Div(a, b) | Node::Min(a, b) | Node::Max(a, b) => {
            scan(a, vars, t);
            scan(b, vars, t);
        }
    }
}

fn is_integer(e: f64) -> bool {
    e.fract() == 0.0 && e.abs() < 1e9
}

fn pow_value(b: f64, e: f64) -> Result<f64, ExprError> {
    if is_integer(e) {
        if b == 0.0 && e < 0.0 {
            return Err(ExprError::Domain(format!("0^{e}")));
        }
        return Ok(b.powi(e as i32));
    }
    if b < 0.0 {
        return Err(ExprError::Domain(format!("({b})^{e}")));
    }
    if b == 0.0 && e < 0.0 {
        return Err(ExprError::Domain(format!("0^{e}")));
    }
    Ok(b.powf(e))
}

/// Value and gradient (in `x1..xn, t`) carried through forward mode.
#[derive(Clone, Debug)]
struct Dual {
    v: f64,
    g: Vec<f64>,
}

impl Dual {
    fn constant(v: f64, len: usize) -> Self {
        Dual { v, g: vec![0.0; len] }
    }

    fn map(self, v: f64, dv: f64) -> Self {
        Dual {
            v,
            g: self.g.into_iter().map(|x| x * dv).collect(),
        }
    }

    fn lin(a: Dual, ca: f64, b: Dual, cb: f64, v: f64) -> Dual {
        Dual {
            v,
            g: a.g.iter().zip(&b.g).map(|(x, y)| ca * x + cb * y).collect(),
        }
    }
}

impl Expr {
    pub fn parse(src: &str) -> Result<Expr, ExprError> {
        let mut p = Parser { src: src.as_bytes(), pos: 0 };
        let node = p.expr()?;
        if p.peek().is_some() {
            return p.err("trailing input");
        }
        let (mut n_vars, mut uses_t) = (0, false);
        scan(&node, &mut n_vars, &mut uses_t);
        Ok(Expr {
            node,
            source: src.trim().to_string(),
            n_vars,
            uses_t,
        })
    }

    pub fn constant(v: f64) -> Expr {
        Expr {
            node: Node::Num(v),
            source: format!("{v}"),
            n_vars: 0,
            uses_t: false,
        }
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    /// One more than the largest coordinate index used.
    pub fn n_vars(&self) -> usize {
        self.n_vars
    }

    pub fn uses_t(&self) -> bool {
        self.uses_t
    }

    pub fn is_constant(&self) -> bool {
        self.n_vars == 0 && !self.uses_t
    }

    fn check(&self, x: &[f64]) -> Result<(), ExprError> {
        if x.len() < self.n_vars {
            return Err(ExprError::MissingVariable {
                index: self.n_vars,
                available: x.len(),
            });
        }
        Ok(())
    }

    /// Value at `(x, t)`. Coordinates beyond those used are ignored.
    pub fn eval(&self, x: &[f64], t: f64) -> Result<f64, ExprError> {
        self.check(x)?;
        eval_node(&self.node, x, t)
    }

    /// Value at `x` for an expression without `t`.
    pub fn eval_x(&self, x: &[f64]) -> Result<f64, ExprError> {
        self.eval(x, f64::NAN)
    }

    /// Value and gradient `(∂/∂x₁, …, ∂/∂x_{len(x)}, ∂/∂t)`.
    pub fn gradient(&self, x: &[f64], t: f64) -> Result<(f64, Vec<f64>), ExprError> {
        self.check(x)?;
        let len = x.len() + 1;
        let d = grad_node(&self.node, x, t, len)?;
        Ok((d.v, d.g))
    }
}

fn eval_node(n: &Node, x: &[f64], t: f64) -> Result<f64, ExprError> {
    Ok(match n {
        Node::Num(v) => *v,
        Node::Var(i) => x[*i],
        Node::T => t,
        Node::Neg(a) => -eval_node(a, x, t)?,
        Node::Add(a, b) => eval_node(a, x, t)? + eval_node(b, x, t)?,
        Node::Sub(a, b) => eval_node(a, x, t)? - eval_node(b, x, t)?,
        Node::Mul(a, b) => eval_node(a, x, t)? * eval_node(b, x, t)?,
        Node::Div(a, b) => {
            let d = eval_node(b, x, t)?;
            if d == 0.0 {
                return Err(ExprError::Domain("division by zero".into()));
            }
            eval_node(a, x, t)? / d
        }
        Node::Pow(a, e) => pow_value(eval_node(a, x, t)?, *e)?,
        Node::Abs(a) => eval_node(a, x, t)?.abs(),
        Node::Min(a, b) => eval_node(a, x, t)?.min(eval_node(b, x, t)?),
        Node::Max(a, b) => eval_node(a, x, t)?.max(eval_node(b, x, t)?),
    })
}

fn grad_node(n: &Node, x: &[f64], t: f64, len: usize) -> Result<Dual, ExprError> {
    Ok(match n {
        Node::Num(v) => Dual::constant(*v, len),
        Node::Var(i) => {
            let mut d = Dual::constant(x[*i], len);
            d.g[*i] = 1.0;
            d
        }
        Node::T => {
            let mut d = Dual::constant(t, len);
            d.g[len - 1] = 1.0;
            d
        }
        Node::Neg(a) => {
            let a = grad_node(a, x, t, len)?;
            let v = -a.v;
            a.map(v, -1.0)
        }
        Node::Add(a, b) => {
            let (a, b) = (grad_node(a, x, t, len)?, grad_node(b, x, t, len)?);
            let v = a.v + b.v;
            Dual::lin(a, 1.0, b, 1.0, v)
        }
        Node::Sub(a, b) => {
            let (a, b) = (grad_node(a, x, t, len)?, grad_node(b, x, t, len)?);
            let v = a.v - b.v;
            Dual::lin(a, 1.0, b, -1.0, v)
        }
        Node::Mul(a, b) => {
            let (a, b) = (grad_node(a, x, t, len)?, grad_node(b, x, t, len)?);
            let (va, vb) = (a.v, b.v);
            Dual::lin(a, vb, b, va, va * vb)
        }
        Node::Div(a, b) => {
            let (a, b) = (grad_node(a, x, t, len)?, grad_node(b, x, t, len)?);
            if b.v == 0.0 {
                return Err(ExprError::Domain("division by zero".into()));
            }
            let (va, vb) = (a.v, b.v);
            Dual::lin(a, 1.0 / vb, b, -va / (vb * vb), va / vb)
        }
        Node::Pow(a, e) => {
            let a = grad_node(a, x, t, len)?;
            if a.v == 0.0 && !(is_integer(*e) && *e >= 1.0) {
                return Err(ExprError::NonSmooth(format!("power {e} at 0")));
            }
            let v = pow_value(a.v, *e)?;
            let dv = if *e == 0.0 { 0.0 } else { e * pow_value(a.v, e - 1.0)? };
            a.map(v, dv)
        }
        Node::Abs(a) => {
            let a = grad_node(a, x, t, len)?;
            if a.v == 0.0 {
                return Err(ExprError::NonSmooth("abs at 0".into()));
            }
            let s = a.v.signum();
            let v = a.v.abs();
            a.map(v, s)
        }
        Node::Min(a, b) | Node::Max(a, b) => {
            let (a, b) = (grad_node(a, x, t, len)?, grad_node(b, x, t, len)?);
            if a.v == b.v {
                return Err(ExprError::NonSmooth("tie in min/max".into()));
            }
            let pick_a = matches!(n, Node::Min(..)) == (a.v < b.v);
            if pick_a {
                a
            } else {
                b
            }
        }
    })
}
