//! Arithmetic expressions over `x`, `y` and the boundary distance `d`.
//!
//! Grammar, loosest binding first:
//!
//! ```text
//! expr  := term (('+' | '-') term)*
//! term  := unary (('*' | '/') unary)*
//! unary := '-' unary | power
//! power := atom ('^' unary)?
//! atom  := number | 'pi' | 'x' | 'y' | 'd' | func '(' expr (',' expr)* ')' | '(' expr ')'
//! ```
//!
//! So `^` is right-associative and `-2^2 = -4`. Raising a negative base to a
//! non-integer power is an evaluation error.

use alloc::boxed::Box;
use alloc::string::{String, ToString};
use alloc::sync::Arc;
use alloc::vec::Vec;
use alloc::{format, vec};
use core::fmt;

use crate::error::{Error, Result};
use crate::grid::{build_grid, Field, Grid};
use crate::math;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Var {
    X,
    Y,
    D,
}

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
    Abs,
    Min,
    Max,
}

impl Func {
    fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "exp" => Func::Exp,
            "log" => Func::Log,
            "abs" => Func::Abs,
            "min" => Func::Min,
            "max" => Func::Max,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Abs => "abs",
            Func::Min => "min",
            Func::Max => "max",
        }
    }

    fn variadic(self) -> bool {
        matches!(self, Func::Min | Func::Max)
    }
}

/// Expression tree.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Pi,
    Var(Var),
    Neg(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Vec<Expr>),
}

impl Expr {
    pub fn eval(&self, x: f64, y: f64, d: f64) -> Result<f64> {
        Ok(match self {
            Expr::Num(v) => *v,
            Expr::Pi => core::f64::consts::PI,
            Expr::Var(Var::X) => x,
            Expr::Var(Var::Y) => y,
            Expr::Var(Var::D) => d,
            Expr::Neg(e) => -e.eval(x, y, d)?,
            Expr::Bin(op, a, b) => {
                let (a, b) = (a.eval(x, y, d)?, b.eval(x, y, d)?);
                match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Div => a / b,
                    BinOp::Pow => {
                        if a < 0.0 && b != math::round(b) {
                            return Err(Error::Eval(format!(
                                "negative base {a} raised to non-integer power {b}"
                            )));
                        }
                        math::powf(a, b)
                    }
                }
            }
            Expr::Call(f, args) => {
                let mut vals = Vec::with_capacity(args.len());
                for a in args {
                    vals.push(a.eval(x, y, d)?);
                }
                match f {
                    Func::Sin => math::sin(vals[0]),
                    Func::Cos => math::cos(vals[0]),
                    Func::Exp => math::exp(vals[0]),
                    Func::Log => math::ln(vals[0]),
                    Func::Abs => vals[0].abs(),
                    Func::Min => vals.into_iter().fold(f64::INFINITY, f64::min),
                    Func::Max => vals.into_iter().fold(f64::NEG_INFINITY, f64::max),
                }
            }
        })
    }

    pub fn uses(&self, var: Var) -> bool {
        match self {
            Expr::Var(v) => *v == var,
            Expr::Num(_) | Expr::Pi => false,
            Expr::Neg(e) => e.uses(var),
            Expr::Bin(_, a, b) => a.uses(var) || b.uses(var),
            Expr::Call(_, args) => args.iter().any(|a| a.uses(var)),
        }
    }
}

/// Fully parenthesized; negative literals print as `(-1.5)`.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(v) if v.is_sign_negative() => write!(f, "(-{:?})", -v),
            Expr::Num(v) => write!(f, "{v:?}"),
            Expr::Pi => f.write_str("pi"),
            Expr::Var(Var::X) => f.write_str("x"),
            Expr::Var(Var::Y) => f.write_str("y"),
            Expr::Var(Var::D) => f.write_str("d"),
            Expr::Neg(e) => write!(f, "(-{e})"),
            Expr::Bin(op, a, b) => {
                let sym = match op {
                    BinOp::Add => "+",
                    BinOp::Sub => "-",
                    BinOp::Mul => "*",
                    BinOp::Div => "/",
                    BinOp::Pow => "^",
                };
                write!(f, "({a} {sym} {b})")
            }
            Expr::Call(func, args) => {
                write!(f, "{}(", func.name())?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{a}")?;
                }
                f.write_str(")")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Sym(u8),
    End,
}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
    tok: Tok,
    tok_start: usize,
}

impl<'a> Parser<'a> {
    fn new(src: &'a str) -> Result<Self> {
        let mut p = Parser {
            src,
            pos: 0,
            tok: Tok::End,
            tok_start: 0,
        };
        p.advance()?;
        Ok(p)
    }

    fn error<T>(&self, offset: usize, message: impl Into<String>) -> Result<T> {
        Err(Error::Parse {
            offset,
            message: message.into(),
        })
    }

    fn advance(&mut self) -> Result<()> {
        let bytes = self.src.as_bytes();
        while self.pos < bytes.len() && bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        self.tok_start = self.pos;
        if self.pos >= bytes.len() {
            self.tok = Tok::End;
            return Ok(());
        }
        let c = bytes[self.pos];
        if c.is_ascii_digit() || c == b'.' {
            let start = self.pos;
            while self.pos < bytes.len()
                && (bytes[self.pos].is_ascii_digit() || bytes[self.pos] == b'.')
            {
                self.pos += 1;
            }
            if self.pos < bytes.len() && (bytes[self.pos] == b'e' || bytes[self.pos] == b'E') {
                let mut k = self.pos + 1;
                if k < bytes.len() && (bytes[k] == b'+' || bytes[k] == b'-') {
                    k += 1;
                }
                if k < bytes.len() && bytes[k].is_ascii_digit() {
                    while k < bytes.len() && bytes[k].is_ascii_digit() {
                        k += 1;
                    }
                    self.pos = k;
                }
            }
            let text = &self.src[start..self.pos];
            match text.parse::<f64>() {
                Ok(v) => self.tok = Tok::Num(v),
                Err(_) => return self.error(start, format!("malformed number `{text}`")),
            }
        } else if c.is_ascii_alphabetic() || c == b'_' {
            let start = self.pos;
            while self.pos < bytes.len()
                && (bytes[self.pos].is_ascii_alphanumeric() || bytes[self.pos] == b'_')
            {
                self.pos += 1;
            }
            self.tok = Tok::Ident(self.src[start..self.pos].to_string());
        } else if b"+-*/^(),".contains(&c) {
            self.pos += 1;
            self.tok = Tok::Sym(c);
        } else {
            let ch = self.src[self.pos..].chars().next().unwrap_or('?');
            return self.error(self.pos, format!("unexpected character `{ch}`"));
        }
        Ok(())
    }

    fn eat(&mut self, sym: u8) -> Result<bool> {
        if self.tok == Tok::Sym(sym) {
            self.advance()?;
            Ok(true)
        } else {
            Ok(false)
        }
    }

    fn expect(&mut self, sym: u8) -> Result<()> {
        if self.eat(sym)? {
            Ok(())
        } else {
            self.error(self.tok_start, format!("expected `{}`", sym as char))
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        loop {
            let op = if self.eat(b'+')? {
                BinOp::Add
            } else if self.eat(b'-')? {
                BinOp::Sub
            } else {
                return Ok(lhs);
            };
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(self.term()?));
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        loop {
            let op = if self.eat(b'*')? {
                BinOp::Mul
            } else if self.eat(b'/')? {
                BinOp::Div
            } else {
                return Ok(lhs);
            };
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(self.unary()?));
        }
    }

    fn unary(&mut self) -> Result<Expr> {
        if self.eat(b'-')? {
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr> {
        let base = self.atom()?;
        if self.eat(b'^')? {
            return Ok(Expr::Bin(
                BinOp::Pow,
                Box::new(base),
                Box::new(self.unary()?),
            ));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr> {
        let start = self.tok_start;
        match core::mem::replace(&mut self.tok, Tok::End) {
            Tok::Num(v) => {
                self.advance()?;
                Ok(Expr::Num(v))
            }
            Tok::Ident(name) => {
                self.advance()?;
                match name.as_str() {
                    "x" => return Ok(Expr::Var(Var::X)),
                    "y" => return Ok(Expr::Var(Var::Y)),
                    "d" => return Ok(Expr::Var(Var::D)),
                    "pi" => return Ok(Expr::Pi),
                    _ => {}
                }
                let Some(func) = Func::from_name(&name) else {
                    return Err(Error::UnknownIdentifier {
                        name,
                        offset: start,
                    });
                };
                self.expect(b'(')?;
                let mut args = vec![self.expr()?];
                while self.eat(b',')? {
                    args.push(self.expr()?);
                }
                self.expect(b')')?;
                let ok = if func.variadic() {
                    args.len() >= 2
                } else {
                    args.len() == 1
                };
                if !ok {
                    return self.error(
                        start,
                        format!("wrong number of arguments to `{}`", func.name()),
                    );
                }
                Ok(Expr::Call(func, args))
            }
            Tok::Sym(b'(') => {
                self.advance()?;
                let e = self.expr()?;
                self.expect(b')')?;
                Ok(e)
            }
            Tok::Sym(c) => {
                self.tok = Tok::Sym(c);
                self.error(start, format!("unexpected `{}`", c as char))
            }
            Tok::End => self.error(start, "unexpected end of input"),
        }
    }
}

/// A parsed expression together with its source text.
#[derive(Debug, Clone, PartialEq)]
pub struct ExprField {
    source: String,
    ast: Expr,
}

/// Grid-sampled infimum and supremum of an expression.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RangeSummary {
    pub inf: f64,
    pub sup: f64,
    pub argmin: usize,
    pub argmax: usize,
    /// Largest deviation of inf or sup on a 4x finer probe grid, when above 1e-3.
    pub probe_disagreement: Option<f64>,
}

pub fn parse(source: &str) -> Result<ExprField> {
    ExprField::parse(source)
}

pub fn eval_on_grid(e: &ExprField, grid: &Arc<Grid>) -> Result<Field> {
    e.eval_on_grid(grid)
}

pub fn range_on_grid(e: &ExprField, grid: &Arc<Grid>, interior_only: bool) -> Result<RangeSummary> {
    e.range_on_grid(grid, interior_only)
}

impl ExprField {
    pub fn parse(source: &str) -> Result<Self> {
        let mut p = Parser::new(source)?;
        let ast = p.expr()?;
        if p.tok != Tok::End {
            return p.error(p.tok_start, "unexpected trailing input");
        }
        Ok(ExprField {
            source: source.to_string(),
            ast,
        })
    }

    pub fn constant(value: f64) -> Self {
        let ast = Expr::Num(value);
        ExprField {
            source: ast.to_string(),
            ast,
        }
    }

    pub fn from_ast(ast: Expr) -> Self {
        ExprField {
            source: ast.to_string(),
            ast,
        }
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn ast(&self) -> &Expr {
        &self.ast
    }

    pub fn eval(&self, x: f64, y: f64, d: f64) -> Result<f64> {
        self.ast.eval(x, y, d)
    }

    /// The value if the expression mentions no variable.
    pub fn as_constant(&self) -> Option<f64> {
        if [Var::X, Var::Y, Var::D].iter().any(|&v| self.ast.uses(v)) {
            None
        } else {
            self.ast.eval(0.0, 0.0, 0.0).ok()
        }
    }

    pub fn eval_on_grid(&self, grid: &Arc<Grid>) -> Result<Field> {
        if grid.dim() == 1 && self.ast.uses(Var::Y) {
            return Err(Error::NoYOnInterval);
        }
        let mut values = Vec::with_capacity(grid.node_count());
        for i in 0..grid.node_count() {
            let (x, y) = grid.coords(i);
            let v = self.ast.eval(x, y, grid.dist()[i])?;
            if !v.is_finite() {
                return Err(Error::NonFinite { node: i, x, y });
            }
            values.push(v);
        }
        Field::new(Arc::clone(grid), values)
    }

    fn scan(&self, grid: &Arc<Grid>, interior_only: bool) -> Result<RangeSummary> {
        let f = self.eval_on_grid(grid)?;
        let mut r = RangeSummary {
            inf: f64::INFINITY,
            sup: f64::NEG_INFINITY,
            argmin: 0,
            argmax: 0,
            probe_disagreement: None,
        };
        for (i, &v) in f.values().iter().enumerate() {
            if interior_only && grid.is_boundary(i) {
                continue;
            }
            if v < r.inf {
                r.inf = v;
                r.argmin = i;
            }
            if v > r.sup {
                r.sup = v;
                r.argmax = i;
            }
        }
        Ok(r)
    }

    pub fn range_on_grid(&self, grid: &Arc<Grid>, interior_only: bool) -> Result<RangeSummary> {
        let mut r = self.scan(grid, interior_only)?;
        if self.as_constant().is_none() {
            let probe = build_grid(*grid.domain(), 4 * (grid.n() - 1) + 1)?;
            // the finer grid is closer to the boundary, where singular
            // expressions may legitimately fail
            if let Ok(fine) = self.scan(&probe, interior_only) {
                let gap = (fine.inf - r.inf).abs().max((fine.sup - r.sup).abs());
                if gap > 1e-3 {
                    log::warn!(
                        "range of `{}` differs by {gap} on the probe grid",
                        self.source
                    );
                    r.probe_disagreement = Some(gap);
                }
            }
        }
        Ok(r)
    }
}

impl fmt::Display for ExprField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.source)
    }
}

impl core::str::FromStr for ExprField {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ExprField::parse(s)
    }
}

#[cfg(feature = "serde")]
impl serde::Serialize for ExprField {
    fn serialize<S: serde::Serializer>(&self, s: S) -> core::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.source)
    }
}

#[cfg(feature = "serde")]
impl<'de> serde::Deserialize<'de> for ExprField {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> core::result::Result<Self, D::Error> {
        struct V;
        impl serde::de::Visitor<'_> for V {
            type Value = ExprField;
            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("an expression string or a number")
            }
            fn visit_str<E: serde::de::Error>(self, v: &str) -> core::result::Result<ExprField, E> {
                ExprField::parse(v).map_err(E::custom)
            }
            fn visit_f64<E: serde::de::Error>(self, v: f64) -> core::result::Result<ExprField, E> {
                Ok(ExprField::constant(v))
            }
            fn visit_i64<E: serde::de::Error>(self, v: i64) -> core::result::Result<ExprField, E> {
                Ok(ExprField::constant(v as f64))
            }
            fn visit_u64<E: serde::de::Error>(self, v: u64) -> core::result::Result<ExprField, E> {
                Ok(ExprField::constant(v as f64))
            }
        }
        d.deserialize_any(V)
    }
}
