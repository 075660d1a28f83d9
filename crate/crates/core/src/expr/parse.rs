//! Text syntax for expressions.
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := factor (('*' | '/') factor)*
//! factor := '-' factor | base ('^' INT)?
//! base   := NUMBER | VAR | CONST | FUNC '(' expr ')' | '(' expr ')'
//! VAR    := ('x' | 'y') INT
//! CONST  := 'pi' | 'e'
//! FUNC   := 'exp' | 'sin' | 'cos' | 'bump' '\''*
//! ```
//!
//! Decimal literals (with optional exponent) are read as exact rationals.
//! `bump'…'` with `n` primes is the `n`-th derivative of the bump, which is
//! how differentiated expressions print.

use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Pow, Signed, Zero};
use thiserror::Error;

use super::{Constant, Expr, ExprError, Func, Layout, Node, Var};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParseError {
    #[error("syntax error at offset {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unknown identifier `{name}` at offset {offset}")]
    UnknownIdentifier { name: String, offset: usize },
    #[error("variable {var} at offset {offset} is outside the layout ({base} base, {fibre} fibre)")]
    VarOutOfRange {
        var: Var,
        offset: usize,
        base: usize,
        fibre: usize,
    },
    #[error("at offset {offset}: {source}")]
    Invalid { offset: usize, source: ExprError },
}

impl ParseError {
    pub fn offset(&self) -> usize {
        match self {
            ParseError::Syntax { offset, .. }
            | ParseError::UnknownIdentifier { offset, .. }
            | ParseError::VarOutOfRange { offset, .. }
            | ParseError::Invalid { offset, .. } => *offset,
        }
    }
}

/// Parses `text` with variables checked against `layout`.
pub fn parse(text: &str, layout: Layout) -> Result<Expr, ParseError> {
    let mut p = Parser {
        src: text.as_bytes(),
        pos: 0,
        layout,
    };
    let e = p.expr()?;
    p.skip_ws();
    if p.pos < p.src.len() {
        return Err(p.syntax("unexpected trailing input"));
    }
    Ok(e)
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    layout: Layout,
}

impl Parser<'_> {
    fn syntax(&self, message: &str) -> ParseError {
        ParseError::Syntax {
            offset: self.pos,
            message: message.to_string(),
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

    fn expect(&mut self, c: u8) -> Result<(), ParseError> {
        if self.peek() == Some(c) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.syntax(&format!("expected `{}`", c as char)))
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut acc = self.term()?;
        loop {
            match self.peek() {
                Some(b'+') => {
                    self.pos += 1;
                    acc = Expr::add(&acc, &self.term()?);
                }
                Some(b'-') => {
                    self.pos += 1;
                    acc = Expr::sub(&acc, &self.term()?);
                }
                _ => return Ok(acc),
            }
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut acc = self.factor()?;
        loop {
            match self.peek() {
                Some(b'*') => {
                    self.pos += 1;
                    acc = Expr::mul(&acc, &self.factor()?);
                }
                Some(b'/') => {
                    self.pos += 1;
                    let at = self.pos;
                    let den = self.factor()?;
                    acc = Expr::div(&acc, &den).map_err(|source| ParseError::Invalid {
                        offset: at,
                        source,
                    })?;
                }
                _ => return Ok(acc),
            }
        }
    }

    fn factor(&mut self) -> Result<Expr, ParseError> {
        if self.peek() == Some(b'-') {
            self.pos += 1;
            return Ok(Expr::neg(&self.factor()?));
        }
        let base = self.base()?;
        if self.peek() == Some(b'^') {
            self.pos += 1;
            self.skip_ws();
            let start = self.pos;
            while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                self.pos += 1;
            }
            if start == self.pos {
                return Err(self.syntax("expected integer exponent"));
            }
            let digits = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
            let n: u32 = digits.parse().map_err(|_| ParseError::Syntax {
                offset: start,
                message: "exponent too large".into(),
            })?;
            return Ok(Expr::pow(&base, n));
        }
        Ok(base)
    }

    fn base(&mut self) -> Result<Expr, ParseError> {
        match self.peek() {
            None => Err(self.syntax("unexpected end of input")),
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect(b')')?;
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => self.identifier(),
            Some(c) => Err(self.syntax(&format!("unexpected character `{}`", c as char))),
        }
    }

    fn number(&mut self) -> Result<Expr, ParseError> {
        let start = self.pos;
        let digits = |p: &mut Self| {
            let s = p.pos;
            while p.pos < p.src.len() && p.src[p.pos].is_ascii_digit() {
                p.pos += 1;
            }
            std::str::from_utf8(&p.src[s..p.pos]).unwrap().to_string()
        };
        let int_part = digits(self);
        let mut frac_part = String::new();
        if self.src.get(self.pos) == Some(&b'.') {
            self.pos += 1;
            frac_part = digits(self);
        }
        if int_part.is_empty() && frac_part.is_empty() {
            self.pos = start;
            return Err(self.syntax("malformed number"));
        }
        let mut exponent: i64 = 0;
        if matches!(self.src.get(self.pos), Some(b'e' | b'E'))
            && self
                .src
                .get(self.pos + 1)
                .is_some_and(|c| c.is_ascii_digit() || *c == b'+' || *c == b'-')
        {
            self.pos += 1;
            let negative = match self.src.get(self.pos) {
                Some(b'-') => {
                    self.pos += 1;
                    true
                }
                Some(b'+') => {
                    self.pos += 1;
                    false
                }
                _ => false,
            };
            let e = digits(self);
            let magnitude: i64 = e.parse().map_err(|_| ParseError::Syntax {
                offset: start,
                message: "malformed exponent".into(),
            })?;
            exponent = if negative { -magnitude } else { magnitude };
        }
        let mantissa: BigInt = format!("{int_part}{frac_part}")
            .parse()
            .unwrap_or_else(|_| BigInt::zero());
        let scale = exponent - frac_part.len() as i64;
        let ten = BigRational::from_integer(BigInt::from(10));
        let factor = if scale >= 0 {
            Pow::pow(&ten, scale as u64)
        } else {
            Pow::pow(&ten, (-scale) as u64).recip()
        };
        Ok(Expr::rational(BigRational::from_integer(mantissa) * factor))
    }

    fn identifier(&mut self) -> Result<Expr, ParseError> {
        let start = self.pos;
        while self.pos < self.src.len()
            && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_')
        {
            self.pos += 1;
        }
        let name = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
        let bytes = name.as_bytes();
        if bytes.len() > 1
            && matches!(bytes[0], b'x' | b'y')
            && bytes[1..].iter().all(u8::is_ascii_digit)
        {
            let index: usize = name[1..].parse().map_err(|_| ParseError::Syntax {
                offset: start,
                message: "variable index too large".into(),
            })?;
            let var = if bytes[0] == b'x' {
                Var::X(index)
            } else {
                Var::Y(index)
            };
            if !self.layout.contains(var) {
                return Err(ParseError::VarOutOfRange {
                    var,
                    offset: start,
                    base: self.layout.base,
                    fibre: self.layout.fibre,
                });
            }
            return Ok(Expr::var(var));
        }
        match name {
            "pi" => Ok(Expr::constant(Constant::Pi)),
            "e" => Ok(Expr::constant(Constant::E)),
            "exp" | "sin" | "cos" => {
                let f = match name {
                    "exp" => Func::Exp,
                    "sin" => Func::Sin,
                    _ => Func::Cos,
                };
                let arg = self.call_argument()?;
                Ok(Expr::apply(f, &arg))
            }
            "bump" => {
                let mut order = 0;
                while self.src.get(self.pos) == Some(&b'\'') {
                    self.pos += 1;
                    order += 1;
                }
                let arg = self.call_argument()?;
                Ok(Expr::bump_derivative(order, &arg))
            }
            _ => Err(ParseError::UnknownIdentifier {
                name: name.to_string(),
                offset: start,
            }),
        }
    }

    fn call_argument(&mut self) -> Result<Expr, ParseError> {
        self.expect(b'(')?;
        let arg = self.expr()?;
        self.expect(b')')?;
        Ok(arg)
    }
}

// Binding strength of the printed form: sums 1, products 2, unary minus 3,
// powers 4, atoms 5.
fn precedence(e: &Expr) -> u8 {
    match e.node() {
        Node::Num(n) => {
            let r = n.exact();
            if !r.denom().is_one() {
                2
            } else if r.is_negative() {
                3
            } else {
                5
            }
        }
        Node::Add(..) | Node::Sub(..) => 1,
        Node::Mul(..) | Node::Div(..) => 2,
        Node::Neg(_) => 3,
        Node::Pow(..) => 4,
        _ => 5,
    }
}

fn write_at(e: &Expr, min: u8, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    if precedence(e) < min {
        write!(f, "(")?;
        write_expr(e, f)?;
        write!(f, ")")
    } else {
        write_expr(e, f)
    }
}

pub(super) fn write_expr(e: &Expr, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    match e.node() {
        Node::Num(n) => {
            let r = n.exact();
            if r.denom().is_one() {
                write!(f, "{}", r.numer())
            } else {
                write!(f, "{}/{}", r.numer(), r.denom())
            }
        }
        Node::Named(Constant::Pi) => write!(f, "pi"),
        Node::Named(Constant::E) => write!(f, "e"),
        Node::Var(v) => write!(f, "{v}"),
        Node::Add(a, b) => {
            write_at(a, 1, f)?;
            write!(f, " + ")?;
            write_at(b, 2, f)
        }
        Node::Sub(a, b) => {
            write_at(a, 1, f)?;
            write!(f, " - ")?;
            write_at(b, 2, f)
        }
        Node::Mul(a, b) => {
            write_at(a, 2, f)?;
            write!(f, "*")?;
            write_at(b, 3, f)
        }
        Node::Div(a, b) => {
            write_at(a, 2, f)?;
            write!(f, "/")?;
            write_at(b, 3, f)
        }
        Node::Neg(a) => {
            write!(f, "-")?;
            write_at(a, 3, f)
        }
        Node::Pow(a, n) => {
            write_at(a, 5, f)?;
            write!(f, "^{n}")
        }
        Node::Apply(func, a) => {
            write!(f, "{}(", func.name())?;
            write_expr(a, f)?;
            write!(f, ")")
        }
        Node::Bump { order, arg } => {
            write!(f, "bump{}(", "'".repeat(*order as usize))?;
            write_expr(arg, f)?;
            write!(f, ")")
        }
    }
}
