//! Symbolic scalar functions on `ℝˡ × ℝᵏ`.
//!
//! An [`Expr`] is an immutable, reference-counted expression tree over base
//! variables `x0, x1, …` and fibre variables `y0, y1, …`. The node set is
//! rational-elementary (sums, products, guarded quotients, integer powers,
//! `exp`, `sin`, `cos`) plus the compactly supported bump
//! `bump(t) = exp(-1/(1-t²))` for `|t| < 1` and `0` otherwise.
//!
//! The class is closed under differentiation: the `n`-th derivative of the
//! bump is kept as its own node (`bump'…'`) and evaluated in closed form,
//! so every derivative is again an `Expr` that evaluates to exactly zero
//! outside `|t| < 1`.

mod bump;
mod domain;
mod multi_index;
mod parse;
mod poly;
mod support;

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

pub use domain::{AxisBox, Interval};
pub use multi_index::MultiIndex;
pub use parse::{parse, ParseError};
pub use poly::{Monomial, Poly};
pub(crate) use poly::mono_divide;

/// A coordinate of the total space.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Var {
    /// Base coordinate `x_i`.
    X(usize),
    /// Fibre coordinate `y_j`.
    Y(usize),
}

impl Var {
    const MAX_INDEX: usize = 64;

    fn bit(self) -> u128 {
        match self {
            Var::X(i) => {
                assert!(i < Self::MAX_INDEX, "base variable index {i} too large");
                1u128 << i
            }
            Var::Y(j) => {
                assert!(j < Self::MAX_INDEX, "fibre variable index {j} too large");
                1u128 << (64 + j)
            }
        }
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Var::X(i) => write!(f, "x{i}"),
            Var::Y(j) => write!(f, "y{j}"),
        }
    }
}

/// Split of the ambient coordinates into `base` x-variables followed by
/// `fibre` y-variables.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Layout {
    pub base: usize,
    pub fibre: usize,
}

impl Layout {
    pub const fn new(base: usize, fibre: usize) -> Self {
        Layout { base, fibre }
    }

    pub const fn base_only(base: usize) -> Self {
        Layout { base, fibre: 0 }
    }

    pub const fn fibre_only(fibre: usize) -> Self {
        Layout { base: 0, fibre }
    }

    pub const fn dim(&self) -> usize {
        self.base + self.fibre
    }

    /// The variable at flat position `i` (x-variables first).
    pub fn var(&self, i: usize) -> Var {
        if i < self.base {
            Var::X(i)
        } else {
            Var::Y(i - self.base)
        }
    }

    /// Flat position of `v`, if it belongs to the layout.
    pub fn position(&self, v: Var) -> Option<usize> {
        match v {
            Var::X(i) if i < self.base => Some(i),
            Var::Y(j) if j < self.fibre => Some(self.base + j),
            _ => None,
        }
    }

    pub fn contains(&self, v: Var) -> bool {
        self.position(v).is_some()
    }

    pub fn vars(&self) -> impl Iterator<Item = Var> + '_ {
        (0..self.dim()).map(move |i| self.var(i))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Func {
    Exp,
    Sin,
    Cos,
}

impl Func {
    fn name(self) -> &'static str {
        match self {
            Func::Exp => "exp",
            Func::Sin => "sin",
            Func::Cos => "cos",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Constant {
    Pi,
    E,
}

impl Constant {
    fn value(self) -> f64 {
        match self {
            Constant::Pi => std::f64::consts::PI,
            Constant::E => std::f64::consts::E,
        }
    }
}

/// An exact rational constant together with its nearest `f64`.
#[derive(Clone, Debug)]
pub struct Number {
    exact: BigRational,
    approx: f64,
}

impl Number {
    fn new(exact: BigRational) -> Self {
        let approx = exact.to_f64().unwrap_or(f64::NAN);
        Number { exact, approx }
    }

    pub fn exact(&self) -> &BigRational {
        &self.exact
    }

    pub fn value(&self) -> f64 {
        self.approx
    }
}

#[derive(Clone, Debug)]
pub enum Node {
    Num(Number),
    Named(Constant),
    Var(Var),
    Add(Expr, Expr),
    Sub(Expr, Expr),
    Mul(Expr, Expr),
    /// Quotient whose denominator is known not to vanish.
    Div(Expr, Expr),
    Neg(Expr),
    Pow(Expr, u32),
    Apply(Func, Expr),
    /// `order`-th derivative of the bump, composed with `arg`.
    Bump { order: u32, arg: Expr },
}

#[derive(Debug)]
struct Inner {
    node: Node,
    vars: u128,
}

/// Immutable symbolic expression. Cloning is cheap.
#[derive(Clone, Debug)]
pub struct Expr(Arc<Inner>);

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExprError {
    #[error("denominator `{0}` may vanish")]
    VanishingDenominator(String),
    #[error("variable {var} is outside the layout ({base} base, {fibre} fibre)")]
    VarOutOfRange { var: Var, base: usize, fibre: usize },
    #[error("point has {got} coordinates, expected {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("evaluation at {point:?} is not finite")]
    NonFinite { point: Vec<f64> },
    #[error("expression is not a polynomial: {0}")]
    NotPolynomial(String),
}

impl Expr {
    fn make(node: Node) -> Expr {
        let vars = match &node {
            Node::Num(_) | Node::Named(_) => 0,
            Node::Var(v) => v.bit(),
            Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) | Node::Div(a, b) => {
                a.0.vars | b.0.vars
            }
            Node::Neg(a) | Node::Pow(a, _) | Node::Apply(_, a) => a.0.vars,
            Node::Bump { arg, .. } => arg.0.vars,
        };
        Expr(Arc::new(Inner { node, vars }))
    }

    pub fn node(&self) -> &Node {
        &self.0.node
    }

    pub fn rational(r: BigRational) -> Expr {
        Expr::make(Node::Num(Number::new(r)))
    }

    pub fn int(n: i64) -> Expr {
        Expr::rational(BigRational::from_integer(BigInt::from(n)))
    }

    /// Exact rational value of a finite `f64`.
    pub fn float(v: f64) -> Expr {
        Expr::rational(BigRational::from_float(v).expect("finite constant"))
    }

    pub fn zero() -> Expr {
        Expr::int(0)
    }

    pub fn one() -> Expr {
        Expr::int(1)
    }

    pub fn constant(c: Constant) -> Expr {
        Expr::make(Node::Named(c))
    }

    pub fn var(v: Var) -> Expr {
        Expr::make(Node::Var(v))
    }

    pub fn x(i: usize) -> Expr {
        Expr::var(Var::X(i))
    }

    pub fn y(j: usize) -> Expr {
        Expr::var(Var::Y(j))
    }

    pub fn as_rational(&self) -> Option<&BigRational> {
        match self.node() {
            Node::Num(n) => Some(&n.exact),
            _ => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.as_rational().is_some_and(Zero::is_zero)
    }

    pub fn is_one(&self) -> bool {
        self.as_rational().is_some_and(One::is_one)
    }

    pub fn is_constant(&self) -> bool {
        self.0.vars == 0
    }

    pub fn depends_on(&self, v: Var) -> bool {
        self.0.vars & v.bit() != 0
    }

    /// Free variables in ascending order (x-variables first).
    pub fn free_vars(&self) -> Vec<Var> {
        let mut out = Vec::new();
        for i in 0..64 {
            if self.0.vars & (1u128 << i) != 0 {
                out.push(Var::X(i));
            }
        }
        for j in 0..64 {
            if self.0.vars & (1u128 << (64 + j)) != 0 {
                out.push(Var::Y(j));
            }
        }
        out
    }

    /// Fails if any free variable lies outside `layout`.
    pub fn check_layout(&self, layout: Layout) -> Result<(), ExprError> {
        match self.free_vars().into_iter().find(|v| !layout.contains(*v)) {
            Some(var) => Err(ExprError::VarOutOfRange {
                var,
                base: layout.base,
                fibre: layout.fibre,
            }),
            None => Ok(()),
        }
    }

    pub fn add(a: &Expr, b: &Expr) -> Expr {
        if a.is_zero() {
            return b.clone();
        }
        if b.is_zero() {
            return a.clone();
        }
        if let (Some(p), Some(q)) = (a.as_rational(), b.as_rational()) {
            return Expr::rational(p + q);
        }
        Expr::make(Node::Add(a.clone(), b.clone()))
    }

    pub fn sub(a: &Expr, b: &Expr) -> Expr {
        if b.is_zero() {
            return a.clone();
        }
        if a.is_zero() {
            return Expr::neg(b);
        }
        if let (Some(p), Some(q)) = (a.as_rational(), b.as_rational()) {
            return Expr::rational(p - q);
        }
        Expr::make(Node::Sub(a.clone(), b.clone()))
    }

    pub fn mul(a: &Expr, b: &Expr) -> Expr {
        if a.is_zero() || b.is_zero() {
            return Expr::zero();
        }
        if a.is_one() {
            return b.clone();
        }
        if b.is_one() {
            return a.clone();
        }
        if let (Some(p), Some(q)) = (a.as_rational(), b.as_rational()) {
            return Expr::rational(p * q);
        }
        if a.as_rational().is_some_and(|r| (-r).is_one()) {
            return Expr::neg(b);
        }
        if b.as_rational().is_some_and(|r| (-r).is_one()) {
            return Expr::neg(a);
        }
        Expr::make(Node::Mul(a.clone(), b.clone()))
    }

    pub fn neg(a: &Expr) -> Expr {
        if let Some(p) = a.as_rational() {
            return Expr::rational(-p);
        }
        if let Node::Neg(inner) = a.node() {
            return inner.clone();
        }
        Expr::make(Node::Neg(a.clone()))
    }

    pub fn pow(a: &Expr, n: u32) -> Expr {
        match n {
            0 => Expr::one(),
            1 => a.clone(),
            _ => match a.as_rational() {
                Some(p) => Expr::rational(num_traits::pow(p.clone(), n as usize)),
                None => Expr::make(Node::Pow(a.clone(), n)),
            },
        }
    }

    /// Quotient `a / b`, accepted only when `b` provably never vanishes.
    pub fn div(a: &Expr, b: &Expr) -> Result<Expr, ExprError> {
        if let Some(q) = b.as_rational() {
            if q.is_zero() {
                return Err(ExprError::VanishingDenominator(b.to_string()));
            }
            return Ok(Expr::mul(a, &Expr::rational(q.recip())));
        }
        if !b.is_nonvanishing() {
            return Err(ExprError::VanishingDenominator(b.to_string()));
        }
        Ok(Expr::div_unchecked(a, b))
    }

    fn div_unchecked(a: &Expr, b: &Expr) -> Expr {
        if a.is_zero() {
            return Expr::zero();
        }
        if b.is_one() {
            return a.clone();
        }
        Expr::make(Node::Div(a.clone(), b.clone()))
    }

    pub fn apply(f: Func, a: &Expr) -> Expr {
        if a.is_zero() {
            return match f {
                Func::Exp | Func::Cos => Expr::one(),
                Func::Sin => Expr::zero(),
            };
        }
        Expr::make(Node::Apply(f, a.clone()))
    }

    pub fn exp(a: &Expr) -> Expr {
        Expr::apply(Func::Exp, a)
    }

    pub fn sin(a: &Expr) -> Expr {
        Expr::apply(Func::Sin, a)
    }

    pub fn cos(a: &Expr) -> Expr {
        Expr::apply(Func::Cos, a)
    }

    pub fn bump(a: &Expr) -> Expr {
        Expr::bump_derivative(0, a)
    }

    /// `order`-th derivative of the bump composed with `a`.
    pub fn bump_derivative(order: u32, a: &Expr) -> Expr {
        if let Some(p) = a.as_rational() {
            if p.abs() >= BigRational::one() {
                return Expr::zero();
            }
        }
        Expr::make(Node::Bump {
            order,
            arg: a.clone(),
        })
    }

    /// Sum of a sequence; `0` when empty.
    pub fn sum<'a>(items: impl IntoIterator<Item = &'a Expr>) -> Expr {
        items
            .into_iter()
            .fold(Expr::zero(), |acc, e| Expr::add(&acc, e))
    }

    /// Product of a sequence; `1` when empty.
    pub fn product<'a>(items: impl IntoIterator<Item = &'a Expr>) -> Expr {
        items
            .into_iter()
            .fold(Expr::one(), |acc, e| Expr::mul(&acc, e))
    }

    /// Structural sign test used to admit quotients.
    pub fn is_nonvanishing(&self) -> bool {
        matches!(sign(self), Sign::Pos | Sign::Neg) || {
            let whole = Interval::new(f64::NEG_INFINITY, f64::INFINITY);
            let range = self.enclose(&[], &[], whole);
            range.lo > 0.0 || range.hi < 0.0
        }
    }

    /// Evaluates at base coordinates `x` and fibre coordinates `y`.
    ///
    /// Panics if a free variable has no coordinate; use [`Expr::evaluate`]
    /// for the checked entry point.
    pub fn eval(&self, x: &[f64], y: &[f64]) -> f64 {
        match self.node() {
            Node::Num(n) => n.approx,
            Node::Named(c) => c.value(),
            Node::Var(Var::X(i)) => x[*i],
            Node::Var(Var::Y(j)) => y[*j],
            Node::Add(a, b) => a.eval(x, y) + b.eval(x, y),
            Node::Sub(a, b) => a.eval(x, y) - b.eval(x, y),
            Node::Mul(a, b) => {
                let left = a.eval(x, y);
                // 0 * anything is 0 so guarded factors cannot leak NaN.
                if left == 0.0 {
                    0.0
                } else {
                    left * b.eval(x, y)
                }
            }
            Node::Div(a, b) => a.eval(x, y) / b.eval(x, y),
            Node::Neg(a) => -a.eval(x, y),
            Node::Pow(a, n) => a.eval(x, y).powi(*n as i32),
            Node::Apply(Func::Exp, a) => a.eval(x, y).exp(),
            Node::Apply(Func::Sin, a) => a.eval(x, y).sin(),
            Node::Apply(Func::Cos, a) => a.eval(x, y).cos(),
            Node::Bump { order, arg } => bump::eval(*order, arg.eval(x, y)),
        }
    }

    /// Evaluates at a flat point of `layout` (x-coordinates first).
    pub fn evaluate(&self, layout: Layout, point: &[f64]) -> Result<f64, ExprError> {
        if point.len() != layout.dim() {
            return Err(ExprError::DimensionMismatch {
                expected: layout.dim(),
                got: point.len(),
            });
        }
        self.check_layout(layout)?;
        let (x, y) = point.split_at(layout.base);
        let v = self.eval(x, y);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(ExprError::NonFinite {
                point: point.to_vec(),
            })
        }
    }

    /// Exact partial derivative with respect to one variable.
    pub fn derive(&self, v: Var) -> Expr {
        let mut memo = HashMap::new();
        self.derive_memo(v, &mut memo)
    }

    fn derive_memo(&self, v: Var, memo: &mut HashMap<*const Inner, Expr>) -> Expr {
        if !self.depends_on(v) {
            return Expr::zero();
        }
        let key = Arc::as_ptr(&self.0);
        if let Some(d) = memo.get(&key) {
            return d.clone();
        }
        let d = match self.node() {
            Node::Num(_) | Node::Named(_) => Expr::zero(),
            Node::Var(w) => {
                if *w == v {
                    Expr::one()
                } else {
                    Expr::zero()
                }
            }
            Node::Add(a, b) => Expr::add(&a.derive_memo(v, memo), &b.derive_memo(v, memo)),
            Node::Sub(a, b) => Expr::sub(&a.derive_memo(v, memo), &b.derive_memo(v, memo)),
            Node::Mul(a, b) => {
                let da = a.derive_memo(v, memo);
                let db = b.derive_memo(v, memo);
                Expr::add(&Expr::mul(&da, b), &Expr::mul(a, &db))
            }
            Node::Div(a, b) => {
                let da = a.derive_memo(v, memo);
                let db = b.derive_memo(v, memo);
                let num = Expr::sub(&Expr::mul(&da, b), &Expr::mul(a, &db));
                Expr::div_unchecked(&num, &Expr::pow(b, 2))
            }
            Node::Neg(a) => Expr::neg(&a.derive_memo(v, memo)),
            Node::Pow(a, n) => {
                let da = a.derive_memo(v, memo);
                let lowered = Expr::pow(a, n - 1);
                Expr::mul(&Expr::mul(&Expr::int(*n as i64), &lowered), &da)
            }
            Node::Apply(f, a) => {
                let da = a.derive_memo(v, memo);
                let outer = match f {
                    Func::Exp => self.clone(),
                    Func::Sin => Expr::cos(a),
                    Func::Cos => Expr::neg(&Expr::sin(a)),
                };
                Expr::mul(&outer, &da)
            }
            Node::Bump { order, arg } => {
                let da = arg.derive_memo(v, memo);
                Expr::mul(&Expr::bump_derivative(order + 1, arg), &da)
            }
        };
        memo.insert(key, d.clone());
        d
    }

    /// `D^α` with `α` indexed by the flat coordinates of `layout`.
    pub fn differentiate(&self, layout: Layout, alpha: &MultiIndex) -> Result<Expr, ExprError> {
        if alpha.len() != layout.dim() {
            return Err(ExprError::DimensionMismatch {
                expected: layout.dim(),
                got: alpha.len(),
            });
        }
        let mut out = self.clone();
        for (i, &n) in alpha.iter().enumerate() {
            let v = layout.var(i);
            for _ in 0..n {
                out = out.derive(v);
            }
        }
        Ok(out)
    }

    /// `D_x^α` over base variables.
    pub fn derive_x(&self, alpha: &MultiIndex) -> Expr {
        self.derive_multi(alpha, Var::X)
    }

    /// `D_y^β` over fibre variables.
    pub fn derive_y(&self, beta: &MultiIndex) -> Expr {
        self.derive_multi(beta, Var::Y)
    }

    fn derive_multi(&self, alpha: &MultiIndex, kind: fn(usize) -> Var) -> Expr {
        let mut out = self.clone();
        for (i, &n) in alpha.iter().enumerate() {
            for _ in 0..n {
                out = out.derive(kind(i));
            }
        }
        out
    }

    /// Simultaneous substitution of variables by expressions.
    pub fn substitute(&self, assignments: &BTreeMap<Var, Expr>) -> Expr {
        self.substitute_with(&|v| assignments.get(&v).cloned())
    }

    /// Simultaneous substitution driven by a lookup; variables mapped to
    /// `None` are kept.
    pub fn substitute_with(&self, lookup: &dyn Fn(Var) -> Option<Expr>) -> Expr {
        let mut memo = HashMap::new();
        self.subst_memo(lookup, &mut memo)
    }

    fn subst_memo(
        &self,
        lookup: &dyn Fn(Var) -> Option<Expr>,
        memo: &mut HashMap<*const Inner, Expr>,
    ) -> Expr {
        if self.is_constant() {
            return self.clone();
        }
        let key = Arc::as_ptr(&self.0);
        if let Some(d) = memo.get(&key) {
            return d.clone();
        }
        let out = match self.node() {
            Node::Num(_) | Node::Named(_) => self.clone(),
            Node::Var(v) => lookup(*v).unwrap_or_else(|| self.clone()),
            Node::Add(a, b) => Expr::add(&a.subst_memo(lookup, memo), &b.subst_memo(lookup, memo)),
            Node::Sub(a, b) => Expr::sub(&a.subst_memo(lookup, memo), &b.subst_memo(lookup, memo)),
            Node::Mul(a, b) => Expr::mul(&a.subst_memo(lookup, memo), &b.subst_memo(lookup, memo)),
            Node::Div(a, b) => {
                let num = a.subst_memo(lookup, memo);
                let den = b.subst_memo(lookup, memo);
                match den.as_rational() {
                    Some(q) if !q.is_zero() => Expr::mul(&num, &Expr::rational(q.recip())),
                    _ => Expr::div_unchecked(&num, &den),
                }
            }
            Node::Neg(a) => Expr::neg(&a.subst_memo(lookup, memo)),
            Node::Pow(a, n) => Expr::pow(&a.subst_memo(lookup, memo), *n),
            Node::Apply(f, a) => Expr::apply(*f, &a.subst_memo(lookup, memo)),
            Node::Bump { order, arg } => Expr::bump_derivative(*order, &arg.subst_memo(lookup, memo)),
        };
        memo.insert(key, out.clone());
        out
    }

    /// Replaces every base variable by the exact value of `x`.
    pub fn fix_base(&self, x: &[f64]) -> Expr {
        self.substitute_with(&|v| match v {
            Var::X(i) if i < x.len() => Some(Expr::float(x[i])),
            _ => None,
        })
    }

    /// Renames variables one-to-one.
    pub fn rename(&self, map: &dyn Fn(Var) -> Var) -> Expr {
        self.substitute_with(&|v| {
            let w = map(v);
            (w != v).then(|| Expr::var(w))
        })
    }

    /// Conservative support box over `layout`; unbounded sides are infinite.
    pub fn support_box(&self, layout: Layout) -> AxisBox {
        support::support_box(self, layout)
    }

    /// Support box with the listed variables pinned to the given values.
    pub fn support_given(&self, layout: Layout, fixed: &[(Var, f64)]) -> AxisBox {
        let seed = fixed.iter().map(|&(v, c)| (v, Interval::point(c))).collect();
        support::support_box_seeded(self, layout, &seed)
    }

    /// Interval enclosure of the range over the given coordinate boxes.
    /// Coordinates without an entry range over `fallback`.
    pub fn enclose(&self, x: &[Interval], y: &[Interval], fallback: Interval) -> Interval {
        domain::enclose(self, x, y, fallback)
    }

    /// Exact affine form `Σ cᵥ·v + d`, if the expression is affine with
    /// rational coefficients.
    pub fn as_affine(&self) -> Option<(BTreeMap<Var, BigRational>, BigRational)> {
        support::affine(self)
    }

    pub fn to_poly(&self) -> Result<Poly, ExprError> {
        Poly::from_expr(self).ok_or_else(|| ExprError::NotPolynomial(self.to_string()))
    }

    /// Distance of the nearest bump argument from `±1` at the point, or
    /// `None` when the expression contains no bump.
    pub fn bump_margin(&self, x: &[f64], y: &[f64]) -> Option<f64> {
        match self.node() {
            Node::Num(_) | Node::Named(_) | Node::Var(_) => None,
            Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) | Node::Div(a, b) => {
                match (a.bump_margin(x, y), b.bump_margin(x, y)) {
                    (Some(p), Some(q)) => Some(p.min(q)),
                    (p, q) => p.or(q),
                }
            }
            Node::Neg(a) | Node::Pow(a, _) | Node::Apply(_, a) => a.bump_margin(x, y),
            Node::Bump { arg, .. } => {
                let own = (arg.eval(x, y).abs() - 1.0).abs();
                Some(arg.bump_margin(x, y).map_or(own, |m| m.min(own)))
            }
        }
    }

    /// Like [`Expr::bump_margin`], restricted to bumps whose argument
    /// depends on base variables only.
    pub fn base_bump_margin(&self, x: &[f64]) -> Option<f64> {
        match self.node() {
            Node::Num(_) | Node::Named(_) | Node::Var(_) => None,
            Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) | Node::Div(a, b) => {
                match (a.base_bump_margin(x), b.base_bump_margin(x)) {
                    (Some(p), Some(q)) => Some(p.min(q)),
                    (p, q) => p.or(q),
                }
            }
            Node::Neg(a) | Node::Pow(a, _) | Node::Apply(_, a) => a.base_bump_margin(x),
            Node::Bump { arg, .. } => {
                let inner = arg.base_bump_margin(x);
                if self.0.vars >> 64 != 0 {
                    return inner;
                }
                let own = (arg.eval(x, &[]).abs() - 1.0).abs();
                Some(inner.map_or(own, |m| m.min(own)))
            }
        }
    }

    /// Number of nodes counted as a tree.
    pub fn size(&self) -> usize {
        match self.node() {
            Node::Num(_) | Node::Named(_) | Node::Var(_) => 1,
            Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) | Node::Div(a, b) => {
                1 + a.size() + b.size()
            }
            Node::Neg(a) | Node::Pow(a, _) | Node::Apply(_, a) => 1 + a.size(),
            Node::Bump { arg, .. } => 1 + arg.size(),
        }
    }

    /// Pointer identity; used for structural caches.
    pub fn ptr_eq(&self, other: &Expr) -> bool {
        Arc::ptr_eq(&self.0, &other.0)
    }

    /// Structural equality of trees.
    pub fn same_tree(&self, other: &Expr) -> bool {
        if self.ptr_eq(other) {
            return true;
        }
        match (self.node(), other.node()) {
            (Node::Num(a), Node::Num(b)) => a.exact == b.exact,
            (Node::Named(a), Node::Named(b)) => a == b,
            (Node::Var(a), Node::Var(b)) => a == b,
            (Node::Add(a, b), Node::Add(c, d))
            | (Node::Sub(a, b), Node::Sub(c, d))
            | (Node::Mul(a, b), Node::Mul(c, d))
            | (Node::Div(a, b), Node::Div(c, d)) => a.same_tree(c) && b.same_tree(d),
            (Node::Neg(a), Node::Neg(b)) => a.same_tree(b),
            (Node::Pow(a, n), Node::Pow(b, m)) => n == m && a.same_tree(b),
            (Node::Apply(f, a), Node::Apply(g, b)) => f == g && a.same_tree(b),
            (Node::Bump { order: n, arg: a }, Node::Bump { order: m, arg: b }) => {
                n == m && a.same_tree(b)
            }
            _ => false,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Sign {
    Zero,
    Pos,
    Neg,
    NonNeg,
    NonPos,
    Unknown,
}

impl Sign {
    fn flip(self) -> Sign {
        match self {
            Sign::Pos => Sign::Neg,
            Sign::Neg => Sign::Pos,
            Sign::NonNeg => Sign::NonPos,
            Sign::NonPos => Sign::NonNeg,
            s => s,
        }
    }

    fn nonneg(self) -> bool {
        matches!(self, Sign::Zero | Sign::Pos | Sign::NonNeg)
    }

    fn nonpos(self) -> bool {
        matches!(self, Sign::Zero | Sign::Neg | Sign::NonPos)
    }
}

fn sign_add(a: Sign, b: Sign) -> Sign {
    match (a, b) {
        (Sign::Zero, s) | (s, Sign::Zero) => s,
        (Sign::Pos, s) | (s, Sign::Pos) if s.nonneg() => Sign::Pos,
        (Sign::Neg, s) | (s, Sign::Neg) if s.nonpos() => Sign::Neg,
        (s, t) if s.nonneg() && t.nonneg() => Sign::NonNeg,
        (s, t) if s.nonpos() && t.nonpos() => Sign::NonPos,
        _ => Sign::Unknown,
    }
}

fn sign_mul(a: Sign, b: Sign) -> Sign {
    match (a, b) {
        (Sign::Zero, _) | (_, Sign::Zero) => Sign::Zero,
        (Sign::Unknown, _) | (_, Sign::Unknown) => Sign::Unknown,
        (Sign::Pos, s) => s,
        (s, Sign::Pos) => s,
        (Sign::Neg, s) => s.flip(),
        (s, Sign::Neg) => s.flip(),
        (s, t) if s == t => Sign::NonNeg,
        _ => Sign::NonPos,
    }
}

fn sign(e: &Expr) -> Sign {
    match e.node() {
        Node::Num(n) => {
            if n.exact.is_zero() {
                Sign::Zero
            } else if n.exact.is_positive() {
                Sign::Pos
            } else {
                Sign::Neg
            }
        }
        Node::Named(_) => Sign::Pos,
        Node::Var(_) => Sign::Unknown,
        Node::Add(a, b) => sign_add(sign(a), sign(b)),
        Node::Sub(a, b) => sign_add(sign(a), sign(b).flip()),
        Node::Mul(a, b) | Node::Div(a, b) => sign_mul(sign(a), sign(b)),
        Node::Neg(a) => sign(a).flip(),
        Node::Pow(a, n) => {
            let s = sign(a);
            if n % 2 == 1 {
                s
            } else if matches!(s, Sign::Pos | Sign::Neg) {
                Sign::Pos
            } else {
                Sign::NonNeg
            }
        }
        Node::Apply(Func::Exp, _) => Sign::Pos,
        Node::Apply(_, _) => Sign::Unknown,
        Node::Bump { order: 0, .. } => Sign::NonNeg,
        Node::Bump { .. } => Sign::Unknown,
    }
}

impl Add for &Expr {
    type Output = Expr;
    fn add(self, rhs: &Expr) -> Expr {
        Expr::add(self, rhs)
    }
}

impl Add for Expr {
    type Output = Expr;
    fn add(self, rhs: Expr) -> Expr {
        Expr::add(&self, &rhs)
    }
}

impl Sub for &Expr {
    type Output = Expr;
    fn sub(self, rhs: &Expr) -> Expr {
        Expr::sub(self, rhs)
    }
}

impl Sub for Expr {
    type Output = Expr;
    fn sub(self, rhs: Expr) -> Expr {
        Expr::sub(&self, &rhs)
    }
}

impl Mul for &Expr {
    type Output = Expr;
    fn mul(self, rhs: &Expr) -> Expr {
        Expr::mul(self, rhs)
    }
}

impl Mul for Expr {
    type Output = Expr;
    fn mul(self, rhs: Expr) -> Expr {
        Expr::mul(&self, &rhs)
    }
}

impl Neg for &Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::neg(self)
    }
}

impl Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::neg(&self)
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        parse::write_expr(self, f)
    }
}

#[cfg(test)]
mod tests;
