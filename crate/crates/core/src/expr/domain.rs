//! Closed intervals, axis-aligned boxes and outward-rounded interval
//! evaluation of expressions.

use std::fmt;

use num_rational::BigRational;
use serde::{Deserialize, Serialize};

use super::{bump, Expr, Func, Node, Var};

/// Closed interval `[lo, hi]`; endpoints may be infinite.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(into = "[f64; 2]", try_from = "[f64; 2]")]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl From<Interval> for [f64; 2] {
    fn from(i: Interval) -> Self {
        [i.lo, i.hi]
    }
}

impl TryFrom<[f64; 2]> for Interval {
    type Error = String;
    fn try_from([lo, hi]: [f64; 2]) -> Result<Self, String> {
        if lo <= hi {
            Ok(Interval { lo, hi })
        } else {
            Err(format!("interval [{lo}, {hi}] has lo > hi"))
        }
    }
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Interval {
        assert!(lo <= hi, "interval [{lo}, {hi}] has lo > hi");
        Interval { lo, hi }
    }

    pub fn point(v: f64) -> Interval {
        Interval { lo: v, hi: v }
    }

    pub fn whole() -> Interval {
        Interval {
            lo: f64::NEG_INFINITY,
            hi: f64::INFINITY,
        }
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn is_bounded(&self) -> bool {
        self.lo.is_finite() && self.hi.is_finite()
    }

    pub fn contains(&self, v: f64) -> bool {
        self.lo <= v && v <= self.hi
    }

    pub fn hull(&self, other: &Interval) -> Interval {
        Interval {
            lo: self.lo.min(other.lo),
            hi: self.hi.max(other.hi),
        }
    }

    /// `None` when the intersection is empty.
    pub fn intersect(&self, other: &Interval) -> Option<Interval> {
        let lo = self.lo.max(other.lo);
        let hi = self.hi.min(other.hi);
        (lo <= hi).then_some(Interval { lo, hi })
    }

    fn widen(lo: f64, hi: f64) -> Interval {
        if lo.is_nan() || hi.is_nan() {
            return Interval::whole();
        }
        Interval {
            lo: if lo.is_finite() { lo.next_down() } else { lo },
            hi: if hi.is_finite() { hi.next_up() } else { hi },
        }
    }

    pub(crate) fn add(&self, o: &Interval) -> Interval {
        Interval::widen(self.lo + o.lo, self.hi + o.hi)
    }

    pub(crate) fn sub(&self, o: &Interval) -> Interval {
        Interval::widen(self.lo - o.hi, self.hi - o.lo)
    }

    pub(crate) fn neg(&self) -> Interval {
        Interval {
            lo: -self.hi,
            hi: -self.lo,
        }
    }

    pub(crate) fn mul(&self, o: &Interval) -> Interval {
        let prod = |a: f64, b: f64| if a == 0.0 || b == 0.0 { 0.0 } else { a * b };
        let c = [
            prod(self.lo, o.lo),
            prod(self.lo, o.hi),
            prod(self.hi, o.lo),
            prod(self.hi, o.hi),
        ];
        let lo = c.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = c.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Interval::widen(lo, hi)
    }

    pub(crate) fn recip(&self) -> Interval {
        if self.lo > 0.0 || self.hi < 0.0 {
            Interval::widen(1.0 / self.hi, 1.0 / self.lo)
        } else {
            Interval::whole()
        }
    }

    pub(crate) fn powi(&self, n: u32) -> Interval {
        if n == 0 {
            return Interval::point(1.0);
        }
        let a = self.lo.powi(n as i32);
        let b = self.hi.powi(n as i32);
        if n % 2 == 1 {
            Interval::widen(a, b)
        } else if self.lo >= 0.0 {
            Interval::widen(a, b)
        } else if self.hi <= 0.0 {
            Interval::widen(b, a)
        } else {
            Interval::widen(0.0, a.max(b)).intersect(&Interval::new(0.0, f64::INFINITY))
                .unwrap_or(Interval::point(0.0))
        }
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.lo, self.hi)
    }
}

/// Axis-aligned box in `ℝⁿ`, possibly empty, possibly with infinite sides.
#[derive(Clone, Debug, PartialEq)]
pub struct AxisBox {
    sides: Vec<Interval>,
    empty: bool,
}

impl AxisBox {
    pub fn new(sides: Vec<Interval>) -> AxisBox {
        AxisBox {
            sides,
            empty: false,
        }
    }

    pub fn empty(dim: usize) -> AxisBox {
        AxisBox {
            sides: vec![Interval::point(0.0); dim],
            empty: true,
        }
    }

    pub fn whole(dim: usize) -> AxisBox {
        AxisBox::new(vec![Interval::whole(); dim])
    }

    /// `[-r, r]ⁿ`.
    pub fn cube(dim: usize, r: f64) -> AxisBox {
        AxisBox::new(vec![Interval::new(-r, r); dim])
    }

    pub fn dim(&self) -> usize {
        self.sides.len()
    }

    pub fn is_empty(&self) -> bool {
        self.empty
    }

    pub fn is_bounded(&self) -> bool {
        self.empty || self.sides.iter().all(Interval::is_bounded)
    }

    /// Sides of a nonempty box.
    pub fn sides(&self) -> Option<&[Interval]> {
        (!self.empty).then_some(self.sides.as_slice())
    }

    pub fn side(&self, i: usize) -> Option<Interval> {
        (!self.empty).then(|| self.sides[i])
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        !self.empty && self.sides.iter().zip(p).all(|(s, &v)| s.contains(v))
    }

    /// Whether every coordinate has positive width.
    pub fn has_interior(&self) -> bool {
        !self.empty && self.sides.iter().all(|s| s.hi > s.lo)
    }

    pub fn hull(&self, other: &AxisBox) -> AxisBox {
        assert_eq!(self.dim(), other.dim(), "box dimension mismatch");
        if self.empty {
            return other.clone();
        }
        if other.empty {
            return self.clone();
        }
        AxisBox::new(
            self.sides
                .iter()
                .zip(&other.sides)
                .map(|(a, b)| a.hull(b))
                .collect(),
        )
    }

    pub fn intersect(&self, other: &AxisBox) -> AxisBox {
        assert_eq!(self.dim(), other.dim(), "box dimension mismatch");
        if self.empty || other.empty {
            return AxisBox::empty(self.dim());
        }
        let mut sides = Vec::with_capacity(self.dim());
        for (a, b) in self.sides.iter().zip(&other.sides) {
            match a.intersect(b) {
                Some(s) => sides.push(s),
                None => return AxisBox::empty(self.dim()),
            }
        }
        AxisBox::new(sides)
    }

    /// Disjoint closed boxes; touching boxes are not disjoint.
    pub fn is_disjoint(&self, other: &AxisBox) -> bool {
        self.intersect(other).is_empty()
    }

    pub fn is_subset_of(&self, other: &AxisBox) -> bool {
        self.empty
            || (!other.empty
                && self
                    .sides
                    .iter()
                    .zip(&other.sides)
                    .all(|(a, b)| b.lo <= a.lo && a.hi <= b.hi))
    }

    /// Keeps the coordinates in `range`.
    pub fn project(&self, range: std::ops::Range<usize>) -> AxisBox {
        if self.empty {
            return AxisBox::empty(range.len());
        }
        AxisBox::new(self.sides[range].to_vec())
    }

    /// Cartesian product.
    pub fn product(&self, other: &AxisBox) -> AxisBox {
        if self.empty || other.empty {
            return AxisBox::empty(self.dim() + other.dim());
        }
        let mut sides = self.sides.clone();
        sides.extend_from_slice(&other.sides);
        AxisBox::new(sides)
    }

    /// Grows every side by `margin` on both ends.
    pub fn inflate(&self, margin: f64) -> AxisBox {
        if self.empty {
            return self.clone();
        }
        AxisBox::new(
            self.sides
                .iter()
                .map(|s| Interval::new(s.lo - margin, s.hi + margin))
                .collect(),
        )
    }

    /// Serializable form: `None` for the empty box.
    pub fn to_pairs(&self) -> Option<Vec<[f64; 2]>> {
        self.sides().map(|s| s.iter().map(|&i| i.into()).collect())
    }

    pub fn from_pairs(dim: usize, pairs: Option<&[[f64; 2]]>) -> Result<AxisBox, String> {
        match pairs {
            None => Ok(AxisBox::empty(dim)),
            Some(p) => {
                if p.len() != dim {
                    return Err(format!("box has {} sides, expected {dim}", p.len()));
                }
                let sides = p
                    .iter()
                    .map(|&pair| Interval::try_from(pair))
                    .collect::<Result<Vec<_>, _>>()?;
                Ok(AxisBox::new(sides))
            }
        }
    }
}

impl fmt::Display for AxisBox {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.empty {
            return write!(f, "∅");
        }
        for (i, s) in self.sides.iter().enumerate() {
            if i > 0 {
                write!(f, "×")?;
            }
            write!(f, "{s}")?;
        }
        Ok(())
    }
}

const INV_E: f64 = 0.36787944117144233;

pub(super) fn enclose(e: &Expr, x: &[Interval], y: &[Interval], fallback: Interval) -> Interval {
    match e.node() {
        Node::Num(n) => {
            let v = n.value();
            if BigRational::from_float(v).as_ref() == Some(n.exact()) {
                Interval::point(v)
            } else {
                Interval::widen(v, v)
            }
        }
        Node::Named(c) => Interval::widen(c.value(), c.value()),
        Node::Var(Var::X(i)) => x.get(*i).copied().unwrap_or(fallback),
        Node::Var(Var::Y(j)) => y.get(*j).copied().unwrap_or(fallback),
        Node::Add(a, b) => enclose(a, x, y, fallback).add(&enclose(b, x, y, fallback)),
        Node::Sub(a, b) => enclose(a, x, y, fallback).sub(&enclose(b, x, y, fallback)),
        Node::Mul(a, b) => enclose(a, x, y, fallback).mul(&enclose(b, x, y, fallback)),
        Node::Div(a, b) => {
            enclose(a, x, y, fallback).mul(&enclose(b, x, y, fallback).recip())
        }
        Node::Neg(a) => enclose(a, x, y, fallback).neg(),
        Node::Pow(a, n) => enclose(a, x, y, fallback).powi(*n),
        Node::Apply(Func::Exp, a) => {
            let r = enclose(a, x, y, fallback);
            Interval::widen(r.lo.exp(), r.hi.exp())
                .intersect(&Interval::new(0.0, f64::INFINITY))
                .unwrap_or(Interval::point(0.0))
        }
        Node::Apply(f, a) => {
            let r = enclose(a, x, y, fallback);
            let g = if *f == Func::Sin { f64::sin } else { f64::cos };
            trig_range(r, g, *f == Func::Sin)
        }
        Node::Bump { order, arg } => {
            let r = enclose(arg, x, y, fallback);
            if r.hi <= -1.0 || r.lo >= 1.0 {
                Interval::point(0.0)
            } else if *order == 0 {
                let peak = if r.contains(0.0) {
                    INV_E
                } else {
                    bump::eval(0, r.lo.abs().min(r.hi.abs()))
                };
                Interval::new(0.0, peak.next_up())
            } else {
                Interval::whole()
            }
        }
    }
}

fn trig_range(r: Interval, g: fn(f64) -> f64, is_sin: bool) -> Interval {
    use std::f64::consts::{FRAC_PI_2, PI};
    if !r.is_bounded() || r.width() >= 2.0 * PI {
        return Interval::new(-1.0, 1.0);
    }
    let mut lo = g(r.lo).min(g(r.hi));
    let mut hi = g(r.lo).max(g(r.hi));
    // extrema of sin at π/2 + kπ, of cos at kπ
    let offset = if is_sin { FRAC_PI_2 } else { 0.0 };
    let first = ((r.lo - offset) / PI).ceil() as i64;
    let last = ((r.hi - offset) / PI).floor() as i64;
    for k in first..=last {
        let v = g(offset + k as f64 * PI);
        lo = lo.min(v);
        hi = hi.max(v);
    }
    Interval::widen(lo.max(-1.0), hi.min(1.0))
        .intersect(&Interval::new(-1.0, 1.0))
        .unwrap_or(Interval::new(-1.0, 1.0))
}
