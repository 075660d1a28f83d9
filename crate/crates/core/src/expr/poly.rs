//! Exact multivariate polynomials with rational coefficients.

use std::collections::BTreeMap;

use num_rational::BigRational;
use num_traits::{One, Zero};

use super::{Expr, Node, Var};

/// Monomial as sorted `(variable, exponent)` pairs with positive exponents.
pub type Monomial = Vec<(Var, u32)>;

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Poly {
    terms: BTreeMap<Monomial, BigRational>,
}

impl Poly {
    pub fn zero() -> Poly {
        Poly::default()
    }

    pub fn constant(c: BigRational) -> Poly {
        let mut p = Poly::zero();
        p.add_term(Vec::new(), c);
        p
    }

    pub fn var(v: Var) -> Poly {
        let mut p = Poly::zero();
        p.add_term(vec![(v, 1)], BigRational::one());
        p
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &BigRational)> {
        self.terms.iter()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add_term(&mut self, m: Monomial, c: BigRational) {
        if c.is_zero() {
            return;
        }
        let entry = self.terms.entry(m).or_insert_with(BigRational::zero);
        *entry += c;
        if entry.is_zero() {
            self.terms.retain(|_, v| !v.is_zero());
        }
    }

    pub fn add(&self, other: &Poly) -> Poly {
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), c.clone());
        }
        out
    }

    pub fn scale(&self, s: &BigRational) -> Poly {
        let mut out = Poly::zero();
        for (m, c) in &self.terms {
            out.add_term(m.clone(), c * s);
        }
        out
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        let mut out = Poly::zero();
        for (m1, c1) in &self.terms {
            for (m2, c2) in &other.terms {
                out.add_term(mono_mul(m1, m2), c1 * c2);
            }
        }
        out
    }

    pub fn pow(&self, n: u32) -> Poly {
        (0..n).fold(Poly::constant(BigRational::one()), |acc, _| acc.mul(self))
    }

    /// Simultaneous substitution of variables by polynomials.
    pub fn compose(&self, map: &dyn Fn(Var) -> Option<Poly>) -> Poly {
        let mut out = Poly::zero();
        for (m, c) in &self.terms {
            let mut term = Poly::constant(c.clone());
            for &(v, e) in m {
                let base = map(v).unwrap_or_else(|| Poly::var(v));
                term = term.mul(&base.pow(e));
            }
            out = out.add(&term);
        }
        out
    }

    /// Converts the polynomial part of an expression; `None` if any node is
    /// not polynomial.
    pub fn from_expr(e: &Expr) -> Option<Poly> {
        match e.node() {
            Node::Num(n) => Some(Poly::constant(n.exact().clone())),
            Node::Var(v) => Some(Poly::var(*v)),
            Node::Add(a, b) => Some(Poly::from_expr(a)?.add(&Poly::from_expr(b)?)),
            Node::Sub(a, b) => Some(
                Poly::from_expr(a)?.add(&Poly::from_expr(b)?.scale(&-BigRational::one())),
            ),
            Node::Mul(a, b) => Some(Poly::from_expr(a)?.mul(&Poly::from_expr(b)?)),
            Node::Neg(a) => Some(Poly::from_expr(a)?.scale(&-BigRational::one())),
            Node::Pow(a, n) => Some(Poly::from_expr(a)?.pow(*n)),
            Node::Div(a, b) => {
                let q = b.as_rational()?;
                Some(Poly::from_expr(a)?.scale(&q.recip()))
            }
            Node::Named(_) | Node::Apply(..) | Node::Bump { .. } => None,
        }
    }

    pub fn to_expr(&self) -> Expr {
        let mut acc = Expr::zero();
        for (m, c) in &self.terms {
            let mono = m.iter().fold(Expr::one(), |p, &(v, e)| {
                Expr::mul(&p, &Expr::pow(&Expr::var(v), e))
            });
            acc = Expr::add(&acc, &Expr::mul(&Expr::rational(c.clone()), &mono));
        }
        acc
    }

    pub fn depends_on(&self, v: Var) -> bool {
        self.terms.keys().any(|m| m.iter().any(|&(w, _)| w == v))
    }
}

fn mono_mul(a: &Monomial, b: &Monomial) -> Monomial {
    let mut map: BTreeMap<Var, u32> = a.iter().copied().collect();
    for &(v, e) in b {
        *map.entry(v).or_insert(0) += e;
    }
    map.into_iter().collect()
}

/// Removes one power of `v` from a monomial containing it.
pub(crate) fn mono_divide(m: &Monomial, v: Var) -> Monomial {
    m.iter()
        .filter_map(|&(w, e)| {
            if w == v {
                (e > 1).then_some((w, e - 1))
            } else {
                Some((w, e))
            }
        })
        .collect()
}
