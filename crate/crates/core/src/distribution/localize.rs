//! Hadamard factorization of polynomials and the decomposition of
//! distributions vanishing at a base point into `Σ fᵢ·Tᵢ` with `fᵢ(a) = 0`.

use std::collections::BTreeMap;

use num_rational::BigRational;
use num_traits::One;

use super::{DiracTerm, DensityTerm, DistributionError, Result, Term, TransversalDistribution};
use crate::expr::{mono_divide, AxisBox, Constant, Expr, Node, Poly, Var};

/// `f = value + Σᵢ (xᵢ − aᵢ)·gᵢ`. Fibre variables, if any, are parameters,
/// so `value` is `f(a, y)`.
#[derive(Clone, Debug)]
pub struct Hadamard {
    pub value: Expr,
    pub factors: Vec<(usize, Expr)>,
}

/// Pairs `(fᵢ, Tᵢ)` with `fᵢ(a) = 0` and `Σ fᵢ·Tᵢ = T`.
pub type Localization = Vec<(Expr, TransversalDistribution)>;

fn exact_point(a: &[f64]) -> Vec<BigRational> {
    a.iter()
        .map(|&v| BigRational::from_float(v).expect("finite base point"))
        .collect()
}

fn shift(p: &Poly, a: &[BigRational], sign: i32) -> Poly {
    p.compose(&|v| match v {
        Var::X(i) if i < a.len() => {
            let c = if sign > 0 { a[i].clone() } else { -a[i].clone() };
            Some(Poly::var(v).add(&Poly::constant(c)))
        }
        _ => None,
    })
}

fn hadamard_poly(p: &Poly, a: &[BigRational]) -> (Poly, BTreeMap<usize, Poly>) {
    let shifted = shift(p, a, 1);
    let mut value = Poly::zero();
    let mut parts: BTreeMap<usize, Poly> = BTreeMap::new();
    for (m, c) in shifted.terms() {
        match m.iter().find_map(|&(v, _)| match v {
            Var::X(i) => Some(i),
            Var::Y(_) => None,
        }) {
            None => value.add_term(m.clone(), c.clone()),
            Some(i) => parts
                .entry(i)
                .or_insert_with(Poly::zero)
                .add_term(mono_divide(m, Var::X(i)), c.clone()),
        }
    }
    let parts = parts
        .into_iter()
        .map(|(i, g)| (i, shift(&g, a, -1)))
        .filter(|(_, g)| !g.is_zero())
        .collect();
    (value, parts)
}

/// Exact Hadamard factorization of a polynomial at the base point `a`.
pub fn hadamard_factor(f: &Expr, a: &[f64]) -> Result<Hadamard> {
    let p = f.to_poly()?;
    if let Some(Var::X(i)) = f.free_vars().into_iter().find(|v| matches!(v, Var::X(i) if *i >= a.len())) {
        return Err(DistributionError::DimensionMismatch {
            expected: i + 1,
            got: a.len(),
        });
    }
    let (value, parts) = hadamard_poly(&p, &exact_point(a));
    Ok(Hadamard {
        value: value.to_expr(),
        factors: parts.into_iter().map(|(i, g)| (i, g.to_expr())).collect(),
    })
}

fn flatten<'a>(e: &'a Expr, out: &mut Vec<&'a Expr>, negate: &mut bool) {
    match e.node() {
        Node::Mul(a, b) => {
            flatten(a, out, negate);
            flatten(b, out, negate);
        }
        Node::Neg(a) => {
            *negate = !*negate;
            flatten(a, out, negate);
        }
        _ => out.push(e),
    }
}

/// Splits `w = P·R` with `P` the product of the polynomial factors.
fn split_polynomial(w: &Expr) -> (Poly, Expr) {
    let mut factors = Vec::new();
    let mut negate = false;
    flatten(w, &mut factors, &mut negate);
    let mut p = Poly::constant(if negate {
        -BigRational::one()
    } else {
        BigRational::one()
    });
    let mut rest = Expr::one();
    for f in factors {
        match Poly::from_expr(f) {
            Some(q) => p = p.mul(&q),
            None => rest = Expr::mul(&rest, f),
        }
    }
    (p, rest)
}

/// `1 − e·bump((x_i − a_i)/r)`: zero at `a`, exactly one on `support`.
fn cutoff(a: &[f64], support: &AxisBox) -> Option<Expr> {
    let sides = support.sides()?;
    let (i, d) = sides
        .iter()
        .zip(a)
        .map(|(s, &ai)| (s.lo - ai).max(ai - s.hi).max(0.0))
        .enumerate()
        .max_by(|p, q| p.1.total_cmp(&q.1))?;
    if d <= 0.0 {
        return None;
    }
    let scale = Expr::float(1.0 / (d * (1.0 - 1e-9)));
    let arg = Expr::mul(&Expr::sub(&Expr::x(i), &Expr::float(a[i])), &scale);
    let envelope = Expr::mul(&Expr::constant(Constant::E), &Expr::bump(&arg));
    Some(Expr::sub(&Expr::one(), &envelope))
}

fn vanishes_at(p: &Poly, a: &[BigRational]) -> bool {
    p.compose(&|v| match v {
        Var::X(i) if i < a.len() => Some(Poly::constant(a[i].clone())),
        _ => None,
    })
    .is_zero()
}

impl TransversalDistribution {
    /// Writes `T` with `T_a = 0` as `Σ fᵢ·Tᵢ` with `fᵢ ∈ 𝔪_a`.
    ///
    /// Terms whose support misses `a` are split off with a cutoff that is
    /// one on their support; every other term needs a polynomial factor
    /// vanishing at `a`, which is Hadamard-factored.
    pub fn localize_decompose(&self, a: &[f64]) -> Result<Localization> {
        let l = self.bundle.base_dim;
        if !self.restrict(a)?.is_zero() {
            return Err(DistributionError::NotVanishing { point: a.to_vec() });
        }
        let exact = exact_point(a);
        let mut grouped: BTreeMap<usize, Vec<Term>> = BTreeMap::new();
        let mut separate: Localization = Vec::new();
        for t in &self.terms {
            let (base_box, body) = match t {
                Term::Dirac(d) => (d.support.clone(), &d.weight),
                Term::Density(d) => (d.support.project(0..l), &d.phi),
            };
            if base_box.is_empty() || body.is_zero() {
                continue;
            }
            if !base_box.contains(a) {
                let f = cutoff(a, &base_box).expect("point outside a nonempty box");
                separate.push((f, TransversalDistribution::from_parts(self.bundle, vec![t.clone()])));
                continue;
            }
            let (p, rest) = split_polynomial(body);
            if p.is_zero() {
                continue;
            }
            if !vanishes_at(&p, &exact) {
                return Err(DistributionError::UnsupportedForm(format!(
                    "`{body}` has no polynomial factor vanishing at {a:?}"
                )));
            }
            let (_, parts) = hadamard_poly(&p, &exact);
            for (i, g) in parts {
                let w = Expr::mul(&g.to_expr(), &rest);
                let term: Term = match t {
                    Term::Dirac(d) => {
                        DiracTerm::derived(d.section.clone(), w, d.beta.clone(), &d.support).into()
                    }
                    Term::Density(d) => {
                        DensityTerm::derived(self.bundle, w, d.hidden, &d.support).into()
                    }
                };
                grouped.entry(i).or_default().push(term);
            }
        }
        let mut out: Localization = grouped
            .into_iter()
            .map(|(i, terms)| {
                let f = Expr::sub(&Expr::x(i), &Expr::float(a[i]));
                (f, TransversalDistribution::from_parts(self.bundle, terms))
            })
            .collect();
        out.extend(separate);
        Ok(out)
    }
}
