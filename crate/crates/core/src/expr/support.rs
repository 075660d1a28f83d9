//! Structural support estimation.
//!
//! Every bump factor `bump⁽ⁿ⁾(g)` of a product with affine `g` forces
//! `|g| < 1` wherever the product is nonzero. Those linear constraints are
//! propagated across the product's variables; sums take the hull of their
//! operands. The result is an upper bound of the true support.

use std::collections::BTreeMap;

use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};

use super::{AxisBox, Expr, Func, Interval, Layout, Node, Poly, Var};

/// `None` means the expression is identically zero.
type Zone = Option<BTreeMap<Var, Interval>>;

pub(super) fn affine(e: &Expr) -> Option<(BTreeMap<Var, BigRational>, BigRational)> {
    let p = Poly::from_expr(e)?;
    let mut coeffs = BTreeMap::new();
    let mut constant = BigRational::zero();
    for (m, c) in p.terms() {
        match m.as_slice() {
            [] => constant = c.clone(),
            [(v, 1)] => {
                coeffs.insert(*v, c.clone());
            }
            _ => return None,
        }
    }
    Some((coeffs, constant))
}

pub(super) fn support_box(e: &Expr, layout: Layout) -> AxisBox {
    support_box_seeded(e, layout, &BTreeMap::new())
}

/// Support with some variables pinned to known ranges.
pub(super) fn support_box_seeded(e: &Expr, layout: Layout, seed: &BTreeMap<Var, Interval>) -> AxisBox {
    match zone(e, seed) {
        None => AxisBox::empty(layout.dim()),
        Some(bounds) => AxisBox::new(
            layout
                .vars()
                .map(|v| bounds.get(&v).copied().unwrap_or_else(Interval::whole))
                .collect(),
        ),
    }
}

fn zone(e: &Expr, seed: &BTreeMap<Var, Interval>) -> Zone {
    match e.node() {
        Node::Num(n) => (!n.exact().is_zero()).then(BTreeMap::new),
        Node::Named(_) | Node::Var(_) => Some(BTreeMap::new()),
        Node::Add(a, b) | Node::Sub(a, b) => match (zone(a, seed), zone(b, seed)) {
            (None, z) | (z, None) => z,
            (Some(za), Some(zb)) => Some(
                za.into_iter()
                    .filter_map(|(v, i)| zb.get(&v).map(|j| (v, i.hull(j))))
                    .collect(),
            ),
        },
        Node::Apply(Func::Exp | Func::Cos, _) => Some(BTreeMap::new()),
        _ => product_zone(e, seed),
    }
}

fn round_down(r: &BigRational) -> f64 {
    let f = r.to_f64().unwrap_or(f64::NEG_INFINITY);
    match BigRational::from_float(f) {
        Some(back) if &back <= r => f,
        _ => f.next_down(),
    }
}

fn round_up(r: &BigRational) -> f64 {
    let f = r.to_f64().unwrap_or(f64::INFINITY);
    match BigRational::from_float(f) {
        Some(back) if &back >= r => f,
        _ => f.next_up(),
    }
}

struct Constraint {
    coeffs: Vec<(Var, f64)>,
    offset: f64,
}

fn collect_factors<'a>(e: &'a Expr, out: &mut Vec<&'a Expr>) {
    match e.node() {
        Node::Mul(a, b) => {
            collect_factors(a, out);
            collect_factors(b, out);
        }
        Node::Neg(a) | Node::Div(a, _) => collect_factors(a, out),
        Node::Pow(a, n) if *n > 0 => collect_factors(a, out),
        Node::Apply(Func::Sin, a) => collect_factors(a, out),
        _ => out.push(e),
    }
}

fn product_zone(e: &Expr, seed: &BTreeMap<Var, Interval>) -> Zone {
    let mut factors = Vec::new();
    collect_factors(e, &mut factors);
    let mut bounds = seed.clone();
    let mut constraints = Vec::new();
    for f in factors {
        let sub = match f.node() {
            Node::Bump { arg, .. } => {
                if let Some((coeffs, offset)) = affine(arg) {
                    if coeffs.len() == 1 {
                        let (v, c) = coeffs.iter().next().unwrap();
                        let one = BigRational::from_integer(1.into());
                        let a = (-&one - &offset) / c;
                        let b = (&one - &offset) / c;
                        let (a, b) = if a <= b { (a, b) } else { (b, a) };
                        let side = Interval::new(round_down(&a), round_up(&b));
                        let merged = match bounds.get(v) {
                            Some(j) => side.intersect(j)?,
                            None => side,
                        };
                        bounds.insert(*v, merged);
                        continue;
                    }
                    let coeffs: Vec<(Var, f64)> = coeffs
                        .into_iter()
                        .map(|(v, c)| (v, c.to_f64().unwrap_or(f64::NAN)))
                        .collect();
                    let offset = offset.to_f64().unwrap_or(f64::NAN);
                    if coeffs.is_empty() {
                        if offset.abs() >= 1.0 {
                            return None;
                        }
                    } else {
                        constraints.push(Constraint { coeffs, offset });
                    }
                }
                continue;
            }
            Node::Mul(..) | Node::Neg(_) | Node::Div(..) | Node::Pow(..) => continue,
            _ => zone(f, seed)?,
        };
        for (v, i) in sub {
            let merged = match bounds.get(&v) {
                Some(j) => i.intersect(j)?,
                None => i,
            };
            bounds.insert(v, merged);
        }
    }
    propagate(&constraints, &mut bounds)?;
    Some(bounds)
}

fn propagate(constraints: &[Constraint], bounds: &mut BTreeMap<Var, Interval>) -> Option<()> {
    for _round in 0..16 {
        let mut changed = false;
        for c in constraints {
            for (k, &(v, coeff)) in c.coeffs.iter().enumerate() {
                if coeff == 0.0 || !coeff.is_finite() {
                    continue;
                }
                let mut rest = Interval::point(c.offset);
                let mut bounded = true;
                for (m, &(w, cw)) in c.coeffs.iter().enumerate() {
                    if m == k {
                        continue;
                    }
                    match bounds.get(&w) {
                        Some(i) if i.is_bounded() => rest = rest.add(&i.mul(&Interval::point(cw))),
                        _ => {
                            bounded = false;
                            break;
                        }
                    }
                }
                if !bounded {
                    continue;
                }
                let scaled = Interval::new(-1.0, 1.0).sub(&rest);
                let range = scaled.mul(&Interval::point(coeff).recip());
                let next = match bounds.get(&v) {
                    Some(old) => old.intersect(&range)?,
                    None => range,
                };
                if bounds.get(&v) != Some(&next) {
                    // ignore sub-ulp tightening so the loop settles
                    let material = bounds.get(&v).is_none_or(|old| {
                        (old.lo - next.lo).abs() > 1e-12 || (old.hi - next.hi).abs() > 1e-12
                    });
                    bounds.insert(v, next);
                    changed |= material;
                }
            }
        }
        if !changed {
            break;
        }
    }
    Some(())
}
