//! Grid-certified seminorms `p_{K,m}`, `p_B`, and membership in the
//! neighbourhoods `V_{𝐦,𝐞}` and `V_{𝐁,𝐦,𝐞}`.
//!
//! Suprema are taken over the lattice `hℤⁿ ∩ K` with a spacing `h` that
//! depends only on the grid density, so grids over nested boxes are nested
//! and the sampled seminorms are monotone in `K` literally.

use std::sync::atomic::{AtomicUsize, Ordering};

use serde::Serialize;
use thiserror::Error;

use crate::distribution::{BaseFunction, DistributionError, PointDistribution, TransversalDistribution};
use crate::expr::{AxisBox, Expr, Layout, MultiIndex};

pub const DEFAULT_GRID_DENSITY: usize = 33;

static DENSITY: AtomicUsize = AtomicUsize::new(DEFAULT_GRID_DENSITY);

/// Points per unit-2 interval used by grid suprema.
pub fn grid_density() -> usize {
    DENSITY.load(Ordering::Relaxed)
}

pub fn set_grid_density(n: usize) {
    assert!(n >= 2, "grid density must be at least 2");
    DENSITY.store(n, Ordering::Relaxed);
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TopologyError {
    #[error("seminorm box must be nonempty and bounded, got {0}")]
    BadBox(String),
    #[error("function has {got} coordinates, seminorm box has {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("profile is invalid: {0}")]
    BadProfile(String),
    #[error("bounded family must be nonempty")]
    EmptyFamily,
    #[error("support {0} is unbounded")]
    Unbounded(String),
    #[error(transparent)]
    Distribution(#[from] DistributionError),
}

type Result<T> = std::result::Result<T, TopologyError>;

/// Points of `hℤⁿ ∩ domain` with `h = 2/(density − 1)`, in lexicographic
/// order. When some side contains no lattice point the spacing is halved
/// until every side does.
pub fn lattice_points(domain: &AxisBox, density: usize) -> Vec<Vec<f64>> {
    let Some(sides) = domain.sides() else {
        return Vec::new();
    };
    if sides.iter().any(|s| !s.is_bounded()) {
        return Vec::new();
    }
    let mut h = 2.0 / (density.max(2) - 1) as f64;
    let axes = loop {
        let axes: Vec<Vec<f64>> = sides
            .iter()
            .map(|s| {
                let lo = (s.lo / h).ceil() as i64;
                let hi = (s.hi / h).floor() as i64;
                (lo..=hi).map(|j| j as f64 * h).collect()
            })
            .collect();
        if axes.iter().all(|a| !a.is_empty()) {
            break axes;
        }
        h *= 0.5;
    };
    let mut out = vec![Vec::with_capacity(axes.len())];
    for axis in &axes {
        out = out
            .into_iter()
            .flat_map(|p| {
                axis.iter().map(move |&v| {
                    let mut q = p.clone();
                    q.push(v);
                    q
                })
            })
            .collect();
    }
    out
}

/// Where a grid supremum was attained.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Sup {
    pub value: f64,
    pub point: Vec<f64>,
    pub alpha: MultiIndex,
}

/// `p_{K,m}(F) = sup_{x∈K, |α|≤m} |D^α F(x)|`, sampled on the lattice.
#[derive(Clone, Debug)]
pub struct Seminorm {
    domain: AxisBox,
    order: u32,
    density: usize,
}

impl Seminorm {
    pub fn new(domain: AxisBox, order: u32) -> Result<Seminorm> {
        if domain.is_empty() || !domain.is_bounded() || domain.dim() == 0 {
            return Err(TopologyError::BadBox(domain.to_string()));
        }
        Ok(Seminorm {
            domain,
            order,
            density: grid_density(),
        })
    }

    pub fn with_density(mut self, density: usize) -> Seminorm {
        self.density = density;
        self
    }

    pub fn domain(&self) -> &AxisBox {
        &self.domain
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    fn sup_over(&self, dim: usize, eval: impl Fn(&MultiIndex, &[f64]) -> f64) -> Sup {
        let points = lattice_points(&self.domain, self.density);
        let mut best = Sup {
            value: 0.0,
            point: points[0].clone(),
            alpha: MultiIndex::zeros(dim),
        };
        for alpha in MultiIndex::up_to(dim, self.order) {
            for p in &points {
                let v = eval(&alpha, p).abs();
                if v > best.value {
                    best = Sup {
                        value: v,
                        point: p.clone(),
                        alpha: alpha.clone(),
                    };
                }
            }
        }
        best
    }

    /// Seminorm of an expression whose coordinates are laid out as `layout`.
    pub fn eval(&self, f: &Expr, layout: Layout) -> Result<Sup> {
        if layout.dim() != self.domain.dim() {
            return Err(TopologyError::DimensionMismatch {
                expected: self.domain.dim(),
                got: layout.dim(),
            });
        }
        f.check_layout(layout).map_err(DistributionError::from)?;
        let derivs: Vec<(MultiIndex, Expr)> = MultiIndex::up_to(layout.dim(), self.order)
            .into_iter()
            .map(|a| {
                let d = f.differentiate(layout, &a).expect("layout checked");
                (a, d)
            })
            .collect();
        Ok(self.sup_over(layout.dim(), |alpha, p| {
            let d = &derivs.iter().find(|(a, _)| a == alpha).expect("enumerated").1;
            let (x, y) = p.split_at(layout.base);
            d.eval(x, y)
        }))
    }

    /// Seminorm of a base function.
    pub fn eval_base(&self, f: &BaseFunction) -> Result<Sup> {
        if f.base_dim() != self.domain.dim() {
            return Err(TopologyError::DimensionMismatch {
                expected: self.domain.dim(),
                got: f.base_dim(),
            });
        }
        let derivs: Vec<(MultiIndex, BaseFunction)> = MultiIndex::up_to(f.base_dim(), self.order)
            .into_iter()
            .map(|a| {
                let d = f.derivative(&a);
                (a, d)
            })
            .collect();
        Ok(self.sup_over(f.base_dim(), |alpha, p| {
            derivs
                .iter()
                .find(|(a, _)| a == alpha)
                .expect("enumerated")
                .1
                .value(p)
        }))
    }
}

/// Finite surrogate for a bounded set `B ⊂ C^∞(ℝᵏ)`.
#[derive(Clone, Debug)]
pub struct BoundedFamily {
    members: Vec<Expr>,
}

impl BoundedFamily {
    pub fn new(members: Vec<Expr>) -> Result<BoundedFamily> {
        if members.is_empty() {
            return Err(TopologyError::EmptyFamily);
        }
        Ok(BoundedFamily { members })
    }

    pub fn members(&self) -> &[Expr] {
        &self.members
    }
}

/// `p_B(v) = max_{g∈B} |v(g)|`.
pub fn pb_eval(b: &BoundedFamily, v: &PointDistribution) -> Result<f64> {
    let mut best = 0.0f64;
    for g in &b.members {
        best = best.max(v.pair(g)?.abs());
    }
    Ok(best)
}

/// Truncated sequences `𝐦` and `𝐞` with exhaustion `K_n = [−n, n]ˡ`.
#[derive(Clone, Debug, PartialEq)]
pub struct LfProfile {
    m: Vec<u32>,
    eps: Vec<f64>,
}

impl LfProfile {
    pub fn new(m: Vec<u32>, eps: Vec<f64>) -> Result<LfProfile> {
        if m.is_empty() || m.len() != eps.len() {
            return Err(TopologyError::BadProfile(format!(
                "need equally many orders and bounds, got {} and {}",
                m.len(),
                eps.len()
            )));
        }
        if m.windows(2).any(|w| w[0] > w[1]) {
            return Err(TopologyError::BadProfile("orders must be nondecreasing".into()));
        }
        if eps.iter().any(|&e| !(e > 0.0)) || eps.windows(2).any(|w| w[0] <= w[1]) {
            return Err(TopologyError::BadProfile(
                "bounds must be positive and strictly decreasing".into(),
            ));
        }
        Ok(LfProfile { m, eps })
    }

    pub fn depth(&self) -> usize {
        self.m.len()
    }

    pub fn orders(&self) -> &[u32] {
        &self.m
    }

    pub fn bounds(&self) -> &[f64] {
        &self.eps
    }

    /// The `n` whose conditions govern `x`: the annulus `K_n \ K_{n−1}`,
    /// with everything beyond `K_{n_max−1}` assigned to `n_max`.
    pub fn shell(&self, x: &[f64]) -> usize {
        let r = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        (r.ceil() as usize).clamp(1, self.depth())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LfWitness {
    pub point: Vec<f64>,
    pub alpha: MultiIndex,
    pub n: usize,
    pub value: f64,
    pub bound: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Membership {
    pub holds: bool,
    pub witness: Option<LfWitness>,
}

fn membership_scan(
    profile: &LfProfile,
    support: &AxisBox,
    dim: usize,
    density: usize,
    mut measure: impl FnMut(&MultiIndex, &[f64]) -> Result<f64>,
) -> Result<Membership> {
    if support.is_empty() {
        return Ok(Membership {
            holds: true,
            witness: None,
        });
    }
    if !support.is_bounded() {
        return Err(TopologyError::Unbounded(support.to_string()));
    }
    let points = lattice_points(support, density);
    for n in 1..=profile.depth() {
        let alphas = MultiIndex::up_to(dim, profile.m[n - 1]);
        for p in points.iter().filter(|p| profile.shell(p) == n) {
            for alpha in &alphas {
                let v = measure(alpha, p)?;
                if !(v < profile.eps[n - 1]) {
                    return Ok(Membership {
                        holds: false,
                        witness: Some(LfWitness {
                            point: p.clone(),
                            alpha: alpha.clone(),
                            n,
                            value: v,
                            bound: profile.eps[n - 1],
                        }),
                    });
                }
            }
        }
    }
    Ok(Membership {
        holds: true,
        witness: None,
    })
}

/// Membership of `f` in `V_{𝐦,𝐞}` on the lattice.
pub fn lf_membership(profile: &LfProfile, f: &BaseFunction, density: usize) -> Result<Membership> {
    let mut cache: Vec<(MultiIndex, BaseFunction)> = Vec::new();
    membership_scan(profile, &f.support_box(), f.base_dim(), density, |alpha, p| {
        if !cache.iter().any(|(a, _)| a == alpha) {
            cache.push((alpha.clone(), f.derivative(alpha)));
        }
        let d = &cache.iter().find(|(a, _)| a == alpha).expect("cached").1;
        Ok(d.value(p).abs())
    })
}

/// Membership of `u` in `V_{𝐁,𝐦,𝐞}`: `p_{B_n}((D^α u)_x) < ε_n`.
/// `families` holds one family per `n`, or a single family for all.
pub fn lfb_membership(
    profile: &LfProfile,
    families: &[BoundedFamily],
    u: &TransversalDistribution,
    density: usize,
) -> Result<Membership> {
    if families.is_empty() || (families.len() != 1 && families.len() < profile.depth()) {
        return Err(TopologyError::BadProfile(format!(
            "need 1 or {} bounded families, got {}",
            profile.depth(),
            families.len()
        )));
    }
    let mut cache: Vec<(MultiIndex, TransversalDistribution)> = Vec::new();
    membership_scan(
        profile,
        &u.base_support(),
        u.bundle().base_dim,
        density,
        |alpha, p| {
            if !cache.iter().any(|(a, _)| a == alpha) {
                cache.push((alpha.clone(), u.family_derivative(alpha)?));
            }
            let d = &cache.iter().find(|(a, _)| a == alpha).expect("cached").1;
            let n = profile.shell(p);
            let b = &families[if families.len() == 1 { 0 } else { n - 1 }];
            pb_eval(b, &d.restrict(p)?)
        },
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bundle::{Section, TrivialBundle};
    use crate::expr::{parse, Interval};

    fn b1(lo: f64, hi: f64) -> AxisBox {
        AxisBox::new(vec![Interval::new(lo, hi)])
    }

    #[test]
    fn lattice_is_nested_and_includes_zero() {
        let small = lattice_points(&b1(-1.0, 1.0), 33);
        let large = lattice_points(&b1(-2.0, 2.0), 33);
        assert_eq!(small.len(), 33);
        assert!(small.iter().all(|p| large.contains(p)));
        assert!(small.contains(&vec![0.0]));
        let tiny = lattice_points(&b1(0.01, 0.02), 33);
        assert!(!tiny.is_empty());
        assert!(tiny.iter().all(|p| (0.01..=0.02).contains(&p[0])));
    }

    #[test]
    fn seminorm_examples() {
        let l = Layout::base_only(1);
        let bump = parse("bump(x0)", l).unwrap();
        let p = Seminorm::new(b1(-1.0, 1.0), 0).unwrap();
        let s = p.eval(&bump, l).unwrap();
        assert_eq!(s.value, (-1.0f64).exp());
        assert_eq!(s.point, vec![0.0]);
        assert_eq!(p.eval(&Expr::zero(), l).unwrap().value, 0.0);
        let x = parse("x0", l).unwrap();
        let p = Seminorm::new(b1(0.0, 1.0), 1).unwrap();
        assert_eq!(p.eval(&x, l).unwrap().value, 1.0);
        assert!(Seminorm::new(AxisBox::empty(1), 0).is_err());
    }

    #[test]
    fn pb_examples() {
        let k = Layout::fibre_only(1);
        let fam = BoundedFamily::new(vec![parse("y0^2", k).unwrap(), parse("y0 + 1", k).unwrap()])
            .unwrap();
        assert_eq!(pb_eval(&fam, &PointDistribution::delta(vec![0.0])).unwrap(), 1.0);
        assert_eq!(pb_eval(&fam, &PointDistribution::zero(1)).unwrap(), 0.0);
        assert!(BoundedFamily::new(vec![]).is_err());
    }

    #[test]
    fn profile_validation() {
        assert!(LfProfile::new(vec![0, 1], vec![0.5, 0.1]).is_ok());
        assert!(LfProfile::new(vec![1, 0], vec![0.5, 0.1]).is_err());
        assert!(LfProfile::new(vec![0, 1], vec![0.1, 0.5]).is_err());
        assert!(LfProfile::new(vec![0], vec![0.0]).is_err());
        assert!(LfProfile::new(vec![], vec![]).is_err());
        let p = LfProfile::new(vec![0, 0, 0], vec![3.0, 2.0, 1.0]).unwrap();
        assert_eq!(p.shell(&[0.0]), 1);
        assert_eq!(p.shell(&[1.0]), 1);
        assert_eq!(p.shell(&[1.5]), 2);
        assert_eq!(p.shell(&[-7.0]), 3);
    }

    #[test]
    fn lf_membership_examples() {
        let l = Layout::base_only(1);
        let zero = BaseFunction::zero(1);
        let prof = LfProfile::new(vec![0, 1], vec![0.5, 0.4]).unwrap();
        assert!(lf_membership(&prof, &zero, 33).unwrap().holds);

        let bump = BaseFunction::symbolic(1, parse("bump(x0)", l).unwrap());
        // the grid sup of bump over the first shell is e⁻¹ < 0.5
        assert!(lf_membership(&prof, &bump, 33).unwrap().holds);
        let tight = LfProfile::new(vec![0, 1], vec![0.3, 0.2]).unwrap();
        let m = lf_membership(&tight, &bump, 33).unwrap();
        assert!(!m.holds);
        let w = m.witness.unwrap();
        assert_eq!(w.n, 1);
        assert!(w.value >= 0.3);

        let big = bump.scale(1e6);
        let tiny = LfProfile::new(vec![0], vec![1e-3]).unwrap();
        assert!(!lf_membership(&tiny, &big, 33).unwrap().holds);
    }

    #[test]
    fn lfb_membership_examples() {
        let bundle = TrivialBundle::new(1, 1).unwrap();
        let fam = vec![BoundedFamily::new(vec![parse("y0^2 + 1", bundle.fibre_layout()).unwrap()])
            .unwrap()];
        let prof = LfProfile::new(vec![1, 1], vec![100.0, 50.0]).unwrap();
        let zero = TransversalDistribution::zero(bundle);
        assert!(lfb_membership(&prof, &fam, &zero, 17).unwrap().holds);

        let u = TransversalDistribution::dirac(
            Section::diagonal(bundle).unwrap(),
            parse("bump(x0)", bundle.base_layout()).unwrap(),
            MultiIndex::zeros(1),
        )
        .unwrap();
        assert!(lfb_membership(&prof, &fam, &u, 17).unwrap().holds);
        let strict = LfProfile::new(vec![1, 1], vec![0.2, 0.1]).unwrap();
        let m = lfb_membership(&strict, &fam, &u, 17).unwrap();
        assert!(!m.holds);
        let w = m.witness.unwrap();
        // the witness is exact: recompute p_B at the reported point
        let v = u.family_derivative(&w.alpha).unwrap().restrict(&w.point).unwrap();
        assert_eq!(pb_eval(&fam[0], &v).unwrap(), w.value);
        assert!(w.value >= w.bound);
    }
}
