//! Compactly supported transversal distributions on the trivial bundle,
//! represented as finite sums of Dirac section terms and density terms.
//!
//! A Dirac term `(σ, f, β)` acts by `F ↦ f(x)·(D_y^β F)(x, σ(x))`; a density
//! term acts by `F ↦ ∫ φ(x, y) F(x, y) dy`. Density terms may carry hidden
//! fibre blocks: extra copies of `ℝᵏ` appended after the visible fibre
//! variables and integrated out along with them. Composites of density
//! kernels use this to stay symbolic.

mod calculus;
mod localize;
mod support;

use thiserror::Error;

use crate::bundle::{BundleError, Section, TrivialBundle};
use crate::expr::{AxisBox, Expr, ExprError, Layout, MultiIndex, Var};
use crate::quadrature;

pub use calculus::separating_probe;
pub use localize::{hadamard_factor, Hadamard, Localization};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DistributionError {
    #[error(transparent)]
    Bundle(#[from] BundleError),
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error("{what} has unbounded support {support}")]
    UnboundedSupport { what: String, support: String },
    #[error("weight support {support} leaves the section domain {domain}")]
    OutsideSectionDomain { support: String, domain: String },
    #[error("terms live on different bundles")]
    BundleMismatch,
    #[error("expected {expected} coordinates, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("restriction at {point:?} is not zero")]
    NotVanishing { point: Vec<f64> },
    #[error("unsupported form: {0}")]
    UnsupportedForm(String),
}

type Result<T> = std::result::Result<T, DistributionError>;

/// `⟦E, f·D_y^β⟧`: the family `x ↦ f(x)·(D^β evaluated at σ(x))`.
#[derive(Clone, Debug)]
pub struct DiracTerm {
    section: Section,
    weight: Expr,
    beta: MultiIndex,
    support: AxisBox,
}

impl DiracTerm {
    pub fn new(section: Section, weight: Expr, beta: MultiIndex) -> Result<DiracTerm> {
        let bundle = section.bundle();
        weight.check_layout(bundle.base_layout())?;
        if beta.len() != bundle.fibre_dim {
            return Err(DistributionError::DimensionMismatch {
                expected: bundle.fibre_dim,
                got: beta.len(),
            });
        }
        let support = weight.support_box(bundle.base_layout());
        if !support.is_bounded() {
            return Err(DistributionError::UnboundedSupport {
                what: format!("weight {weight}"),
                support: support.to_string(),
            });
        }
        if let Some(domain) = section.domain() {
            if !support.is_subset_of(domain) {
                return Err(DistributionError::OutsideSectionDomain {
                    support: support.to_string(),
                    domain: domain.to_string(),
                });
            }
        }
        Ok(DiracTerm {
            section,
            weight,
            beta,
            support,
        })
    }

    /// Builds a term whose weight is known to vanish outside `bound`.
    pub(crate) fn derived(section: Section, weight: Expr, beta: MultiIndex, bound: &AxisBox) -> Self {
        let support = weight
            .support_box(section.bundle().base_layout())
            .intersect(bound);
        DiracTerm {
            section,
            weight,
            beta,
            support,
        }
    }

    pub fn section(&self) -> &Section {
        &self.section
    }

    pub fn weight(&self) -> &Expr {
        &self.weight
    }

    pub fn beta(&self) -> &MultiIndex {
        &self.beta
    }

    /// Bounding box of the weight's support in the base.
    pub fn support(&self) -> &AxisBox {
        &self.support
    }
}

/// `T_φ`: the family `x ↦ φ(x, −) dV`, possibly with hidden fibre blocks.
#[derive(Clone, Debug)]
pub struct DensityTerm {
    phi: Expr,
    hidden: usize,
    support: AxisBox,
}

impl DensityTerm {
    pub fn new(bundle: TrivialBundle, phi: Expr) -> Result<DensityTerm> {
        DensityTerm::with_hidden(bundle, phi, 0, None)
    }

    /// Density over `l + k·(1 + hidden)` coordinates. `bound`, when given,
    /// is a box known to contain the support.
    pub fn with_hidden(
        bundle: TrivialBundle,
        phi: Expr,
        hidden: usize,
        bound: Option<AxisBox>,
    ) -> Result<DensityTerm> {
        let layout = density_layout(bundle, hidden);
        phi.check_layout(layout)?;
        let mut support = phi.support_box(layout);
        if let Some(b) = bound {
            if b.dim() != layout.dim() {
                return Err(DistributionError::DimensionMismatch {
                    expected: layout.dim(),
                    got: b.dim(),
                });
            }
            support = support.intersect(&b);
        }
        if !support.is_bounded() {
            return Err(DistributionError::UnboundedSupport {
                what: format!("density {phi}"),
                support: support.to_string(),
            });
        }
        Ok(DensityTerm {
            phi,
            hidden,
            support,
        })
    }

    pub(crate) fn derived(bundle: TrivialBundle, phi: Expr, hidden: usize, bound: &AxisBox) -> Self {
        let support = phi.support_box(density_layout(bundle, hidden)).intersect(bound);
        DensityTerm {
            phi,
            hidden,
            support,
        }
    }

    /// Takes `support` as is; nodes then match the factors' own boxes.
    pub(crate) fn with_support(phi: Expr, hidden: usize, support: AxisBox) -> Self {
        DensityTerm {
            phi,
            hidden,
            support,
        }
    }

    pub fn phi(&self) -> &Expr {
        &self.phi
    }

    pub fn hidden(&self) -> usize {
        self.hidden
    }

    /// Bounding box over base, fibre and hidden coordinates.
    pub fn support(&self) -> &AxisBox {
        &self.support
    }

    fn integration_box(&self, base_dim: usize) -> AxisBox {
        self.support.project(base_dim..self.support.dim())
    }
}

/// Layout of a density with `hidden` extra fibre blocks.
pub fn density_layout(bundle: TrivialBundle, hidden: usize) -> Layout {
    Layout::new(bundle.base_dim, bundle.fibre_dim * (1 + hidden))
}

#[derive(Clone, Debug)]
pub enum Term {
    Dirac(DiracTerm),
    Density(DensityTerm),
}

impl From<DiracTerm> for Term {
    fn from(t: DiracTerm) -> Self {
        Term::Dirac(t)
    }
}

impl From<DensityTerm> for Term {
    fn from(t: DensityTerm) -> Self {
        Term::Density(t)
    }
}

/// An element of `E'_π(P)`.
#[derive(Clone, Debug)]
pub struct TransversalDistribution {
    bundle: TrivialBundle,
    terms: Vec<Term>,
}

impl TransversalDistribution {
    pub fn new(bundle: TrivialBundle, terms: Vec<Term>) -> Result<TransversalDistribution> {
        for t in &terms {
            if let Term::Dirac(d) = t {
                if d.section.bundle() != bundle {
                    return Err(DistributionError::BundleMismatch);
                }
            }
        }
        Ok(TransversalDistribution { bundle, terms })
    }

    pub fn zero(bundle: TrivialBundle) -> TransversalDistribution {
        TransversalDistribution {
            bundle,
            terms: Vec::new(),
        }
    }

    pub(crate) fn from_parts(bundle: TrivialBundle, terms: Vec<Term>) -> Self {
        TransversalDistribution { bundle, terms }
    }

    pub fn dirac(section: Section, weight: Expr, beta: MultiIndex) -> Result<Self> {
        let bundle = section.bundle();
        Ok(TransversalDistribution {
            bundle,
            terms: vec![DiracTerm::new(section, weight, beta)?.into()],
        })
    }

    pub fn density(bundle: TrivialBundle, phi: Expr) -> Result<Self> {
        Ok(TransversalDistribution {
            bundle,
            terms: vec![DensityTerm::new(bundle, phi)?.into()],
        })
    }

    pub fn bundle(&self) -> TrivialBundle {
        self.bundle
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add(&self, other: &TransversalDistribution) -> Result<Self> {
        if self.bundle != other.bundle {
            return Err(DistributionError::BundleMismatch);
        }
        let mut terms = self.terms.clone();
        terms.extend(other.terms.iter().cloned());
        Ok(TransversalDistribution {
            bundle: self.bundle,
            terms,
        })
    }

    pub fn scale(&self, c: f64) -> TransversalDistribution {
        self.module_action_base(&Expr::float(c))
            .expect("a constant is a base function")
    }

    /// `T(F)` as a function on the base.
    pub fn evaluate(&self, f: &Expr) -> Result<BaseFunction> {
        f.check_layout(self.bundle.layout())?;
        let l = self.bundle.base_dim;
        let mut symbolic = Expr::zero();
        let mut integrals = Vec::new();
        for t in &self.terms {
            match t {
                Term::Dirac(d) => {
                    let pulled = d.section.pull_back(&f.derive_y(&d.beta));
                    symbolic = Expr::add(&symbolic, &Expr::mul(&d.weight, &pulled));
                }
                Term::Density(d) => integrals.push(FibreIntegral {
                    integrand: Expr::mul(&d.phi, f),
                    domain: d.integration_box(l),
                }),
            }
        }
        Ok(BaseFunction {
            base_dim: l,
            symbolic,
            integrals,
            quad_order: quadrature::default_order(),
        })
    }

    /// `T_x`, the fibre distribution at `x`.
    pub fn restrict(&self, x: &[f64]) -> Result<PointDistribution> {
        if x.len() != self.bundle.base_dim {
            return Err(DistributionError::DimensionMismatch {
                expected: self.bundle.base_dim,
                got: x.len(),
            });
        }
        let l = self.bundle.base_dim;
        let mut out = PointDistribution::zero(self.bundle.fibre_dim);
        for t in &self.terms {
            match t {
                Term::Dirac(d) => out.atoms.push(Atom {
                    point: d.section.eval(x),
                    beta: d.beta.clone(),
                    coeff: d.weight.eval(x, &[]),
                }),
                Term::Density(d) => out.densities.push(PointDensity {
                    density: d.phi.fix_base(x),
                    hidden: d.hidden,
                    domain: d.integration_box(l),
                }),
            }
        }
        Ok(out)
    }
}

/// `∫ integrand(x, y) dy` over `domain`, for each base point `x`.
#[derive(Clone, Debug)]
pub struct FibreIntegral {
    pub integrand: Expr,
    pub domain: AxisBox,
}

impl FibreIntegral {
    pub fn value(&self, x: &[f64], q: usize) -> f64 {
        integrate_on_support(&self.integrand, x, &[], &self.domain, q, |y| {
            self.integrand.eval(x, y)
        })
    }
}

/// `∫ f` over `domain` in the fibre coordinates after `fixed_y`, one axis
/// at a time. Each axis is cut to where `e` can be nonzero once `x`,
/// `fixed_y` and the outer axes are pinned.
pub(crate) fn integrate_on_support(
    e: &Expr,
    x: &[f64],
    fixed_y: &[f64],
    domain: &AxisBox,
    q: usize,
    f: impl Fn(&[f64]) -> f64,
) -> f64 {
    let Some(sides) = domain.sides() else {
        return 0.0;
    };
    let m = fixed_y.len();
    let layout = Layout::new(x.len(), m + sides.len());
    let mut pinned: Vec<(Var, f64)> = x.iter().enumerate().map(|(i, &v)| (Var::X(i), v)).collect();
    pinned.extend(fixed_y.iter().enumerate().map(|(j, &v)| (Var::Y(j), v)));
    quadrature::integrate_nested(
        f,
        sides.len(),
        |outer| {
            let mut seed = pinned.clone();
            seed.extend(outer.iter().enumerate().map(|(j, &v)| (Var::Y(m + j), v)));
            let b = e.support_given(layout, &seed);
            let side = b.sides()?[x.len() + m + outer.len()];
            side.intersect(&sides[outer.len()])
        },
        q,
    )
}

/// A smooth compactly supported function on the base: a closed-form part
/// plus fibre integrals differentiated under the integral sign.
#[derive(Clone, Debug)]
pub struct BaseFunction {
    base_dim: usize,
    symbolic: Expr,
    integrals: Vec<FibreIntegral>,
    quad_order: usize,
}

impl BaseFunction {
    pub fn symbolic(base_dim: usize, e: Expr) -> BaseFunction {
        BaseFunction {
            base_dim,
            symbolic: e,
            integrals: Vec::new(),
            quad_order: quadrature::default_order(),
        }
    }

    pub fn zero(base_dim: usize) -> BaseFunction {
        BaseFunction::symbolic(base_dim, Expr::zero())
    }

    pub fn with_quad_order(mut self, q: usize) -> BaseFunction {
        self.quad_order = q;
        self
    }

    pub fn base_dim(&self) -> usize {
        self.base_dim
    }

    pub fn symbolic_part(&self) -> &Expr {
        &self.symbolic
    }

    pub fn integrals(&self) -> &[FibreIntegral] {
        &self.integrals
    }

    pub fn quad_order(&self) -> usize {
        self.quad_order
    }

    pub fn is_symbolic(&self) -> bool {
        self.integrals.is_empty()
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        let mut acc = self.symbolic.eval(x, &[]);
        for i in &self.integrals {
            acc += i.value(x, self.quad_order);
        }
        acc
    }

    pub fn derivative(&self, alpha: &MultiIndex) -> BaseFunction {
        BaseFunction {
            base_dim: self.base_dim,
            symbolic: self.symbolic.derive_x(alpha),
            integrals: self
                .integrals
                .iter()
                .map(|i| FibreIntegral {
                    integrand: i.integrand.derive_x(alpha),
                    domain: i.domain.clone(),
                })
                .collect(),
            quad_order: self.quad_order,
        }
    }

    /// Pointwise product with a base function `f`.
    pub fn mul_base(&self, f: &Expr) -> BaseFunction {
        BaseFunction {
            base_dim: self.base_dim,
            symbolic: Expr::mul(f, &self.symbolic),
            integrals: self
                .integrals
                .iter()
                .map(|i| FibreIntegral {
                    integrand: Expr::mul(f, &i.integrand),
                    domain: i.domain.clone(),
                })
                .collect(),
            quad_order: self.quad_order,
        }
    }

    pub fn scale(&self, c: f64) -> BaseFunction {
        self.mul_base(&Expr::float(c))
    }

    pub fn add(&self, other: &BaseFunction) -> BaseFunction {
        let mut integrals = self.integrals.clone();
        integrals.extend(other.integrals.iter().cloned());
        BaseFunction {
            base_dim: self.base_dim,
            symbolic: Expr::add(&self.symbolic, &other.symbolic),
            integrals,
            quad_order: self.quad_order,
        }
    }

    /// Bounding box of the support; empty for the zero function.
    pub fn support_box(&self) -> AxisBox {
        let l = self.base_dim;
        let mut acc = self.symbolic.support_box(Layout::base_only(l));
        for i in &self.integrals {
            let layout = Layout::new(l, i.domain.dim());
            let s = i.integrand.support_box(layout).project(0..l);
            acc = acc.hull(&s);
        }
        acc
    }

    /// Distance to the nearest base-dependent bump boundary.
    pub fn bump_margin(&self, x: &[f64]) -> Option<f64> {
        std::iter::once(&self.symbolic)
            .chain(self.integrals.iter().map(|i| &i.integrand))
            .filter_map(|e| e.base_bump_margin(x))
            .reduce(f64::min)
    }
}

/// Evaluation functional `g ↦ coeff·(D^β g)(point)`; no sign factor.
#[derive(Clone, Debug, PartialEq)]
pub struct Atom {
    pub point: Vec<f64>,
    pub beta: MultiIndex,
    pub coeff: f64,
}

/// `g ↦ ∫ density(y, w)·g(y) dy dw` over `domain`.
#[derive(Clone, Debug)]
pub struct PointDensity {
    pub density: Expr,
    pub hidden: usize,
    pub domain: AxisBox,
}

/// A finite-order compactly supported distribution on one fibre `ℝᵏ`.
#[derive(Clone, Debug)]
pub struct PointDistribution {
    pub fibre_dim: usize,
    pub atoms: Vec<Atom>,
    pub densities: Vec<PointDensity>,
    pub quad_order: usize,
}

impl PointDistribution {
    pub fn zero(fibre_dim: usize) -> PointDistribution {
        PointDistribution {
            fibre_dim,
            atoms: Vec::new(),
            densities: Vec::new(),
            quad_order: quadrature::default_order(),
        }
    }

    pub fn delta(point: Vec<f64>) -> PointDistribution {
        let k = point.len();
        let mut v = PointDistribution::zero(k);
        v.atoms.push(Atom {
            point,
            beta: MultiIndex::zeros(k),
            coeff: 1.0,
        });
        v
    }

    pub fn with_quad_order(mut self, q: usize) -> PointDistribution {
        self.quad_order = q;
        self
    }

    /// `v(g)` for a function `g` of the fibre variables.
    pub fn pair(&self, g: &Expr) -> Result<f64> {
        let k = self.fibre_dim;
        g.check_layout(Layout::fibre_only(k))?;
        let mut acc = 0.0;
        for a in &self.atoms {
            if a.coeff != 0.0 {
                acc += a.coeff * g.derive_y(&a.beta).eval(&[], &a.point);
            }
        }
        for d in &self.densities {
            let weighted = Expr::mul(&d.density, g);
            acc += integrate_on_support(&weighted, &[], &[], &d.domain, self.quad_order, |y| {
                let w = d.density.eval(&[], y);
                if w == 0.0 {
                    0.0
                } else {
                    w * g.eval(&[], &y[..k])
                }
            });
        }
        Ok(acc)
    }

    /// `|v|(|g|)`: the pairing with every contribution made non-negative.
    /// A magnitude for `v(g)` that cancellation cannot shrink.
    pub fn pair_abs(&self, g: &Expr) -> Result<f64> {
        let k = self.fibre_dim;
        g.check_layout(Layout::fibre_only(k))?;
        let mut acc = 0.0;
        for a in &self.atoms {
            if a.coeff != 0.0 {
                acc += (a.coeff * g.derive_y(&a.beta).eval(&[], &a.point)).abs();
            }
        }
        for d in &self.densities {
            let weighted = Expr::mul(&d.density, g);
            acc += integrate_on_support(&weighted, &[], &[], &d.domain, self.quad_order, |y| {
                let w = d.density.eval(&[], y);
                if w == 0.0 {
                    0.0
                } else {
                    (w * g.eval(&[], &y[..k])).abs()
                }
            });
        }
        Ok(acc)
    }

    pub fn scale(&self, c: f64) -> PointDistribution {
        let factor = Expr::float(c);
        PointDistribution {
            fibre_dim: self.fibre_dim,
            atoms: self
                .atoms
                .iter()
                .map(|a| Atom {
                    coeff: c * a.coeff,
                    ..a.clone()
                })
                .collect(),
            densities: self
                .densities
                .iter()
                .map(|d| PointDensity {
                    density: Expr::mul(&factor, &d.density),
                    ..d.clone()
                })
                .collect(),
            quad_order: self.quad_order,
        }
    }

    /// Zero as a functional: coincident atoms cancel exactly and every
    /// density vanishes on a grid of `17` points per axis.
    pub fn is_zero(&self) -> bool {
        let mut merged: Vec<(&[f64], &MultiIndex, f64)> = Vec::new();
        for a in &self.atoms {
            match merged
                .iter_mut()
                .find(|(p, b, _)| *p == a.point.as_slice() && *b == &a.beta)
            {
                Some(slot) => slot.2 += a.coeff,
                None => merged.push((&a.point, &a.beta, a.coeff)),
            }
        }
        if merged.iter().any(|m| m.2 != 0.0) {
            return false;
        }
        self.densities.iter().all(|d| {
            d.density.is_zero()
                || crate::topology::lattice_points(&d.domain, 17)
                    .iter()
                    .all(|y| d.density.eval(&[], y) == 0.0)
        })
    }
}

/// Substitutes fibre variables `y_j ↦ e_j` while keeping hidden ones.
pub(crate) fn substitute_fibre(e: &Expr, map: &[Expr]) -> Expr {
    e.substitute_with(&|v| match v {
        Var::Y(j) => map.get(j).cloned(),
        Var::X(_) => None,
    })
}
