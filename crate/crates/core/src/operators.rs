//! Schwartz kernels on the pair groupoid: a transversal distribution on
//! `ℝˡ × ℝˡ → ℝˡ` acts on functions of the second factor, and kernels
//! compose like the operators they represent.
//!
//! `compose(K₁, K₂)` is `K₁` after `K₂`. Only derivative-free Dirac terms
//! and densities compose; derivative-carrying Dirac terms are still
//! applicable.

use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

use crate::bundle::{section_graph_support, Section, TrivialBundle};
use crate::distribution::{
    density_layout, integrate_on_support, substitute_fibre, BaseFunction, DensityTerm, DiracTerm, DistributionError, Term,
    TransversalDistribution,
};
use crate::expr::{AxisBox, Expr, MultiIndex, Var};
use crate::quadrature;

/// Hidden fibre blocks allowed in a composite density.
pub const MAX_HIDDEN: usize = 2;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OperatorError {
    #[error("kernel needs equal base and fibre dimensions, got {base} and {fibre}")]
    NotPairBundle { base: usize, fibre: usize },
    #[error("Dirac terms with fibre derivatives cannot be composed")]
    DerivativeDirac,
    #[error("section `{0}` is not affine, so a density cannot be pushed through it")]
    NonAffineSection(String),
    #[error("section is affine but not invertible")]
    SingularSection,
    #[error("composite density would need {0} hidden blocks (at most {MAX_HIDDEN})")]
    NestingTooDeep(usize),
    #[error("kernels live on different bundles")]
    BundleMismatch,
    #[error(transparent)]
    Distribution(#[from] DistributionError),
}

type Result<T> = std::result::Result<T, OperatorError>;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TermClass {
    PlainDirac,
    DerivativeDirac,
    Density { hidden: usize },
}

#[derive(Clone, Debug)]
pub struct KernelOperator {
    dist: TransversalDistribution,
    classes: Vec<TermClass>,
}

impl KernelOperator {
    pub fn new(dist: TransversalDistribution) -> Result<KernelOperator> {
        let b = dist.bundle();
        if b.base_dim != b.fibre_dim {
            return Err(OperatorError::NotPairBundle {
                base: b.base_dim,
                fibre: b.fibre_dim,
            });
        }
        let classes = dist
            .terms()
            .iter()
            .map(|t| match t {
                Term::Dirac(d) if d.beta().is_zero() => TermClass::PlainDirac,
                Term::Dirac(_) => TermClass::DerivativeDirac,
                Term::Density(d) => TermClass::Density { hidden: d.hidden() },
            })
            .collect();
        Ok(KernelOperator { dist, classes })
    }

    pub fn distribution(&self) -> &TransversalDistribution {
        &self.dist
    }

    pub fn classes(&self) -> &[TermClass] {
        &self.classes
    }

    pub fn bundle(&self) -> TrivialBundle {
        self.dist.bundle()
    }

    /// `(Kg)(x) = K(g ∘ pr₂)(x)` for `g` in the fibre variables.
    pub fn apply(&self, g: &Expr) -> Result<BaseFunction> {
        g.check_layout(self.bundle().fibre_layout())
            .map_err(DistributionError::from)?;
        Ok(self.dist.evaluate(g)?)
    }

    /// `(Kh)(x)` for a base function `h`, computed pointwise: Dirac terms
    /// differentiate `h`, density terms integrate it by quadrature.
    pub fn apply_numeric(&self, h: &BaseFunction, x: &[f64]) -> f64 {
        let l = self.bundle().base_dim;
        let q = quadrature::default_order();
        let mut acc = 0.0;
        for t in self.dist.terms() {
            match t {
                Term::Dirac(d) => {
                    let w = d.weight().eval(x, &[]);
                    if w != 0.0 {
                        let hd = h.derivative(d.beta());
                        acc += w * hd.value(&d.section().eval(x));
                    }
                }
                Term::Density(d) => {
                    let full = d.support().project(l..d.support().dim());
                    let reach = h
                        .support_box()
                        .product(&AxisBox::whole(full.dim() - l));
                    let domain = full.intersect(&reach);
                    acc += integrate_on_support(d.phi(), x, &[], &domain, q, |y| {
                        let p = d.phi().eval(x, y);
                        if p == 0.0 {
                            0.0
                        } else {
                            p * h.value(&y[..l])
                        }
                    });
                }
            }
        }
        acc
    }

    /// Kernel value `K(x, z)` of the density part, hidden blocks
    /// integrated out.
    pub fn density_value(&self, x: &[f64], z: &[f64]) -> f64 {
        let l = self.bundle().base_dim;
        let q = quadrature::default_order();
        let mut acc = 0.0;
        for t in self.dist.terms() {
            if let Term::Density(d) = t {
                if d.hidden() == 0 {
                    acc += d.phi().eval(x, z);
                } else {
                    let hidden = d.support().project(2 * l..d.support().dim());
                    acc += integrate_on_support(d.phi(), x, z, &hidden, q, |w| {
                        let mut y = z.to_vec();
                        y.extend_from_slice(w);
                        d.phi().eval(x, &y)
                    });
                }
            }
        }
        acc
    }

    /// `self ∘ other` as operators.
    pub fn compose(&self, other: &KernelOperator) -> Result<KernelOperator> {
        if self.bundle() != other.bundle() {
            return Err(OperatorError::BundleMismatch);
        }
        let classes = self.classes.iter().chain(&other.classes);
        if classes.clone().any(|c| *c == TermClass::DerivativeDirac) {
            return Err(OperatorError::DerivativeDirac);
        }
        let bundle = self.bundle();
        let mut terms = Vec::new();
        for t1 in self.dist.terms() {
            for t2 in other.dist.terms() {
                if let Some(t) = compose_terms(bundle, t1, t2)? {
                    terms.push(t);
                }
            }
        }
        KernelOperator::new(TransversalDistribution::new(bundle, terms)?)
    }
}

fn base_substitution(e: &Expr, map: &[Expr]) -> Expr {
    e.substitute_with(&|v| match v {
        Var::X(i) => map.get(i).cloned(),
        Var::Y(_) => None,
    })
}

fn compose_terms(bundle: TrivialBundle, t1: &Term, t2: &Term) -> Result<Option<Term>> {
    let l = bundle.base_dim;
    Ok(match (t1, t2) {
        (Term::Dirac(d1), Term::Dirac(d2)) => {
            let sigma1 = d1.section().components();
            let section = d2.section().precompose(sigma1);
            let weight = Expr::mul(d1.weight(), &base_substitution(d2.weight(), sigma1));
            (!weight.is_zero()).then(|| {
                DiracTerm::derived(section, weight, MultiIndex::zeros(l), d1.support()).into()
            })
        }
        (Term::Dirac(d1), Term::Density(p2)) => {
            let sigma1 = d1.section().components();
            let phi = Expr::mul(d1.weight(), &base_substitution(p2.phi(), sigma1));
            let fibre = p2.support().project(l..p2.support().dim());
            let bound = d1.support().product(&fibre);
            (!phi.is_zero()).then(|| DensityTerm::with_support(phi, p2.hidden(), bound).into())
        }
        (Term::Density(p1), Term::Dirac(d2)) => Some(push_through(bundle, p1, d2)?.into()),
        (Term::Density(p1), Term::Density(p2)) => {
            let hidden = p1.hidden() + p2.hidden() + 1;
            if hidden > MAX_HIDDEN {
                return Err(OperatorError::NestingTooDeep(hidden));
            }
            let k = l;
            let h1 = p1.hidden();
            let phi1 = p1.phi().rename(&|v| match v {
                Var::X(i) => Var::X(i),
                Var::Y(j) => Var::Y(j + k),
            });
            let phi2 = p2.phi().rename(&|v| match v {
                Var::X(i) => Var::Y(k + i),
                Var::Y(j) if j < k => Var::Y(j),
                Var::Y(j) => Var::Y(j + k + k * h1),
            });
            let s1 = p1.support();
            let s2 = p2.support();
            let bound = s1
                .project(0..l)
                .product(&s2.project(l..l + k))
                .product(&s1.project(l..l + k))
                .product(&s1.project(l + k..s1.dim()))
                .product(&s2.project(l + k..s2.dim()));
            debug_assert_eq!(bound.dim(), density_layout(bundle, hidden).dim());
            Some(DensityTerm::with_support(Expr::mul(&phi1, &phi2), hidden, bound).into())
        }
    })
}

/// `∫ φ(x, y, w) f(y) g(σ(y)) dy dw` rewritten as a density in `z = σ(y)`
/// for affine invertible `σ(y) = Ay + b`.
fn push_through(bundle: TrivialBundle, p: &DensityTerm, d: &DiracTerm) -> Result<DensityTerm> {
    let k = bundle.fibre_dim;
    let mut a = vec![vec![BigRational::zero(); k]; k];
    let mut b = vec![BigRational::zero(); k];
    for (i, c) in d.section().components().iter().enumerate() {
        let (coeffs, offset) = c
            .as_affine()
            .ok_or_else(|| OperatorError::NonAffineSection(c.to_string()))?;
        for (v, q) in coeffs {
            match v {
                Var::X(j) => a[i][j] = q,
                Var::Y(_) => return Err(OperatorError::NonAffineSection(c.to_string())),
            }
        }
        b[i] = offset;
    }
    let (inv, det) = invert(a).ok_or(OperatorError::SingularSection)?;
    // y = A⁻¹(z − b), written in the fibre variables z
    let preimage: Vec<Expr> = (0..k)
        .map(|i| {
            let terms: Vec<Expr> = (0..k)
                .map(|j| {
                    let shifted = Expr::sub(&Expr::y(j), &Expr::rational(b[j].clone()));
                    Expr::mul(&Expr::rational(inv[i][j].clone()), &shifted)
                })
                .collect();
            Expr::sum(&terms)
        })
        .collect();
    let phi = substitute_fibre(p.phi(), &preimage);
    let weight = base_substitution(d.weight(), &preimage);
    let jacobian = Expr::rational(det.abs().recip());
    let psi = Expr::mul(&jacobian, &Expr::mul(&phi, &weight));

    let s = p.support();
    let l = bundle.base_dim;
    let ybox = s.project(l..l + k);
    let image = section_graph_support(d.section(), &ybox).project(k..2 * k);
    let bound = s
        .project(0..l)
        .product(&image)
        .product(&s.project(l + k..s.dim()));
    Ok(DensityTerm::with_support(psi, p.hidden(), bound))
}

/// Exact inverse and determinant by Gauss–Jordan elimination.
fn invert(mut a: Vec<Vec<BigRational>>) -> Option<(Vec<Vec<BigRational>>, BigRational)> {
    let n = a.len();
    let mut inv: Vec<Vec<BigRational>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| if i == j { BigRational::one() } else { BigRational::zero() })
                .collect()
        })
        .collect();
    let mut det = BigRational::one();
    for col in 0..n {
        let pivot = (col..n).find(|&r| !a[r][col].is_zero())?;
        if pivot != col {
            a.swap(pivot, col);
            inv.swap(pivot, col);
            det = -det;
        }
        let p = a[col][col].clone();
        det *= &p;
        for j in 0..n {
            a[col][j] /= &p;
            inv[col][j] /= &p;
        }
        for r in 0..n {
            if r != col && !a[r][col].is_zero() {
                let f = a[r][col].clone();
                for j in 0..n {
                    let t = &f * &a[col][j];
                    a[r][j] -= t;
                    let t = &f * &inv[col][j];
                    inv[r][j] -= t;
                }
            }
        }
    }
    Some((inv, det))
}

/// Graph kernel `⟦graph(σ), f⟧` of the pullback `g ↦ f·(g∘σ)`.
pub fn graph_kernel(section: Section, cutoff: Expr) -> Result<KernelOperator> {
    let l = section.bundle().base_dim;
    KernelOperator::new(TransversalDistribution::dirac(
        section,
        cutoff,
        MultiIndex::zeros(l),
    )?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{parse, Layout};

    fn line() -> TrivialBundle {
        TrivialBundle::new(1, 1).unwrap()
    }

    fn base(s: &str) -> Expr {
        parse(s, line().base_layout()).unwrap()
    }

    fn total(s: &str) -> Expr {
        parse(s, line().layout()).unwrap()
    }

    fn fibre(s: &str) -> Expr {
        parse(s, line().fibre_layout()).unwrap()
    }

    /// Within `1e-14` of one on the probe region.
    const CUTOFF: &str = "bump(x0/10000000)*exp(1)";

    fn translation(shift: &str, cutoff: &str) -> KernelOperator {
        let s = Section::new(line(), vec![base(&format!("x0 + {shift}"))], None).unwrap();
        graph_kernel(s, base(cutoff)).unwrap()
    }

    fn density_kernel(phi: &str) -> KernelOperator {
        KernelOperator::new(TransversalDistribution::density(line(), total(phi)).unwrap()).unwrap()
    }

    fn probes() -> Vec<Expr> {
        ["1", "y0^2", "sin(y0)", "bump(y0/2)", "exp(-y0^2)"]
            .iter()
            .map(|s| fibre(s))
            .collect()
    }

    fn grid() -> Vec<[f64; 1]> {
        (0..9).map(|i| [-1.0 + 0.25 * i as f64]).collect()
    }

    #[test]
    fn apply_examples() {
        // cutoff equal to one near 0
        let k = translation("1", "bump(x0/3)*exp(1)");
        let v = k.apply(&fibre("y0^2")).unwrap().value(&[0.0]);
        assert!((v - 1.0).abs() < 1e-15);

        let s = Section::diagonal(line()).unwrap();
        let w = base("bump(x0/3)*exp(1)*exp(x0 - 1)");
        let d = KernelOperator::new(
            TransversalDistribution::dirac(s, w.clone(), MultiIndex::new(vec![1])).unwrap(),
        )
        .unwrap();
        assert_eq!(d.classes(), &[TermClass::DerivativeDirac]);
        let f1 = w.eval(&[1.0], &[]);
        let v = d.apply(&fibre("y0^2")).unwrap().value(&[1.0]);
        assert!((v - 2.0 * f1).abs() < 1e-15);

        let kd = density_kernel("bump(x0)*bump(y0 - x0/2)");
        let v = kd.apply(&Expr::one()).unwrap().with_quad_order(96);
        for x in [-0.5f64, 0.0, 0.3] {
            // ∫ bump(x) bump(y − x/2) dy = bump(x)·∫bump
            let expected = (-1.0 / (1.0 - x * x)).exp() * crate::quadrature::BUMP_INTEGRAL;
            assert!((v.value(&[x]) - expected).abs() < 1e-12);
        }
        assert!(d.apply(&total("x0")).is_err());
    }

    #[test]
    fn non_pair_bundles_are_rejected() {
        let b = TrivialBundle::new(1, 2).unwrap();
        let t = TransversalDistribution::zero(b);
        assert!(matches!(
            KernelOperator::new(t),
            Err(OperatorError::NotPairBundle { .. })
        ));
    }

    fn assert_operator_law(k1: &KernelOperator, k2: &KernelOperator, tol: f64) {
        let c = k1.compose(k2).unwrap();
        for g in probes() {
            let lhs = c.apply(&g).unwrap();
            let inner = k2.apply(&g).unwrap();
            for x in grid() {
                let a = lhs.value(&x);
                let b = k1.apply_numeric(&inner, &x);
                assert!((a - b).abs() < tol, "x={x:?} g={g}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn translations_compose_contravariantly() {
        let k1 = translation("1/2", CUTOFF);
        let k2 = translation("-3/4", CUTOFF);
        assert_operator_law(&k1, &k2, 1e-12);
        let c = k1.compose(&k2).unwrap();
        match &c.distribution().terms()[0] {
            Term::Dirac(d) => {
                for x in [-1.0, 0.0, 0.7] {
                    assert!((d.section().eval(&[x])[0] - (x - 0.25)).abs() < 1e-15);
                }
            }
            Term::Density(_) => panic!("expected a graph"),
        }
        // pullback order: K_Φ ∘ K_Ψ = K_{Ψ∘Φ}
        let phi = Section::new(line(), vec![base("2*x0")], None).unwrap();
        let psi = Section::new(line(), vec![base("x0 + 1")], None).unwrap();
        let kphi = graph_kernel(phi, base(CUTOFF)).unwrap();
        let kpsi = graph_kernel(psi, base(CUTOFF)).unwrap();
        let direct = graph_kernel(
            Section::new(line(), vec![base("2*x0 + 1")], None).unwrap(),
            base(CUTOFF),
        )
        .unwrap();
        let c = kphi.compose(&kpsi).unwrap();
        for g in probes() {
            let a = c.apply(&g).unwrap();
            let b = direct.apply(&g).unwrap();
            for x in grid() {
                assert!((a.value(&x) - b.value(&x)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn identity_kernel_is_neutral() {
        let id = graph_kernel(Section::diagonal(line()).unwrap(), base(CUTOFF)).unwrap();
        let k = translation("x0^2 - 1", CUTOFF);
        for c in [id.compose(&k).unwrap(), k.compose(&id).unwrap()] {
            for g in probes() {
                let a = c.apply(&g).unwrap();
                let b = k.apply(&g).unwrap();
                for x in grid() {
                    assert!((a.value(&x) - b.value(&x)).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn mixed_compositions_match_operator_composition() {
        let t = translation("1/2", CUTOFF);
        let s = translation("-2*x0", CUTOFF);
        let d = density_kernel("bump(x0/2)*bump(y0 - x0)");
        let e = density_kernel("cos(x0)*bump(x0/3)*bump(2*y0)");
        assert_operator_law(&t, &d, 1e-8);
        assert_operator_law(&d, &t, 1e-8);
        assert_operator_law(&d, &s, 1e-8);
        assert_operator_law(&d, &e, 1e-8);
        assert_operator_law(&e, &d, 1e-8);
    }

    #[test]
    fn density_composite_value() {
        let d = density_kernel("bump(x0)*bump(y0)");
        let c = d.compose(&d).unwrap();
        assert_eq!(c.classes(), &[TermClass::Density { hidden: 1 }]);
        // ∫ bump(t)² dt
        let bump_sq = 0.133_086_120_844_994_27;
        let e2 = (-2.0f64).exp();
        assert!((c.density_value(&[0.0], &[0.0]) - e2 * bump_sq).abs() < 1e-8);
        let cc = c.compose(&d).unwrap();
        assert_eq!(cc.classes(), &[TermClass::Density { hidden: 2 }]);
        assert!(matches!(cc.compose(&d), Err(OperatorError::NestingTooDeep(3))));
    }

    #[test]
    fn derivative_diracs_and_bent_sections_do_not_compose() {
        let s = Section::diagonal(line()).unwrap();
        let d = KernelOperator::new(
            TransversalDistribution::dirac(s, base(CUTOFF), MultiIndex::new(vec![1])).unwrap(),
        )
        .unwrap();
        assert!(matches!(d.compose(&d), Err(OperatorError::DerivativeDirac)));
        let dens = density_kernel("bump(x0)*bump(y0)");
        let bent = translation("x0^2", CUTOFF);
        assert!(matches!(dens.compose(&bent), Err(OperatorError::NonAffineSection(_))));
        let flat = translation("-x0", CUTOFF);
        assert!(matches!(dens.compose(&flat), Err(OperatorError::SingularSection)));
    }

    #[test]
    fn composition_is_associative_on_graphs() {
        let a = translation("1/3", CUTOFF);
        let b = translation("x0/2", CUTOFF);
        let c = translation("-x0^2/4", CUTOFF);
        let left = a.compose(&b).unwrap().compose(&c).unwrap();
        let right = a.compose(&b.compose(&c).unwrap()).unwrap();
        for g in probes() {
            let l = left.apply(&g).unwrap();
            let r = right.apply(&g).unwrap();
            for x in grid() {
                assert!((l.value(&x) - r.value(&x)).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn two_dimensional_push_through() {
        let b = TrivialBundle::new(2, 2).unwrap();
        let base2 = |s: &str| parse(s, b.base_layout()).unwrap();
        let sec = Section::new(b, vec![base2("x0 + x1/2"), base2("x1 - 1")], None).unwrap();
        let g = graph_kernel(sec, base2("bump(x0/5)*bump(x1/5)*exp(2)")).unwrap();
        let d = KernelOperator::new(
            TransversalDistribution::density(
                b,
                parse("bump(x0)*bump(x1)*bump(y0 - x1)*bump(y1)", Layout::new(2, 2)).unwrap(),
            )
            .unwrap(),
        )
        .unwrap();
        let c = d.compose(&g).unwrap();
        let probe = parse("cos(y0)*exp(y1/3)", b.fibre_layout()).unwrap();
        let inner = g.apply(&probe).unwrap();
        let lhs = c.apply(&probe).unwrap();
        for x in [[0.0, 0.0], [0.3, -0.2], [-0.5, 0.5]] {
            let a = lhs.value(&x);
            let r = d.apply_numeric(&inner, &x);
            assert!((a - r).abs() < 1e-8, "{a} vs {r}");
        }
    }
}
