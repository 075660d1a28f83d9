//! Family derivatives, module actions and the duality pairing.

use super::{DiracTerm, DensityTerm, DistributionError, Result, Term, TransversalDistribution};
use crate::bundle::Section;
use crate::expr::{Expr, MultiIndex, Var};

impl TransversalDistribution {
    /// `D^α` of the family `x ↦ T_x`.
    pub fn family_derivative(&self, alpha: &MultiIndex) -> Result<TransversalDistribution> {
        let l = self.bundle.base_dim;
        if alpha.len() != l {
            return Err(DistributionError::DimensionMismatch {
                expected: l,
                got: alpha.len(),
            });
        }
        let mut out = self.clone();
        for (i, &n) in alpha.iter().enumerate() {
            for _ in 0..n {
                out = out.partial(i);
            }
        }
        Ok(out)
    }

    fn partial(&self, i: usize) -> TransversalDistribution {
        let k = self.bundle.fibre_dim;
        let mut terms = Vec::new();
        for t in &self.terms {
            match t {
                Term::Dirac(d) => {
                    let dw = d.weight.derive(Var::X(i));
                    if !dw.is_zero() {
                        terms.push(
                            DiracTerm::derived(d.section.clone(), dw, d.beta.clone(), &d.support)
                                .into(),
                        );
                    }
                    for j in 0..k {
                        let ds = d.section.components()[j].derive(Var::X(i));
                        let w = Expr::mul(&d.weight, &ds);
                        if !w.is_zero() {
                            terms.push(
                                DiracTerm::derived(
                                    d.section.clone(),
                                    w,
                                    d.beta.with_incremented(j),
                                    &d.support,
                                )
                                .into(),
                            );
                        }
                    }
                }
                Term::Density(d) => {
                    let dphi = d.phi.derive(Var::X(i));
                    if !dphi.is_zero() {
                        terms.push(
                            DensityTerm::derived(self.bundle, dphi, d.hidden, &d.support).into(),
                        );
                    }
                }
            }
        }
        TransversalDistribution::from_parts(self.bundle, terms)
    }

    /// `f·T` for a base function `f`.
    pub fn module_action_base(&self, f: &Expr) -> Result<TransversalDistribution> {
        f.check_layout(self.bundle.base_layout())?;
        let terms = self
            .terms
            .iter()
            .filter_map(|t| match t {
                Term::Dirac(d) => {
                    let w = Expr::mul(f, &d.weight);
                    (!w.is_zero()).then(|| {
                        DiracTerm::derived(d.section.clone(), w, d.beta.clone(), &d.support).into()
                    })
                }
                Term::Density(d) => {
                    let phi = Expr::mul(f, &d.phi);
                    (!phi.is_zero())
                        .then(|| DensityTerm::derived(self.bundle, phi, d.hidden, &d.support).into())
                }
            })
            .collect();
        Ok(TransversalDistribution::from_parts(self.bundle, terms))
    }

    /// `F·T` for a function `F` on the total space, so that
    /// `(F·T)(G) = T(F·G)`.
    pub fn module_action_total(&self, f: &Expr) -> Result<TransversalDistribution> {
        f.check_layout(self.bundle.layout())?;
        let mut terms = Vec::new();
        for t in &self.terms {
            match t {
                Term::Dirac(d) => {
                    for gamma in d.beta.below() {
                        let rest = d.beta.checked_sub(&gamma).expect("γ ≤ β");
                        let c = d.beta.binomial(&gamma);
                        let pulled = d.section.pull_back(&f.derive_y(&rest));
                        let w = Expr::mul(&Expr::int(c as i64), &Expr::mul(&d.weight, &pulled));
                        if !w.is_zero() {
                            terms.push(
                                DiracTerm::derived(d.section.clone(), w, gamma, &d.support).into(),
                            );
                        }
                    }
                }
                Term::Density(d) => {
                    let phi = Expr::mul(f, &d.phi);
                    if !phi.is_zero() {
                        terms.push(DensityTerm::derived(self.bundle, phi, d.hidden, &d.support).into());
                    }
                }
            }
        }
        Ok(TransversalDistribution::from_parts(self.bundle, terms))
    }

    /// `F̂(T) = T(F)`.
    pub fn hat_pair(f: &Expr, t: &TransversalDistribution) -> Result<super::BaseFunction> {
        t.evaluate(f)
    }
}

/// Whether no δ-section probe through the grid points tells `F` and `G`
/// apart (agreement within `1e-12` everywhere on the grid).
///
/// Each probe is the constant section through the fibre point `p`,
/// weighted by a bump equal to one at the base point `x`.
pub fn separating_probe(
    f: &Expr,
    g: &Expr,
    grid: &[(Vec<f64>, Vec<f64>)],
) -> Result<bool> {
    for (x, p) in grid {
        let l = x.len();
        let bundle = crate::bundle::TrivialBundle::new(l, p.len())?;
        let section = Section::new(bundle, p.iter().map(|&v| Expr::float(v)).collect(), None)?;
        let e = Expr::constant(crate::expr::Constant::E);
        let weight = (0..l).fold(Expr::one(), |acc, i| {
            let shifted = Expr::sub(&Expr::x(i), &Expr::float(x[i]));
            Expr::mul(&acc, &Expr::mul(&e, &Expr::bump(&shifted)))
        });
        let probe = TransversalDistribution::dirac(section, weight, MultiIndex::zeros(p.len()))?;
        let a = probe.evaluate(f)?.value(x);
        let b = probe.evaluate(g)?.value(x);
        if (a - b).abs() > 1e-12 {
            return Ok(false);
        }
    }
    Ok(true)
}
