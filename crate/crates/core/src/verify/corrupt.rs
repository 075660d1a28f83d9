//! Deliberately broken calculi, one per suite. Each suite must fail when
//! run through its fixture.

use super::{Calculus, Result, Suite};
use crate::distribution::{
    BaseFunction, DiracTerm, Localization, PointDistribution, Term, TransversalDistribution,
};
use crate::expr::{AxisBox, Expr, Interval, MultiIndex};
use crate::operators::KernelOperator;

/// Restriction with every coefficient negated.
pub struct NegatedRestriction;

impl Calculus for NegatedRestriction {
    fn name(&self) -> &str {
        "negated restriction"
    }

    fn restrict(&self, t: &TransversalDistribution, x: &[f64]) -> Result<PointDistribution> {
        Ok(t.restrict(x)?.scale(-1.0))
    }
}

/// Family derivative that differentiates Dirac weights but forgets the
/// chain-rule terms coming from the section.
pub struct DroppedChainRule;

impl Calculus for DroppedChainRule {
    fn name(&self) -> &str {
        "dropped chain rule"
    }

    fn family_derivative(
        &self,
        t: &TransversalDistribution,
        alpha: &MultiIndex,
    ) -> Result<TransversalDistribution> {
        let full = t.family_derivative(alpha)?;
        let mut terms = Vec::new();
        for term in t.terms() {
            match term {
                Term::Dirac(d) => {
                    let w = d.weight().derive_x(alpha);
                    if !w.is_zero() {
                        let dt = DiracTerm::new(d.section().clone(), w, d.beta().clone())
                            .map_err(super::VerifyError::from)?;
                        terms.push(dt.into());
                    }
                }
                Term::Density(_) => {}
            }
        }
        for term in full.terms() {
            if let Term::Density(_) = term {
                terms.push(term.clone());
            }
        }
        Ok(TransversalDistribution::new(t.bundle(), terms)?)
    }
}

/// Base derivatives off by one percent.
pub struct ScaledDerivative;

impl Calculus for ScaledDerivative {
    fn name(&self) -> &str {
        "scaled derivative"
    }

    fn base_derivative(&self, u: &BaseFunction, alpha: &MultiIndex) -> BaseFunction {
        u.derivative(alpha).scale(1.01)
    }
}

/// `F̂(T) + 10⁻³`.
pub struct ShiftedPairing;

impl Calculus for ShiftedPairing {
    fn name(&self) -> &str {
        "shifted pairing"
    }

    fn hat_pair(&self, f: &Expr, t: &TransversalDistribution) -> Result<BaseFunction> {
        let l = t.bundle().base_dim;
        let shift = BaseFunction::symbolic(l, Expr::float(1e-3));
        Ok(TransversalDistribution::hat_pair(f, t)?.add(&shift))
    }
}

/// Total support shrunk to half its width about the centre.
pub struct ShrunkSupport;

impl Calculus for ShrunkSupport {
    fn name(&self) -> &str {
        "shrunk support"
    }

    fn total_support(&self, t: &TransversalDistribution) -> AxisBox {
        let b = t.total_support();
        match b.sides() {
            Some(sides) => AxisBox::new(
                sides
                    .iter()
                    .map(|s| {
                        let c = 0.5 * (s.lo + s.hi);
                        let r = 0.25 * (s.hi - s.lo);
                        Interval::new(c - r, c + r)
                    })
                    .collect(),
            ),
            None => b,
        }
    }
}

/// Localization factors doubled.
pub struct DoubledFactors;

impl Calculus for DoubledFactors {
    fn name(&self) -> &str {
        "doubled factors"
    }

    fn localize(&self, t: &TransversalDistribution, a: &[f64]) -> Result<Localization> {
        Ok(t
            .localize_decompose(a)?
            .into_iter()
            .map(|(f, ti)| (Expr::mul(&Expr::int(2), &f), ti))
            .collect())
    }
}

/// `compose(K₁, K₂)` computing `K₂ ∘ K₁`.
pub struct SwappedComposition;

impl Calculus for SwappedComposition {
    fn name(&self) -> &str {
        "swapped composition"
    }

    fn compose(&self, k1: &KernelOperator, k2: &KernelOperator) -> Result<KernelOperator> {
        Ok(k2.compose(k1)?)
    }
}

/// The fixture that `suite` must reject.
pub fn for_suite(suite: Suite) -> Box<dyn Calculus> {
    match suite {
        Suite::Restriction => Box::new(NegatedRestriction),
        Suite::Leibniz => Box::new(DroppedChainRule),
        Suite::Smoothness => Box::new(ScaledDerivative),
        Suite::Duality => Box::new(ShiftedPairing),
        Suite::Support => Box::new(ShrunkSupport),
        Suite::Localization => Box::new(DoubledFactors),
        Suite::Operators => Box::new(SwappedComposition),
    }
}
