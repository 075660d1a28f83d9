//! Bounding boxes for `supp_P(T)` and `supp(T)`.

use super::{Term, TransversalDistribution};
use crate::bundle::section_graph_support;
use crate::expr::AxisBox;

impl TransversalDistribution {
    /// Box in `ℝˡ⁺ᵏ` containing the total-space support.
    pub fn total_support(&self) -> AxisBox {
        let l = self.bundle.base_dim;
        let k = self.bundle.fibre_dim;
        self.terms
            .iter()
            .map(|t| match t {
                Term::Dirac(d) => section_graph_support(&d.section, &d.support),
                Term::Density(d) => d.support.project(0..l + k),
            })
            .fold(AxisBox::empty(l + k), |acc, b| acc.hull(&b))
    }

    /// Box in `ℝˡ` containing the base support, built from the term weights
    /// and density bases without going through the total support.
    pub fn base_support(&self) -> AxisBox {
        let l = self.bundle.base_dim;
        self.terms
            .iter()
            .map(|t| match t {
                Term::Dirac(d) => d.support.clone(),
                Term::Density(d) => d.support.project(0..l),
            })
            .fold(AxisBox::empty(l), |acc, b| acc.hull(&b))
    }
}
