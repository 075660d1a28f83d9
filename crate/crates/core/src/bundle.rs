//! The trivial submersion `π: ℝˡ × ℝᵏ → ℝˡ`, its sections, and the
//! restriction/extension pair between functions on the total space and on
//! a single fibre.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expr::{AxisBox, Expr, ExprError, Interval, Layout, Var};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BundleError {
    #[error("bundle dimensions must be positive (got base {base}, fibre {fibre})")]
    Degenerate { base: usize, fibre: usize },
    #[error("section has {got} components, fibre dimension is {expected}")]
    ComponentCount { expected: usize, got: usize },
    #[error("base point has {got} coordinates, expected {expected}")]
    BasePoint { expected: usize, got: usize },
    #[error(transparent)]
    Expr(#[from] ExprError),
}

/// Projection `ℝˡ × ℝᵏ → ℝˡ` with base variables `x0..` and fibre
/// variables `y0..`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TrivialBundle {
    pub base_dim: usize,
    pub fibre_dim: usize,
}

impl TrivialBundle {
    pub fn new(base_dim: usize, fibre_dim: usize) -> Result<Self, BundleError> {
        if base_dim == 0 || fibre_dim == 0 {
            return Err(BundleError::Degenerate {
                base: base_dim,
                fibre: fibre_dim,
            });
        }
        Ok(TrivialBundle {
            base_dim,
            fibre_dim,
        })
    }

    pub fn layout(&self) -> Layout {
        Layout::new(self.base_dim, self.fibre_dim)
    }

    pub fn base_layout(&self) -> Layout {
        Layout::base_only(self.base_dim)
    }

    pub fn fibre_layout(&self) -> Layout {
        Layout::fibre_only(self.fibre_dim)
    }

    fn check_point(&self, x: &[f64]) -> Result<(), BundleError> {
        if x.len() != self.base_dim {
            return Err(BundleError::BasePoint {
                expected: self.base_dim,
                got: x.len(),
            });
        }
        Ok(())
    }

    /// `F ↦ F|_{P_x}`: fixes the base coordinates at `x`.
    pub fn restrict_function(&self, f: &Expr, x: &[f64]) -> Result<Expr, BundleError> {
        self.check_point(x)?;
        f.check_layout(self.layout())?;
        Ok(f.fix_base(x))
    }

    /// Constant-in-base extension of a fibre function to the total space.
    pub fn extend_function(&self, g: &Expr) -> Result<Expr, BundleError> {
        g.check_layout(self.fibre_layout())?;
        Ok(g.clone())
    }
}

/// A section `σ: U → ℝˡ × ℝᵏ`, `x ↦ (x, σ(x))`, given by its fibre
/// components.
#[derive(Clone, Debug)]
pub struct Section {
    bundle: TrivialBundle,
    components: Vec<Expr>,
    domain: Option<AxisBox>,
}

impl Section {
    pub fn new(
        bundle: TrivialBundle,
        components: Vec<Expr>,
        domain: Option<AxisBox>,
    ) -> Result<Section, BundleError> {
        if components.len() != bundle.fibre_dim {
            return Err(BundleError::ComponentCount {
                expected: bundle.fibre_dim,
                got: components.len(),
            });
        }
        for c in &components {
            c.check_layout(bundle.base_layout())?;
        }
        Ok(Section {
            bundle,
            components,
            domain,
        })
    }

    /// The identity section `σ(x) = x` of the pair bundle.
    pub fn diagonal(bundle: TrivialBundle) -> Result<Section, BundleError> {
        let comps = (0..bundle.fibre_dim).map(Expr::x).collect();
        Section::new(bundle, comps, None)
    }

    pub fn bundle(&self) -> TrivialBundle {
        self.bundle
    }

    pub fn components(&self) -> &[Expr] {
        &self.components
    }

    pub fn domain(&self) -> Option<&AxisBox> {
        self.domain.as_ref()
    }

    pub fn eval(&self, x: &[f64]) -> Vec<f64> {
        self.components.iter().map(|c| c.eval(x, &[])).collect()
    }

    /// `F(x, σ(x))`: substitutes the section into the fibre variables.
    pub fn pull_back(&self, f: &Expr) -> Expr {
        f.substitute_with(&|v| match v {
            Var::Y(j) => self.components.get(j).cloned(),
            Var::X(_) => None,
        })
    }

    /// `σ ∘ φ` for a base map `φ` given by its components.
    pub fn precompose(&self, map: &[Expr]) -> Section {
        let comps = self
            .components
            .iter()
            .map(|c| {
                c.substitute_with(&|v| match v {
                    Var::X(i) => map.get(i).cloned(),
                    Var::Y(_) => None,
                })
            })
            .collect();
        Section {
            bundle: self.bundle,
            components: comps,
            domain: None,
        }
    }
}

/// Box in `ℝˡ⁺ᵏ` containing the graph of `σ` over `weight_support`.
pub fn section_graph_support(s: &Section, weight_support: &AxisBox) -> AxisBox {
    let l = s.bundle.base_dim;
    let k = s.bundle.fibre_dim;
    let Some(sides) = weight_support.sides() else {
        return AxisBox::empty(l + k);
    };
    let fibre: Vec<Interval> = s
        .components
        .iter()
        .map(|c| c.enclose(sides, &[], Interval::whole()))
        .collect();
    weight_support.product(&AxisBox::new(fibre))
}
