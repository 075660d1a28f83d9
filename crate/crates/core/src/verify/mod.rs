//! Runnable invariant suites with pass/fail reports and witnesses.
//!
//! Every suite goes through a [`Calculus`], whose default methods are the
//! library operations. The fixtures in [`corrupt`] break one operation each,
//! so the suites can be shown to notice.

pub mod corrupt;
mod suites;

use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use thiserror::Error;

use crate::bundle::{BundleError, TrivialBundle};
use crate::distribution::{
    BaseFunction, DistributionError, Localization, PointDistribution, TransversalDistribution,
};
use crate::expr::{AxisBox, Expr, Interval, MultiIndex};
use crate::operators::{KernelOperator, OperatorError};

pub use suites::{
    check_duality, check_leibniz, check_localization, check_operators, check_restriction_compat,
    check_smoothness, check_support, LeibnizForm,
};

pub const RESTRICTION_TOL: f64 = 1e-10;
pub const LEIBNIZ_TOL: f64 = 1e-8;
pub const SMOOTHNESS_TOL: f64 = 1e-5;
pub const SMOOTHNESS_MIN_ORDER: f64 = 1.9;
pub const DUALITY_TOL: f64 = 1e-12;
pub const SUPPORT_TOL: f64 = 1e-12;
pub const LOCALIZATION_TOL: f64 = 1e-10;
pub const OPERATOR_TOL: f64 = 1e-8;
/// Relative accuracy of values that go through fibre quadrature.
pub const QUADRATURE_NOISE: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum VerifyError {
    #[error(transparent)]
    Distribution(#[from] DistributionError),
    #[error(transparent)]
    Operator(#[from] OperatorError),
    #[error(transparent)]
    Bundle(#[from] BundleError),
    #[error("finite differences need |α| in 1..=2, got {0}")]
    DerivativeOrder(u32),
    #[error("unknown suite `{0}`")]
    UnknownSuite(String),
}

pub type Result<T> = std::result::Result<T, VerifyError>;

#[derive(Clone, Debug, PartialEq)]
pub struct Witness {
    pub point: Vec<f64>,
    pub multi_index: Vec<u32>,
    pub note: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CaseResult {
    pub id: String,
    pub max_error: f64,
    pub tolerance: f64,
    pub pass: bool,
    pub skipped: Option<String>,
    pub witness: Option<Witness>,
}

impl CaseResult {
    /// A measured case; the witness is kept only on failure.
    pub fn measured(id: impl Into<String>, max_error: f64, tolerance: f64, witness: Witness) -> Self {
        let pass = max_error < tolerance;
        CaseResult {
            id: id.into(),
            max_error,
            tolerance,
            pass,
            skipped: None,
            witness: (!pass).then_some(witness),
        }
    }

    pub fn skipped(id: impl Into<String>, tolerance: f64, reason: impl Into<String>) -> Self {
        CaseResult {
            id: id.into(),
            max_error: 0.0,
            tolerance,
            pass: true,
            skipped: Some(reason.into()),
            witness: None,
        }
    }
}

#[derive(Clone, Debug)]
pub struct CheckReport {
    pub suite: String,
    pub cases: Vec<CaseResult>,
    pub duration: Duration,
}

impl CheckReport {
    pub fn new(suite: impl Into<String>) -> CheckReport {
        CheckReport {
            suite: suite.into(),
            cases: Vec::new(),
            duration: Duration::ZERO,
        }
    }

    pub fn passed(&self) -> bool {
        self.cases.iter().all(|c| c.pass)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CaseResult> {
        self.cases.iter().filter(|c| !c.pass)
    }

    pub fn max_error(&self) -> f64 {
        self.cases.iter().map(|c| c.max_error).fold(0.0, f64::max)
    }

    /// Appends `other`'s cases with their ids prefixed.
    pub fn absorb(&mut self, prefix: &str, other: CheckReport) {
        for mut c in other.cases {
            if !prefix.is_empty() {
                c.id = format!("{prefix}/{}", c.id);
            }
            self.cases.push(c);
        }
        self.duration += other.duration;
    }

    pub(crate) fn timed(mut self, start: Instant) -> CheckReport {
        self.duration = start.elapsed();
        self
    }
}

impl fmt::Display for CheckReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "suite {} ({} cases, {:.3}s): {}",
            self.suite,
            self.cases.len(),
            self.duration.as_secs_f64(),
            if self.passed() { "PASS" } else { "FAIL" }
        )?;
        for c in &self.cases {
            let status = match (&c.skipped, c.pass) {
                (Some(_), _) => "skip",
                (None, true) => "ok",
                (None, false) => "FAIL",
            };
            write!(
                f,
                "  {status:<4} {:<40} err {:.3e} tol {:.1e}",
                c.id, c.max_error, c.tolerance
            )?;
            if let Some(reason) = &c.skipped {
                write!(f, "  ({reason})")?;
            }
            if let Some(w) = &c.witness {
                write!(f, "  at {:?} α={:?} {}", w.point, w.multi_index, w.note)?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

/// The operations the suites exercise. Implementors override single
/// methods to model a broken calculus.
pub trait Calculus {
    fn name(&self) -> &str {
        "reference"
    }

    fn evaluate(&self, t: &TransversalDistribution, f: &Expr) -> Result<BaseFunction> {
        Ok(t.evaluate(f)?)
    }

    fn restrict(&self, t: &TransversalDistribution, x: &[f64]) -> Result<PointDistribution> {
        Ok(t.restrict(x)?)
    }

    fn family_derivative(
        &self,
        t: &TransversalDistribution,
        alpha: &MultiIndex,
    ) -> Result<TransversalDistribution> {
        Ok(t.family_derivative(alpha)?)
    }

    fn base_derivative(&self, u: &BaseFunction, alpha: &MultiIndex) -> BaseFunction {
        u.derivative(alpha)
    }

    fn module_action_base(
        &self,
        f: &Expr,
        t: &TransversalDistribution,
    ) -> Result<TransversalDistribution> {
        Ok(t.module_action_base(f)?)
    }

    fn total_support(&self, t: &TransversalDistribution) -> AxisBox {
        t.total_support()
    }

    fn base_support(&self, t: &TransversalDistribution) -> AxisBox {
        t.base_support()
    }

    fn hat_pair(&self, f: &Expr, t: &TransversalDistribution) -> Result<BaseFunction> {
        Ok(TransversalDistribution::hat_pair(f, t)?)
    }

    fn localize(&self, t: &TransversalDistribution, a: &[f64]) -> Result<Localization> {
        Ok(t.localize_decompose(a)?)
    }

    fn compose(&self, k1: &KernelOperator, k2: &KernelOperator) -> Result<KernelOperator> {
        Ok(k1.compose(k2)?)
    }

    fn apply(&self, k: &KernelOperator, g: &Expr) -> Result<BaseFunction> {
        Ok(k.apply(g)?)
    }
}

/// The library itself.
#[derive(Clone, Copy, Debug, Default)]
pub struct Reference;

impl Calculus for Reference {}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Suite {
    Restriction,
    Leibniz,
    Smoothness,
    Duality,
    Support,
    Localization,
    Operators,
}

impl Suite {
    pub const ALL: [Suite; 7] = [
        Suite::Restriction,
        Suite::Leibniz,
        Suite::Smoothness,
        Suite::Duality,
        Suite::Support,
        Suite::Localization,
        Suite::Operators,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Restriction => "restriction",
            Suite::Leibniz => "leibniz",
            Suite::Smoothness => "smoothness",
            Suite::Duality => "duality",
            Suite::Support => "support",
            Suite::Localization => "localization",
            Suite::Operators => "operators",
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = VerifyError;

    fn from_str(s: &str) -> Result<Suite> {
        Suite::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| VerifyError::UnknownSuite(s.to_string()))
    }
}

/// Parses `all` or a comma-separated list of suite names.
pub fn parse_suites(s: &str) -> Result<Vec<Suite>> {
    if s == "all" {
        return Ok(Suite::ALL.to_vec());
    }
    s.split(',').map(|p| p.trim().parse()).collect()
}

#[derive(Clone, Debug)]
pub struct CheckConfig {
    pub tolerance_scale: f64,
    pub alpha_max: u32,
    pub h_sequence: Vec<f64>,
    pub probe_count: usize,
    /// Points closer than this to a bump boundary are skipped by the
    /// smoothness suite.
    pub boundary_margin: f64,
}

impl Default for CheckConfig {
    fn default() -> Self {
        CheckConfig {
            tolerance_scale: 1.0,
            alpha_max: 3,
            h_sequence: vec![1e-2, 5e-3, 2.5e-3, 1.25e-3],
            probe_count: 50,
            boundary_margin: 0.3,
        }
    }
}

impl CheckConfig {
    pub(crate) fn tol(&self, base: f64) -> f64 {
        base * self.tolerance_scale
    }
}

/// Named inputs a suite runs over.
#[derive(Clone, Debug)]
pub struct SuiteInputs {
    pub bundle: TrivialBundle,
    pub distributions: Vec<(String, TransversalDistribution)>,
    pub functions: Vec<(String, Expr)>,
    pub operators: Vec<(String, KernelOperator)>,
    pub grid: Vec<Vec<f64>>,
    pub localization_points: Vec<Vec<f64>>,
}

impl SuiteInputs {
    pub fn new(bundle: TrivialBundle) -> SuiteInputs {
        SuiteInputs {
            bundle,
            distributions: Vec::new(),
            functions: Vec::new(),
            operators: Vec::new(),
            grid: Vec::new(),
            localization_points: Vec::new(),
        }
    }

    /// Grid over the base supports of the distributions, clipped to
    /// `[−4, 4]ˡ`; `[−1, 1]ˡ` when nothing is supported there.
    pub fn default_grid(&self, per_axis: usize) -> Vec<Vec<f64>> {
        let l = self.bundle.base_dim;
        let clip = AxisBox::cube(l, 4.0);
        let hull = self
            .distributions
            .iter()
            .map(|(_, t)| t.base_support())
            .fold(AxisBox::empty(l), |a, b| a.hull(&b))
            .intersect(&clip);
        let region = if hull.has_interior() {
            hull
        } else {
            AxisBox::cube(l, 1.0)
        };
        uniform_grid(&region, per_axis)
    }
}

/// `n` equispaced points per axis, endpoints included.
pub fn uniform_grid(region: &AxisBox, n: usize) -> Vec<Vec<f64>> {
    let Some(sides) = region.sides() else {
        return Vec::new();
    };
    let axis = |s: &Interval| -> Vec<f64> {
        if n < 2 || s.lo == s.hi {
            return vec![0.5 * (s.lo + s.hi)];
        }
        (0..n)
            .map(|i| s.lo + (s.hi - s.lo) * i as f64 / (n - 1) as f64)
            .collect()
    };
    let mut out = vec![Vec::new()];
    for s in sides {
        let coords = axis(s);
        out = out
            .into_iter()
            .flat_map(|p| {
                coords.iter().map(move |&c| {
                    let mut q = p.clone();
                    q.push(c);
                    q
                })
            })
            .collect();
    }
    out
}

/// Five fibre functions used to probe operators.
pub fn fibre_probes(k: usize) -> Vec<Expr> {
    let ys: Vec<Expr> = (0..k).map(Expr::y).collect();
    let sum = Expr::sum(&ys);
    let squares: Vec<Expr> = ys.iter().map(|y| Expr::pow(y, 2)).collect();
    let sq = Expr::sum(&squares);
    let half = Expr::rational(num_rational::BigRational::new(1.into(), 2.into()));
    let bumps: Vec<Expr> = ys.iter().map(|y| Expr::bump(&Expr::mul(y, &half))).collect();
    vec![
        Expr::one(),
        sq.clone(),
        Expr::sin(&sum),
        Expr::product(&bumps),
        Expr::exp(&Expr::neg(&sq)),
    ]
}

/// Five total-space functions that also depend on the base.
pub fn total_probes(l: usize, k: usize) -> Vec<Expr> {
    let fibre = fibre_probes(k);
    let xs: Vec<Expr> = (0..l).map(Expr::x).collect();
    let xsum = Expr::sum(&xs);
    vec![
        fibre[0].clone(),
        Expr::add(&fibre[1], &xsum),
        Expr::sin(&Expr::add(&xsum, &Expr::sum(&(0..k).map(Expr::y).collect::<Vec<_>>()))),
        Expr::mul(&fibre[3], &Expr::cos(&xsum)),
        Expr::mul(&fibre[4], &Expr::add(&Expr::one(), &Expr::pow(&xsum, 2))),
    ]
}

/// Runs one suite over all applicable inputs.
pub fn run_suite(
    suite: Suite,
    inputs: &SuiteInputs,
    calc: &dyn Calculus,
    config: &CheckConfig,
) -> Result<CheckReport> {
    let start = Instant::now();
    let mut report = CheckReport::new(suite.name());
    let grid = &inputs.grid;
    let pairs = || {
        inputs
            .distributions
            .iter()
            .flat_map(|t| inputs.functions.iter().map(move |f| (t, f)))
    };
    match suite {
        Suite::Restriction => {
            for ((tn, t), (fname, f)) in pairs() {
                let r = check_restriction_compat(calc, t, f, grid, config)?;
                report.absorb(&format!("{tn}/{fname}"), r);
            }
        }
        Suite::Leibniz => {
            for ((tn, t), (fname, f)) in pairs() {
                let r = check_leibniz(calc, t, f, config.alpha_max, grid, LeibnizForm::Binomial, config)?;
                report.absorb(&format!("{tn}/{fname}"), r);
            }
        }
        Suite::Smoothness => {
            let l = inputs.bundle.base_dim;
            for ((tn, t), (fname, f)) in pairs() {
                for order in 1..=2 {
                    for alpha in MultiIndex::of_order(l, order) {
                        let r = check_smoothness(calc, t, f, &alpha, grid, config)?;
                        report.absorb(&format!("{tn}/{fname}"), r);
                    }
                }
            }
        }
        Suite::Duality => {
            let fs: Vec<Expr> = inputs.functions.iter().map(|p| p.1.clone()).collect();
            let ts: Vec<TransversalDistribution> =
                inputs.distributions.iter().map(|p| p.1.clone()).collect();
            let r = check_duality(calc, &fs, &ts, grid, config)?;
            report.absorb("", r);
        }
        Suite::Support => {
            for (tn, t) in &inputs.distributions {
                let r = check_support(calc, t, config.probe_count, config)?;
                report.absorb(tn, r);
            }
        }
        Suite::Localization => {
            for (tn, t) in &inputs.distributions {
                for a in &inputs.localization_points {
                    let r = check_localization(calc, t, a, grid, config)?;
                    report.absorb(tn, r);
                }
            }
        }
        Suite::Operators => {
            let r = check_operators(calc, &inputs.operators, grid, config)?;
            report.absorb("", r);
        }
    }
    Ok(report.timed(start))
}

pub(crate) fn witness(point: &[f64], alpha: &[u32], note: impl Into<String>) -> Witness {
    Witness {
        point: point.to_vec(),
        multi_index: alpha.to_vec(),
        note: note.into(),
    }
}
