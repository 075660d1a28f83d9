//! Command-line front end over scene files.
//!
//! `transversal [FLAGS] <SCENE> <COMMAND> ...`; results go to stdout as JSON
//! or, with `--format table`, as aligned text.

mod output;
pub mod scene;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};
use thiserror::Error;

use crate::distribution::{BaseFunction, DistributionError};
use crate::expr::{AxisBox, Interval, MultiIndex};
use crate::operators::{KernelOperator, OperatorError};
use crate::quadrature;
use crate::topology::{self, Seminorm, TopologyError};
use crate::verify::{self, CheckConfig, Reference, SuiteInputs, VerifyError};

pub use scene::{load_scene, parse_scene, Profile, Scene, SceneError};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_UNRESOLVED: i32 = 3;
pub const EXIT_INTERNAL: i32 = 4;
pub const EXIT_PARSE: i32 = 5;
pub const EXIT_DIMENSION: i32 = 6;

/// Points per axis of the grid used when no `--at` is given.
pub const GRID_POINTS: usize = 9;

#[derive(Parser, Debug)]
#[command(name = "transversal", version, about = "Transversal distributions on trivial bundles")]
pub struct Cli {
    #[arg(long, global = true, value_enum, default_value = "json")]
    format: Format,
    /// Gauss–Legendre nodes per axis.
    #[arg(long, global = true)]
    quad_order: Option<usize>,
    /// Lattice points per unit-2 interval for seminorms and membership.
    #[arg(long, global = true)]
    grid_density: Option<usize>,
    #[arg(long, global = true, default_value_t = 1.0)]
    tolerance_scale: f64,
    /// Comma-separated suite names, or `all`.
    #[arg(long, global = true, default_value = "all")]
    suite: String,
    scene: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Table,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// T(F) at base points.
    Eval {
        distribution: String,
        function: String,
        #[arg(long, allow_hyphen_values = true)]
        at: Vec<String>,
    },
    /// The fibre distribution T_x.
    Restrict {
        distribution: String,
        #[arg(long, allow_hyphen_values = true)]
        at: Vec<String>,
    },
    /// D^α T.
    Derive {
        distribution: String,
        #[arg(long)]
        alpha: String,
    },
    /// Total and base support boxes.
    Support { distribution: String },
    /// f·T for a base function or F·T for a total-space one.
    Action {
        distribution: String,
        #[arg(long, conflicts_with = "total", required_unless_present = "total")]
        base: Option<String>,
        #[arg(long)]
        total: Option<String>,
    },
    /// K₁ ∘ K₂ and its values on fibre probes.
    Compose {
        first: String,
        second: String,
        #[arg(long, allow_hyphen_values = true)]
        at: Vec<String>,
    },
    /// (K g)(x).
    Apply {
        operator: String,
        function: String,
        #[arg(long, allow_hyphen_values = true)]
        at: Vec<String>,
    },
    /// p_{K,m}(F) over a box written `lo:hi,lo:hi,…`.
    Seminorm {
        function: String,
        #[arg(long = "box", allow_hyphen_values = true)]
        region: String,
        #[arg(long)]
        order: u32,
    },
    /// Membership of a base function or distribution in a profile's neighbourhood.
    Member { profile: String, target: String },
    /// Runs the verification suites over the scene.
    Check,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Scene(#[from] SceneError),
    #[error("unresolved {kind} `{name}`")]
    Unresolved { kind: &'static str, name: String },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("{0}")]
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Unresolved { .. } => EXIT_UNRESOLVED,
            CliError::Dimension(_) => EXIT_DIMENSION,
            CliError::Internal(_) => EXIT_INTERNAL,
            CliError::Scene(e) => match e {
                SceneError::Io { .. } => EXIT_INTERNAL,
                SceneError::Json { .. } | SceneError::Schema { .. } | SceneError::Expr { .. } => EXIT_PARSE,
                SceneError::Unresolved { .. } => EXIT_UNRESOLVED,
                SceneError::Dimension { .. } => EXIT_DIMENSION,
            },
        }
    }
}

impl From<DistributionError> for CliError {
    fn from(e: DistributionError) -> Self {
        match e {
            DistributionError::DimensionMismatch { .. } | DistributionError::Bundle(_) => {
                CliError::Dimension(e.to_string())
            }
            _ => CliError::Internal(e.to_string()),
        }
    }
}

impl From<OperatorError> for CliError {
    fn from(e: OperatorError) -> Self {
        match e {
            OperatorError::Distribution(d) => d.into(),
            OperatorError::NotPairBundle { .. } | OperatorError::BundleMismatch => CliError::Dimension(e.to_string()),
            _ => CliError::Internal(e.to_string()),
        }
    }
}

impl From<TopologyError> for CliError {
    fn from(e: TopologyError) -> Self {
        match e {
            TopologyError::Distribution(d) => d.into(),
            TopologyError::DimensionMismatch { .. } => CliError::Dimension(e.to_string()),
            _ => CliError::Internal(e.to_string()),
        }
    }
}

impl From<VerifyError> for CliError {
    fn from(e: VerifyError) -> Self {
        match e {
            VerifyError::UnknownSuite(_) => CliError::Usage(e.to_string()),
            VerifyError::Distribution(d) => d.into(),
            VerifyError::Operator(o) => o.into(),
            _ => CliError::Internal(e.to_string()),
        }
    }
}

/// What a finished invocation prints and returns.
#[derive(Clone, Debug, PartialEq)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

impl Outcome {
    fn failed(e: &CliError) -> Outcome {
        Outcome {
            code: e.exit_code(),
            stdout: String::new(),
            stderr: format!("error: {e}\n"),
        }
    }
}

/// Parses `args` (program name first) and runs the command.
pub fn run<I, T>(args: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_USAGE,
            };
            let text = e.render().to_string();
            return if code == EXIT_OK {
                Outcome {
                    code,
                    stdout: text,
                    stderr: String::new(),
                }
            } else {
                Outcome {
                    code,
                    stdout: String::new(),
                    stderr: text,
                }
            };
        }
    };
    let result = Settings::apply(&cli).and_then(|_saved| execute(&cli));
    result.unwrap_or_else(|e| Outcome::failed(&e))
}

/// Process entry point for the binary.
pub fn main() -> i32 {
    let o = run(std::env::args_os());
    print!("{}", o.stdout);
    eprint!("{}", o.stderr);
    o.code
}

/// Global numeric settings, restored when the command finishes.
struct Settings {
    quad_order: usize,
    grid_density: usize,
}

impl Settings {
    fn apply(cli: &Cli) -> Result<Settings, CliError> {
        let saved = Settings {
            quad_order: quadrature::default_order(),
            grid_density: topology::grid_density(),
        };
        if let Some(q) = cli.quad_order {
            if q == 0 {
                return Err(CliError::Usage("--quad-order must be positive".into()));
            }
            quadrature::set_default_order(q);
        }
        if let Some(n) = cli.grid_density {
            if n < 2 {
                return Err(CliError::Usage("--grid-density must be at least 2".into()));
            }
            topology::set_grid_density(n);
        }
        if !(cli.tolerance_scale.is_finite() && cli.tolerance_scale > 0.0) {
            return Err(CliError::Usage("--tolerance-scale must be positive".into()));
        }
        Ok(saved)
    }
}

impl Drop for Settings {
    fn drop(&mut self) {
        quadrature::set_default_order(self.quad_order);
        topology::set_grid_density(self.grid_density);
    }
}

fn parse_numbers(text: &str, what: &str) -> Result<Vec<f64>, CliError> {
    text.split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| CliError::Usage(format!("bad {what} coordinate `{s}`")))
        })
        .collect()
}

fn parse_points(scene: &Scene, at: &[String], fallback: impl FnOnce() -> Vec<Vec<f64>>) -> Result<Vec<Vec<f64>>, CliError> {
    if at.is_empty() {
        return Ok(fallback());
    }
    let l = scene.bundle.base_dim;
    at.iter()
        .map(|a| {
            let p = parse_numbers(a, "--at")?;
            if p.len() != l {
                return Err(CliError::Dimension(format!("point `{a}` has {} coordinates, base dimension is {l}", p.len())));
            }
            Ok(p)
        })
        .collect()
}

fn parse_index(text: &str, n: usize) -> Result<MultiIndex, CliError> {
    let entries = text
        .split(',')
        .map(|s| s.trim().parse::<u32>().map_err(|_| CliError::Usage(format!("bad multi-index entry `{s}`"))))
        .collect::<Result<Vec<_>, _>>()?;
    if entries.len() != n {
        return Err(CliError::Dimension(format!("multi-index `{text}` has {} entries, expected {n}", entries.len())));
    }
    Ok(MultiIndex::new(entries))
}

fn parse_box(text: &str) -> Result<AxisBox, CliError> {
    let sides = text
        .split(',')
        .map(|side| {
            let (lo, hi) = side
                .split_once(':')
                .ok_or_else(|| CliError::Usage(format!("box side `{side}` is not lo:hi")))?;
            let lo: f64 = lo.trim().parse().map_err(|_| CliError::Usage(format!("bad box bound `{lo}`")))?;
            let hi: f64 = hi.trim().parse().map_err(|_| CliError::Usage(format!("bad box bound `{hi}`")))?;
            if !(lo <= hi) {
                return Err(CliError::Usage(format!("box side `{side}` has lo > hi")));
            }
            Ok(Interval::new(lo, hi))
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(AxisBox::new(sides))
}

fn lookup<'a, T>(found: Option<&'a T>, kind: &'static str, name: &str) -> Result<&'a T, CliError> {
    found.ok_or_else(|| CliError::Unresolved {
        kind,
        name: name.to_string(),
    })
}

/// Scene contents as verification inputs, with the default grid.
pub fn suite_inputs(scene: &Scene) -> SuiteInputs {
    let mut inputs = SuiteInputs::new(scene.bundle);
    inputs.distributions = scene.distributions.clone();
    inputs.functions = scene.functions.clone();
    inputs.operators = scene.operators.clone();
    inputs.grid = kernel_grid(scene, &scene.operators);
    if !scene.distributions.is_empty() {
        inputs.grid = inputs.default_grid(GRID_POINTS);
    }
    inputs.localization_points = inputs.grid.clone();
    inputs
}

fn kernel_grid(scene: &Scene, kernels: &[(String, KernelOperator)]) -> Vec<Vec<f64>> {
    let mut inputs = SuiteInputs::new(scene.bundle);
    inputs.distributions = kernels.iter().map(|(n, k)| (n.clone(), k.distribution().clone())).collect();
    inputs.default_grid(GRID_POINTS)
}

fn values(f: &BaseFunction, points: &[Vec<f64>]) -> Value {
    Value::Array(
        points
            .iter()
            .map(|p| json!({"x": output::point(p), "value": output::num(f.value(p))}))
            .collect(),
    )
}

fn execute(cli: &Cli) -> Result<Outcome, CliError> {
    let scene = load_scene(&cli.scene)?;
    let l = scene.bundle.base_dim;
    let dist = |name: &str| lookup(scene.distribution(name), "distribution", name);
    let func = |name: &str| lookup(scene.function(name), "function", name);
    let op = |name: &str| lookup(scene.operator(name), "operator", name);
    let default_grid = || suite_inputs(&scene).grid;

    let body = match &cli.command {
        Command::Eval { distribution, function, at } => {
            let t = dist(distribution)?;
            let f = func(function)?;
            let points = parse_points(&scene, at, default_grid)?;
            let u = t.evaluate(f)?;
            json!({
                "distribution": distribution,
                "function": function,
                "values": values(&u, &points),
            })
        }
        Command::Restrict { distribution, at } => {
            let t = dist(distribution)?;
            let points = parse_points(&scene, at, default_grid)?;
            let items = points
                .iter()
                .map(|p| {
                    let r = t.restrict(p)?;
                    let mut v = output::point_distribution(&r);
                    v["x"] = output::point(p);
                    Ok(v)
                })
                .collect::<Result<Vec<_>, CliError>>()?;
            json!({"distribution": distribution, "restrictions": items})
        }
        Command::Derive { distribution, alpha } => {
            let t = dist(distribution)?;
            let a = parse_index(alpha, l)?;
            let d = t.family_derivative(&a)?;
            json!({"distribution": distribution, "alpha": output::index(&a), "result": output::distribution(&d)})
        }
        Command::Support { distribution } => {
            let t = dist(distribution)?;
            json!({
                "distribution": distribution,
                "total": output::axis_box(&t.total_support()),
                "base": output::axis_box(&t.base_support()),
            })
        }
        Command::Action { distribution, base, total } => {
            let t = dist(distribution)?;
            let (name, result) = match (base, total) {
                (Some(b), _) => {
                    let f = func(b)?;
                    f.check_layout(scene.bundle.base_layout())
                        .map_err(|_| CliError::Dimension(format!("`{b}` depends on fibre coordinates")))?;
                    (b, t.module_action_base(f)?)
                }
                (None, Some(b)) => (b, t.module_action_total(func(b)?)?),
                (None, None) => return Err(CliError::Usage("give --base or --total".into())),
            };
            json!({"distribution": distribution, "function": name, "result": output::distribution(&result)})
        }
        Command::Compose { first, second, at } => {
            let (k1, k2) = (op(first)?, op(second)?);
            let composite = k1.compose(k2)?;
            let kernels = [(first.clone(), k1.clone()), (second.clone(), k2.clone())];
            let points = parse_points(&scene, at, || kernel_grid(&scene, &kernels))?;
            let probes = verify::fibre_probes(scene.bundle.fibre_dim);
            let mut evaluations = Vec::new();
            for (i, g) in probes.iter().enumerate() {
                let direct = composite.apply(g)?;
                let inner = k2.apply(g)?;
                for p in &points {
                    evaluations.push(json!({
                        "probe": i,
                        "x": output::point(p),
                        "composite": output::num(direct.value(p)),
                        "sequential": output::num(k1.apply_numeric(&inner, p)),
                    }));
                }
            }
            json!({
                "first": first,
                "second": second,
                "composite": output::distribution(composite.distribution()),
                "probes": probes.iter().map(|g| g.to_string()).collect::<Vec<_>>(),
                "evaluations": evaluations,
            })
        }
        Command::Apply { operator, function, at } => {
            let k = op(operator)?;
            let g = func(function)?;
            g.check_layout(scene.bundle.fibre_layout())
                .map_err(|_| CliError::Dimension(format!("`{function}` depends on base coordinates")))?;
            let kernels = [(operator.clone(), k.clone())];
            let points = parse_points(&scene, at, || kernel_grid(&scene, &kernels))?;
            let h = k.apply(g)?;
            json!({"operator": operator, "function": function, "values": values(&h, &points)})
        }
        Command::Seminorm { function, region, order } => {
            let f = func(function)?;
            let region = parse_box(region)?;
            let layout = if region.dim() == l {
                f.check_layout(scene.bundle.base_layout())
                    .map_err(|_| CliError::Dimension(format!("`{function}` depends on fibre coordinates")))?;
                scene.bundle.base_layout()
            } else if region.dim() == scene.bundle.layout().dim() {
                scene.bundle.layout()
            } else {
                return Err(CliError::Dimension(format!(
                    "box has {} sides; expected {l} or {}",
                    region.dim(),
                    scene.bundle.layout().dim()
                )));
            };
            let s = Seminorm::new(region, *order)?.eval(f, layout)?;
            json!({
                "function": function,
                "order": order,
                "value": output::num(s.value),
                "point": output::point(&s.point),
                "alpha": output::index(&s.alpha),
            })
        }
        Command::Member { profile, target } => {
            let p = lookup(scene.profile(profile), "profile", profile)?;
            let density = topology::grid_density();
            let m = if let Some(t) = scene.distribution(target) {
                topology::lfb_membership(&p.profile, &p.families, t, density)?
            } else if let Some(f) = scene.function(target) {
                f.check_layout(scene.bundle.base_layout())
                    .map_err(|_| CliError::Dimension(format!("`{target}` depends on fibre coordinates")))?;
                topology::lf_membership(&p.profile, &BaseFunction::symbolic(l, f.clone()), density)?
            } else {
                return Err(CliError::Unresolved {
                    kind: "distribution or function",
                    name: target.clone(),
                });
            };
            let witness = m.witness.as_ref().map(|w| {
                json!({
                    "point": output::point(&w.point),
                    "alpha": output::index(&w.alpha),
                    "n": w.n,
                    "value": output::num(w.value),
                    "bound": output::num(w.bound),
                })
            });
            json!({"profile": profile, "target": target, "holds": m.holds, "witness": witness})
        }
        Command::Check => return check(cli, &scene),
    };
    let stdout = match cli.format {
        Format::Json => render_json(&body),
        Format::Table => output::table(&body),
    };
    Ok(Outcome {
        code: EXIT_OK,
        stdout,
        stderr: String::new(),
    })
}

fn render_json(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("values serialize");
    s.push('\n');
    s
}

fn check(cli: &Cli, scene: &Scene) -> Result<Outcome, CliError> {
    let suites = verify::parse_suites(&cli.suite)?;
    let config = CheckConfig {
        tolerance_scale: cli.tolerance_scale,
        ..CheckConfig::default()
    };
    let inputs = suite_inputs(scene);
    let mut reports = Vec::new();
    for s in suites {
        reports.push(verify::run_suite(s, &inputs, &Reference, &config)?);
    }
    let pass = reports.iter().all(|r| r.passed());
    let stdout = match cli.format {
        Format::Json => render_json(&json!({
            "scene": cli.scene.display().to_string(),
            "pass": pass,
            "suites": reports.iter().map(output::report).collect::<Vec<_>>(),
        })),
        Format::Table => {
            let mut out = String::new();
            for r in &reports {
                output::report_table(r, &mut out);
            }
            out.push_str(if pass { "all suites passed\n" } else { "some suites FAILED\n" });
            out
        }
    };
    Ok(Outcome {
        code: if pass { EXIT_OK } else { EXIT_CHECK_FAILED },
        stdout,
        stderr: String::new(),
    })
}

#[cfg(test)]
mod tests;
