use std::time::Instant;

use super::{
    fibre_probes, total_probes, uniform_grid, witness, CaseResult, Calculus, CheckConfig,
    CheckReport, Result, VerifyError, DUALITY_TOL, LEIBNIZ_TOL, LOCALIZATION_TOL, OPERATOR_TOL,
    QUADRATURE_NOISE, RESTRICTION_TOL, SMOOTHNESS_MIN_ORDER, SMOOTHNESS_TOL, SUPPORT_TOL,
};
use crate::distribution::{separating_probe, BaseFunction, DistributionError, TransversalDistribution};
use crate::expr::{AxisBox, Expr, Interval, MultiIndex};
use crate::operators::{KernelOperator, OperatorError, TermClass};

/// Running maximum of an error together with where it occurred.
struct Worst {
    error: f64,
    point: Vec<f64>,
    note: String,
}

impl Worst {
    fn new() -> Worst {
        Worst {
            error: 0.0,
            point: Vec::new(),
            note: String::new(),
        }
    }

    fn update(&mut self, error: f64, point: &[f64], note: impl FnOnce() -> String) {
        // NaN must register as a failure
        if error > self.error || (error.is_nan() && !self.error.is_nan()) {
            self.error = error;
            self.point = point.to_vec();
            self.note = note();
        }
    }
}

/// `T_x(F|P_x) = T(F)(x)` over the grid.
pub fn check_restriction_compat(
    calc: &dyn Calculus,
    t: &TransversalDistribution,
    f: &Expr,
    grid: &[Vec<f64>],
    config: &CheckConfig,
) -> Result<CheckReport> {
    let start = Instant::now();
    let bundle = t.bundle();
    let u = calc.evaluate(t, f)?;
    let mut worst = Worst::new();
    for x in grid {
        let lhs = calc.restrict(t, x)?.pair(&bundle.restrict_function(f, x)?)?;
        let rhs = u.value(x);
        worst.update((lhs - rhs).abs(), x, || format!("pairing {lhs:e} vs evaluation {rhs:e}"));
    }
    let mut report = CheckReport::new("restriction");
    let zeros = vec![0; bundle.base_dim];
    report.cases.push(CaseResult::measured(
        "compat",
        worst.error,
        config.tol(RESTRICTION_TOL),
        witness(&worst.point, &zeros, worst.note),
    ));
    Ok(report.timed(start))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LeibnizForm {
    /// `Σ C(α, β) (D^β T)_x (D^γ F)_x`.
    Binomial,
    /// The same sum with every coefficient replaced by one.
    Literal,
}

/// `D^α T(F)(x) = Σ_{β+γ=α} C(α,β) (D^β T)_x((D_x^γ F)|P_x)` for all
/// `|α| ≤ alpha_max`, relative to the grid maximum of the left side plus
/// the absolute sizes of the right-hand terms.
pub fn check_leibniz(
    calc: &dyn Calculus,
    t: &TransversalDistribution,
    f: &Expr,
    alpha_max: u32,
    grid: &[Vec<f64>],
    form: LeibnizForm,
    config: &CheckConfig,
) -> Result<CheckReport> {
    let start = Instant::now();
    let bundle = t.bundle();
    let l = bundle.base_dim;
    let u = calc.evaluate(t, f)?;
    let mut report = CheckReport::new("leibniz");
    for alpha in MultiIndex::up_to(l, alpha_max) {
        let lhs = calc.base_derivative(&u, &alpha);
        let parts: Vec<(f64, TransversalDistribution, Expr)> = alpha
            .below()
            .into_iter()
            .map(|beta| {
                let gamma = alpha.checked_sub(&beta).expect("β ≤ α");
                let c = match form {
                    LeibnizForm::Binomial => alpha.binomial(&beta) as f64,
                    LeibnizForm::Literal => 1.0,
                };
                Ok((c, calc.family_derivative(t, &beta)?, f.derive_x(&gamma)))
            })
            .collect::<Result<_>>()?;
        let mut worst = Worst::new();
        let mut scale = 0.0f64;
        for x in grid {
            let a = lhs.value(x);
            let mut b = 0.0;
            let mut magnitude = a.abs();
            for (c, dt, df) in &parts {
                let v = calc.restrict(dt, x)?;
                let g = bundle.restrict_function(df, x)?;
                b += c * v.pair(&g)?;
                magnitude += c.abs() * v.pair_abs(&g)?;
            }
            scale = scale.max(magnitude);
            worst.update((a - b).abs(), x, || format!("derivative {a:e} vs expansion {b:e}"));
        }
        let relative = if scale > 0.0 {
            worst.error / scale
        } else {
            worst.error
        };
        report.cases.push(CaseResult::measured(
            format!("α={alpha}"),
            relative,
            config.tol(LEIBNIZ_TOL),
            witness(&worst.point, alpha.entries(), worst.note),
        ));
    }
    Ok(report.timed(start))
}

fn finite_difference(u: &BaseFunction, x: &[f64], alpha: &MultiIndex, h: f64) -> f64 {
    let shifted = |moves: &[(usize, f64)]| {
        let mut p = x.to_vec();
        for &(i, d) in moves {
            p[i] += d;
        }
        u.value(&p)
    };
    let nonzero: Vec<usize> = (0..alpha.len()).filter(|&i| alpha[i] > 0).collect();
    match (nonzero.as_slice(), alpha.order()) {
        ([i], 1) => (shifted(&[(*i, h)]) - shifted(&[(*i, -h)])) / (2.0 * h),
        ([i], 2) => (shifted(&[(*i, h)]) - 2.0 * u.value(x) + shifted(&[(*i, -h)])) / (h * h),
        ([i, j], 2) => {
            (shifted(&[(*i, h), (*j, h)]) - shifted(&[(*i, h), (*j, -h)])
                - shifted(&[(*i, -h), (*j, h)])
                + shifted(&[(*i, -h), (*j, -h)]))
                / (4.0 * h * h)
        }
        _ => unreachable!("order checked by the caller"),
    }
}

/// Least-squares slope of `log e` against `log h`.
fn observed_order(hs: &[f64], errors: &[f64]) -> f64 {
    let pts: Vec<(f64, f64)> = hs.iter().zip(errors).map(|(h, e)| (h.ln(), e.ln())).collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

/// Central differences of `T(F)` against its derivative: observed order at
/// least 1.9 and terminal error below `1e-5`. Errors within what the
/// evaluation noise can produce through the stencil count as exact.
pub fn check_smoothness(
    calc: &dyn Calculus,
    t: &TransversalDistribution,
    f: &Expr,
    alpha: &MultiIndex,
    grid: &[Vec<f64>],
    config: &CheckConfig,
) -> Result<CheckReport> {
    let start = Instant::now();
    let order = alpha.order();
    if !(1..=2).contains(&order) {
        return Err(VerifyError::DerivativeOrder(order));
    }
    let u = calc.evaluate(t, f)?;
    let du = calc.base_derivative(&u, alpha);
    // derivative integrands are rougher than u's; the reference needs more nodes
    let du = if du.is_symbolic() {
        du
    } else {
        let q = du.quad_order();
        du.with_quad_order(2 * q)
    };
    let hs = &config.h_sequence;
    let id = format!("α={alpha}");
    let tol = config.tol(SMOOTHNESS_TOL);
    let mut report = CheckReport::new("smoothness");
    let mut worst = Worst::new();
    let mut measured = 0usize;
    let mut failed_order: Option<(Vec<f64>, f64)> = None;
    // below this, FD errors are evaluation noise and carry no order
    let accuracy = if u.is_symbolic() {
        1e3 * f64::EPSILON
    } else {
        QUADRATURE_NOISE
    };
    let scale = grid
        .iter()
        .map(|x| u.value(x).abs().max(du.value(x).abs()))
        .fold(f64::MIN_POSITIVE, f64::max);
    // l1 norm of the stencil weights, times h^|α|
    let stencil = if alpha.iter().any(|&a| a == 2) { 4.0 } else { 1.0 };
    for x in grid {
        if u.bump_margin(x).is_some_and(|m| m < config.boundary_margin) {
            continue;
        }
        measured += 1;
        let exact = du.value(x);
        let errors: Vec<f64> = hs
            .iter()
            .map(|&h| (finite_difference(&u, x, alpha, h) - exact).abs())
            .collect();
        let (used_h, used_e): (Vec<f64>, Vec<f64>) = hs
            .iter()
            .zip(&errors)
            .filter(|(h, e)| **e > accuracy * scale * (stencil / h.powi(order as i32) + 1.0))
            .map(|(h, e)| (*h, *e))
            .unzip();
        let p = if used_h.len() >= 2 {
            observed_order(&used_h, &used_e)
        } else {
            f64::INFINITY
        };
        let terminal = *errors.last().unwrap_or(&0.0);
        if p < SMOOTHNESS_MIN_ORDER && failed_order.is_none() {
            failed_order = Some((x.clone(), p));
        }
        worst.update(terminal, x, || format!("observed order {p:.3}"));
    }
    if measured == 0 {
        report.cases.push(CaseResult::skipped(id, tol, "all grid points near a bump boundary"));
        return Ok(report.timed(start));
    }
    let mut case = CaseResult::measured(
        id,
        worst.error,
        tol,
        witness(&worst.point, alpha.entries(), worst.note),
    );
    if let Some((x, p)) = failed_order {
        case.pass = false;
        case.witness = Some(witness(
            &x,
            alpha.entries(),
            format!("observed order {p:.3} below {SMOOTHNESS_MIN_ORDER}"),
        ));
    }
    report.cases.push(case);
    Ok(report.timed(start))
}

fn base_multiplier(l: usize) -> Expr {
    let last = Expr::x(l - 1);
    Expr::add(&Expr::cos(&Expr::x(0)), &Expr::mul(&last, &last))
}

/// Bilinearity and two-sided module linearity of `F̂(T) = T(F)` on the
/// product of the inputs, plus probe injectivity on distinct functions.
pub fn check_duality(
    calc: &dyn Calculus,
    functions: &[Expr],
    dists: &[TransversalDistribution],
    grid: &[Vec<f64>],
    config: &CheckConfig,
) -> Result<CheckReport> {
    let start = Instant::now();
    let mut report = CheckReport::new("duality");
    let tol = config.tol(DUALITY_TOL);
    let Some(bundle) = dists.first().map(|t| t.bundle()) else {
        return Ok(report.timed(start));
    };
    let l = bundle.base_dim;
    let zeros = vec![0; l];
    let f = base_multiplier(l);
    let mut additive_f = Worst::new();
    let mut additive_t = Worst::new();
    let mut module = Worst::new();
    for (i, fi) in functions.iter().enumerate() {
        for (j, t) in dists.iter().enumerate() {
            let hat = calc.hat_pair(fi, t)?;
            let ft = calc.module_action_base(&f, t)?;
            let hat_ft = calc.hat_pair(fi, &ft)?;
            let hat_ff = calc.hat_pair(&Expr::mul(&f, fi), t)?;
            let fi2 = &functions[(i + 1) % functions.len()];
            let sum_f = calc.hat_pair(&Expr::add(fi, fi2), t)?;
            let hat2 = calc.hat_pair(fi2, t)?;
            let t2 = &dists[(j + 1) % dists.len()];
            let sum_t = calc.hat_pair(fi, &t.add(t2)?)?;
            let hat_t2 = calc.hat_pair(fi, t2)?;
            for x in grid {
                let v = hat.value(x);
                let fx = f.eval(x, &[]);
                let a = fx * v;
                let b = hat_ft.value(x);
                let c = hat_ff.value(x);
                module.update((a - b).abs().max((a - c).abs()), x, || {
                    format!("F{i}, T{j}: f·F̂(T) {a:e}, F̂(f·T) {b:e}, (f·F)^(T) {c:e}")
                });
                let s = sum_f.value(x);
                let r = v + hat2.value(x);
                additive_f.update((s - r).abs(), x, || format!("F{i} + next, T{j}: {s:e} vs {r:e}"));
                let s = sum_t.value(x);
                let r = v + hat_t2.value(x);
                additive_t.update((s - r).abs(), x, || format!("F{i}, T{j} + next: {s:e} vs {r:e}"));
            }
        }
    }
    for (id, w) in [
        ("additive in F", additive_f),
        ("additive in T", additive_t),
        ("module linear", module),
    ] {
        report
            .cases
            .push(CaseResult::measured(id, w.error, tol, witness(&w.point, &zeros, w.note)));
    }

    let fibre_grid = uniform_grid(&AxisBox::cube(bundle.fibre_dim, 1.0), 5);
    let probe_grid: Vec<(Vec<f64>, Vec<f64>)> = grid
        .iter()
        .flat_map(|x| fibre_grid.iter().map(move |y| (x.clone(), y.clone())))
        .collect();
    let mut mismatches = 0usize;
    let mut first: Option<(Vec<f64>, String)> = None;
    for (i, fi) in functions.iter().enumerate() {
        for (j, fj) in functions.iter().enumerate().skip(i) {
            let mut gap = 0.0f64;
            let mut at = Vec::new();
            for (x, y) in &probe_grid {
                let d = (fi.eval(x, y) - fj.eval(x, y)).abs();
                if d > gap {
                    gap = d;
                    at = x.clone();
                }
            }
            let distinct = gap > 1e-12;
            let same = separating_probe(fi, fj, &probe_grid)?;
            if same == distinct {
                mismatches += 1;
                first.get_or_insert((at, format!("F{i} vs F{j}: direct gap {gap:e}, probes agree: {same}")));
            }
        }
    }
    let (point, note) = first.unwrap_or_default();
    report.cases.push(CaseResult::measured(
        "probe injectivity",
        mismatches as f64,
        0.5,
        witness(&point, &zeros, note),
    ));
    Ok(report.timed(start))
}

/// Bump probes centred just outside the reported total support must see
/// nothing, and the base support must be its projection.
pub fn check_support(
    calc: &dyn Calculus,
    t: &TransversalDistribution,
    probe_count: usize,
    config: &CheckConfig,
) -> Result<CheckReport> {
    let start = Instant::now();
    let bundle = t.bundle();
    let l = bundle.base_dim;
    let n = l + bundle.fibre_dim;
    let zeros = vec![0; l];
    let mut report = CheckReport::new("support");
    let total = calc.total_support(t);
    let base = calc.base_support(t);
    let projection = total.project(0..l);
    let same = base == projection || (base.is_empty() && projection.is_empty());
    report.cases.push(CaseResult::measured(
        "base = π(total)",
        if same { 0.0 } else { 1.0 },
        0.5,
        witness(&[], &zeros, format!("base {base} vs projection {projection}")),
    ));

    let region = if total.is_empty() {
        AxisBox::cube(n, 1.0)
    } else {
        total.clone()
    };
    let sides = region.sides().expect("nonempty").to_vec();
    let mut symbolic = Worst::new();
    let mut quadrature = Worst::new();
    for p in 0..probe_count {
        // axis, side and offset cycle through a fixed low-discrepancy pattern
        let axis = p % n;
        let above = (p / n) % 2 == 0;
        let frac = (p as f64 * 0.618_033_988_749_895).fract();
        let gap = 0.1 + 0.9 * frac;
        let s = sides[axis];
        let centre_axis = if above { s.hi + gap } else { s.lo - gap };
        let mut factors = Vec::new();
        let mut centre = Vec::with_capacity(n);
        for (m, side) in sides.iter().enumerate() {
            let (c, r) = if m == axis {
                (centre_axis, gap)
            } else {
                let t = ((p * (m + 2)) as f64 * 0.754_877_666_246_693).fract();
                let width = (side.hi - side.lo).max(1.0);
                (side.lo + t * (side.hi - side.lo), width)
            };
            centre.push(c);
            let v = if m < l { Expr::x(m) } else { Expr::y(m - l) };
            let arg = Expr::mul(
                &Expr::sub(&v, &Expr::float(c)),
                &Expr::float(1.0 / r),
            );
            factors.push(Expr::bump(&arg));
        }
        let probe = Expr::product(&factors);
        let u = calc.evaluate(t, &probe)?;
        let base_box = AxisBox::new(
            centre[..l]
                .iter()
                .zip(&sides[..l])
                .enumerate()
                .map(|(m, (&c, side))| {
                    let r = if m == axis { gap } else { (side.hi - side.lo).max(1.0) };
                    Interval::new(c - r, c + r)
                })
                .collect(),
        );
        for x in uniform_grid(&base_box.hull(&region.project(0..l)), 7) {
            let sym = u.symbolic_part().eval(&x, &[]).abs();
            symbolic.update(sym, &x, || format!("probe {p} centred at {centre:?}"));
            let quad: f64 = u.integrals().iter().map(|i| i.value(&x, u.quad_order())).sum();
            quadrature.update(quad.abs(), &x, || format!("probe {p} centred at {centre:?}"));
        }
    }
    report.cases.push(CaseResult::measured(
        "outside probes (symbolic)",
        symbolic.error,
        f64::MIN_POSITIVE,
        witness(&symbolic.point, &zeros, symbolic.note),
    ));
    report.cases.push(CaseResult::measured(
        "outside probes (quadrature)",
        quadrature.error,
        config.tol(SUPPORT_TOL),
        witness(&quadrature.point, &zeros, quadrature.note),
    ));
    Ok(report.timed(start))
}

/// When `T_a = 0`, the decomposition `Σ fᵢ·Tᵢ` has `fᵢ(a) = 0` and
/// reproduces `T` on probes; otherwise the case is skipped.
pub fn check_localization(
    calc: &dyn Calculus,
    t: &TransversalDistribution,
    a: &[f64],
    grid: &[Vec<f64>],
    config: &CheckConfig,
) -> Result<CheckReport> {
    let start = Instant::now();
    let bundle = t.bundle();
    let l = bundle.base_dim;
    let zeros = vec![0; l];
    let tol = config.tol(LOCALIZATION_TOL);
    let id = format!("at {a:?}");
    let mut report = CheckReport::new("localization");
    if !calc.restrict(t, a)?.is_zero() {
        report.cases.push(CaseResult::skipped(id, tol, "precondition not met: T_x ≠ 0"));
        return Ok(report.timed(start));
    }
    let parts = match calc.localize(t, a) {
        Ok(p) => p,
        Err(VerifyError::Distribution(DistributionError::UnsupportedForm(why))) => {
            report.cases.push(CaseResult::skipped(id, tol, format!("unsupported form: {why}")));
            return Ok(report.timed(start));
        }
        Err(e) => return Err(e),
    };
    let mut worst = Worst::new();
    let mut recomposed = TransversalDistribution::zero(bundle);
    for (f, ti) in &parts {
        worst.update(f.eval(a, &[]).abs(), a, || format!("factor {f} does not vanish"));
        recomposed = recomposed.add(&calc.module_action_base(f, ti)?)?;
    }
    let probes = total_probes(l, bundle.fibre_dim);
    let restricted = calc.restrict(&recomposed, a)?;
    for g in &fibre_probes(bundle.fibre_dim) {
        let v = restricted.pair(g)?;
        worst.update(v.abs(), a, || format!("recomposition at the point pairs {v:e} with {g}"));
    }
    for (pi, g) in probes.iter().enumerate() {
        let lhs = calc.evaluate(&recomposed, g)?;
        let rhs = calc.evaluate(t, g)?;
        for x in grid {
            let (p, q) = (lhs.value(x), rhs.value(x));
            worst.update((p - q).abs(), x, || format!("probe {pi}: Σ fᵢTᵢ gives {p:e}, T gives {q:e}"));
        }
    }
    report
        .cases
        .push(CaseResult::measured(id, worst.error, tol, witness(&worst.point, &zeros, worst.note)));
    Ok(report.timed(start))
}

fn composable(e: &VerifyError) -> Option<String> {
    match e {
        VerifyError::Operator(
            err @ (OperatorError::DerivativeDirac
            | OperatorError::NestingTooDeep(_)
            | OperatorError::NonAffineSection(_)
            | OperatorError::SingularSection),
        ) => Some(err.to_string()),
        _ => None,
    }
}

/// `K₁∘K₂` against `K₁` applied to `K₂g` on the grid for every ordered
/// pair, and associativity on triples of derivative-free graph kernels.
pub fn check_operators(
    calc: &dyn Calculus,
    ops: &[(String, KernelOperator)],
    grid: &[Vec<f64>],
    config: &CheckConfig,
) -> Result<CheckReport> {
    let start = Instant::now();
    let mut report = CheckReport::new("operators");
    let tol = config.tol(OPERATOR_TOL);
    let Some(bundle) = ops.first().map(|p| p.1.bundle()) else {
        return Ok(report.timed(start));
    };
    let zeros = vec![0; bundle.base_dim];
    let probes = fibre_probes(bundle.fibre_dim);
    for (n1, k1) in ops {
        for (n2, k2) in ops {
            let id = format!("{n1}∘{n2}");
            let composite = match calc.compose(k1, k2) {
                Ok(c) => c,
                Err(e) => match composable(&e) {
                    Some(why) => {
                        report.cases.push(CaseResult::skipped(id, tol, why));
                        continue;
                    }
                    None => return Err(e),
                },
            };
            let mut worst = Worst::new();
            for (gi, g) in probes.iter().enumerate() {
                let lhs = calc.apply(&composite, g)?;
                let inner = calc.apply(k2, g)?;
                for x in grid {
                    let a = lhs.value(x);
                    let b = k1.apply_numeric(&inner, x);
                    worst.update((a - b).abs(), x, || format!("probe {gi}: kernel {a:e}, operators {b:e}"));
                }
            }
            report
                .cases
                .push(CaseResult::measured(id, worst.error, tol, witness(&worst.point, &zeros, worst.note)));
        }
    }

    let graphs: Vec<&(String, KernelOperator)> = ops
        .iter()
        .filter(|(_, k)| k.classes().iter().all(|c| *c == TermClass::PlainDirac))
        .take(3)
        .collect();
    for a in &graphs {
        for b in &graphs {
            for c in &graphs {
                let left = calc.compose(&calc.compose(&a.1, &b.1)?, &c.1)?;
                let right = calc.compose(&a.1, &calc.compose(&b.1, &c.1)?)?;
                let mut worst = Worst::new();
                for (gi, g) in probes.iter().enumerate() {
                    let l = calc.apply(&left, g)?;
                    let r = calc.apply(&right, g)?;
                    for x in grid {
                        let (p, q) = (l.value(x), r.value(x));
                        worst.update((p - q).abs(), x, || format!("probe {gi}: {p:e} vs {q:e}"));
                    }
                }
                report.cases.push(CaseResult::measured(
                    format!("({}∘{})∘{} = {}∘({}∘{})", a.0, b.0, c.0, a.0, b.0, c.0),
                    worst.error,
                    tol,
                    witness(&worst.point, &zeros, worst.note),
                ));
            }
        }
    }
    Ok(report.timed(start))
}
