//! Fixed-order tensor-product Gauss–Legendre quadrature over boxes.
//!
//! Node tables are computed once per order and shared; the cache tolerates
//! concurrent first use because construction is deterministic.

use std::collections::HashMap;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex, OnceLock};

use crate::expr::{AxisBox, Interval};

pub const DEFAULT_ORDER: usize = 64;

/// `∫_{-1}^{1} bump(t) dt`.
pub const BUMP_INTEGRAL: f64 = 0.443_993_816_168_079_4;

static ORDER: AtomicUsize = AtomicUsize::new(DEFAULT_ORDER);

/// Process-wide default order used by newly built pairings.
pub fn default_order() -> usize {
    ORDER.load(Ordering::Relaxed)
}

pub fn set_default_order(q: usize) {
    assert!(q >= 2, "quadrature order must be at least 2");
    ORDER.store(q, Ordering::Relaxed);
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
#[derive(Debug)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    fn compute(q: usize) -> GaussLegendre {
        let mut nodes = vec![0.0; q];
        let mut weights = vec![0.0; q];
        for i in 0..q.div_ceil(2) {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (q as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(q, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(q, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[q - 1 - i] = x;
            weights[i] = w;
            weights[q - 1 - i] = w;
        }
        if q % 2 == 1 {
            nodes[q / 2] = 0.0;
        }
        GaussLegendre { nodes, weights }
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }
}

/// `(Pₙ(x), Pₙ'(x))` by the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let n = n as f64;
    let d = n * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Shared rule of order `q`.
pub fn rule(q: usize) -> Arc<GaussLegendre> {
    assert!(q >= 2, "quadrature order must be at least 2");
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<GaussLegendre>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(Default::default);
    if let Some(r) = cache.lock().expect("rule cache poisoned").get(&q) {
        return r.clone();
    }
    let built = Arc::new(GaussLegendre::compute(q));
    cache
        .lock()
        .expect("rule cache poisoned")
        .entry(q)
        .or_insert(built)
        .clone()
}

/// Result of a box integral.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Integral {
    pub value: f64,
    /// Set when the box is empty or has a side of zero length.
    pub degenerate: bool,
}

/// Tensor-product rule mapped onto a box.
#[derive(Clone, Debug)]
pub struct QuadratureRule {
    axes: Vec<(Vec<f64>, Vec<f64>)>,
}

impl QuadratureRule {
    /// `None` for empty or degenerate boxes.
    pub fn on_box(domain: &AxisBox, q: usize) -> Option<QuadratureRule> {
        let sides = domain.sides()?;
        let base = rule(q);
        let mut axes = Vec::with_capacity(sides.len());
        for s in sides {
            assert!(s.is_bounded(), "quadrature over an unbounded box");
            if s.hi <= s.lo {
                return None;
            }
            let half = 0.5 * (s.hi - s.lo);
            let mid = 0.5 * (s.hi + s.lo);
            let nodes = base.nodes.iter().map(|t| mid + half * t).collect();
            let weights = base.weights.iter().map(|w| half * w).collect();
            axes.push((nodes, weights));
        }
        Some(QuadratureRule { axes })
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn axis(&self, i: usize) -> (&[f64], &[f64]) {
        (&self.axes[i].0, &self.axes[i].1)
    }

    /// Visits every tensor node in lexicographic order with its weight.
    pub fn for_each(&self, mut visit: impl FnMut(&[f64], f64)) {
        let n = self.axes.len();
        if n == 0 {
            visit(&[], 1.0);
            return;
        }
        let mut idx = vec![0usize; n];
        let mut point: Vec<f64> = self.axes.iter().map(|(x, _)| x[0]).collect();
        loop {
            let w: f64 = idx
                .iter()
                .zip(&self.axes)
                .map(|(&i, (_, ws))| ws[i])
                .product();
            visit(&point, w);
            let mut d = n;
            loop {
                if d == 0 {
                    return;
                }
                d -= 1;
                idx[d] += 1;
                if idx[d] < self.axes[d].0.len() {
                    point[d] = self.axes[d].0[idx[d]];
                    break;
                }
                idx[d] = 0;
                point[d] = self.axes[d].0[0];
            }
        }
    }

    /// Weighted sum accumulated in node order.
    pub fn sum(&self, f: impl Fn(&[f64]) -> f64) -> f64 {
        let mut acc = 0.0;
        self.for_each(|p, w| acc += w * f(p));
        acc
    }
}

/// Iterated integral over `dim` axes where the range of axis `j` may depend
/// on the coordinates `0..j` already fixed. `range` returns `None` for an
/// empty slice. Each axis gets its own order-`q` rule.
pub fn integrate_nested(
    f: impl Fn(&[f64]) -> f64,
    dim: usize,
    range: impl Fn(&[f64]) -> Option<Interval>,
    q: usize,
) -> f64 {
    fn go(
        f: &dyn Fn(&[f64]) -> f64,
        range: &dyn Fn(&[f64]) -> Option<Interval>,
        dim: usize,
        base: &GaussLegendre,
        prefix: &mut Vec<f64>,
    ) -> f64 {
        if prefix.len() == dim {
            return f(prefix);
        }
        let Some(s) = range(prefix) else {
            return 0.0;
        };
        assert!(s.is_bounded(), "quadrature over an unbounded range");
        if s.hi <= s.lo {
            return 0.0;
        }
        let half = 0.5 * (s.hi - s.lo);
        let mid = 0.5 * (s.hi + s.lo);
        let mut acc = 0.0;
        for (t, w) in base.nodes.iter().zip(&base.weights) {
            prefix.push(mid + half * t);
            acc += half * w * go(f, range, dim, base, prefix);
            prefix.pop();
        }
        acc
    }
    let base = rule(q);
    go(&f, &range, dim, &base, &mut Vec::with_capacity(dim))
}

/// `∫_box f` with order `q` per axis; degenerate boxes integrate to `0`.
pub fn integrate(f: impl Fn(&[f64]) -> f64, domain: &AxisBox, q: usize) -> Integral {
    match QuadratureRule::on_box(domain, q) {
        Some(r) => Integral {
            value: r.sum(f),
            degenerate: false,
        },
        None => Integral {
            value: 0.0,
            degenerate: true,
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::Interval;

    fn unit(lo: f64, hi: f64) -> AxisBox {
        AxisBox::new(vec![Interval::new(lo, hi)])
    }

    #[test]
    fn nested_ranges_follow_the_prefix() {
        // triangle 0 ≤ y ≤ x ≤ 1: ∫∫ x·y = 1/8, area 1/2
        let range = |p: &[f64]| match p {
            [] => Some(Interval::new(0.0, 1.0)),
            [x] => Some(Interval::new(0.0, *x)),
            _ => unreachable!(),
        };
        let area = integrate_nested(|_| 1.0, 2, range, 4);
        let moment = integrate_nested(|p| p[0] * p[1], 2, range, 4);
        assert!((area - 0.5).abs() < 1e-15);
        assert!((moment - 0.125).abs() < 1e-15);
        let b = AxisBox::new(vec![Interval::new(-1.0, 2.0), Interval::new(0.5, 1.0)]);
        let f = |p: &[f64]| (p[0] * p[1]).cos();
        let sides = b.sides().unwrap().to_vec();
        let nested = integrate_nested(f, 2, |p| Some(sides[p.len()]), 12);
        assert!((nested - integrate(f, &b, 12).value).abs() < 1e-14);
        assert_eq!(integrate_nested(f, 2, |_| None, 12), 0.0);
    }

    #[test]
    fn weights_sum_to_length_and_are_positive() {
        for q in [2, 3, 8, 17, 32, 64, 96] {
            let r = rule(q);
            assert!(r.weights.iter().all(|&w| w > 0.0));
            let total: f64 = r.weights.iter().sum();
            assert!((total - 2.0).abs() < 1e-13, "q={q}: {total}");
        }
    }

    #[test]
    fn linear_is_exact_at_order_two() {
        let i = integrate(|p| p[0], &unit(0.0, 1.0), 2);
        assert!((i.value - 0.5).abs() < 1e-15);
        assert!(!i.degenerate);
    }

    #[test]
    fn degenerate_boxes_are_flagged() {
        let i = integrate(|_| 1.0, &unit(1.0, 1.0), 8);
        assert_eq!(i.value, 0.0);
        assert!(i.degenerate);
        assert!(integrate(|_| 1.0, &AxisBox::empty(2), 8).degenerate);
    }

    #[test]
    fn tensor_product_of_separable_polynomials() {
        let b = AxisBox::new(vec![Interval::new(0.0, 2.0), Interval::new(-1.0, 3.0)]);
        // ∫∫ x³ y² = (2⁴/4) · (27 + 1)/3
        let exact = 4.0 * 28.0 / 3.0;
        let got = integrate(|p| p[0].powi(3) * p[1].powi(2), &b, 3).value;
        assert!((got - exact).abs() < 1e-12 * exact);
    }

    fn bump(t: f64) -> f64 {
        if t.abs() < 1.0 {
            (-1.0 / (1.0 - t * t)).exp()
        } else {
            0.0
        }
    }

    #[test]
    fn bump_integral_self_convergence() {
        let i64_ = integrate(|p| bump(p[0]), &unit(-1.0, 1.0), 64).value;
        let i96 = integrate(|p| bump(p[0]), &unit(-1.0, 1.0), 96).value;
        assert!((i64_ - i96).abs() < 1e-12, "{i64_} vs {i96}");
        assert!((i96 - BUMP_INTEGRAL).abs() < 1e-15);
        // q = 32 is still short of the reference by about 5e-9
        let i32_ = integrate(|p| bump(p[0]), &unit(-1.0, 1.0), 32).value;
        assert!((i32_ - BUMP_INTEGRAL).abs() < 1e-8);
    }

    #[test]
    fn differences_shrink_with_order() {
        let f = |p: &[f64]| bump(p[0]) * (3.0 * p[0]).cos();
        let b = unit(-1.0, 1.0);
        let diffs: Vec<f64> = [8, 16, 32, 64]
            .iter()
            .map(|&q| (integrate(f, &b, q).value - integrate(f, &b, 2 * q).value).abs())
            .collect();
        for w in diffs.windows(2) {
            assert!(w[1] <= w[0] + 1e-13, "{diffs:?}");
        }
    }

    proptest::proptest! {
        #[test]
        fn exact_on_degree_2q_minus_1(
            q in 2usize..12,
            coeffs in proptest::collection::vec(-3.0f64..3.0, 24),
            lo in -2.0f64..0.0,
            len in 0.1f64..3.0,
        ) {
            let deg = 2 * q - 1;
            let c = &coeffs[..=deg];
            let hi = lo + len;
            let poly = |t: f64| c.iter().rev().fold(0.0, |acc, &a| acc * t + a);
            let anti = |t: f64| {
                c.iter()
                    .enumerate()
                    .rev()
                    .fold(0.0, |acc, (n, &a)| acc * t + a / (n + 1) as f64)
                    * t
            };
            let exact = anti(hi) - anti(lo);
            let scale: f64 = c.iter().map(|a| a.abs()).sum::<f64>() * (hi.abs().max(lo.abs()).max(1.0)).powi(deg as i32 + 1);
            let got = integrate(|p| poly(p[0]), &unit(lo, hi), q).value;
            proptest::prop_assert!((got - exact).abs() <= 1e-12 * scale, "{got} vs {exact}");
        }
    }

    #[test]
    fn cache_returns_shared_tables() {
        assert!(Arc::ptr_eq(&rule(12), &rule(12)));
    }
}
