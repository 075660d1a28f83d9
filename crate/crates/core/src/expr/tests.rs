use proptest::prelude::*;

use super::*;

const L11: Layout = Layout::new(1, 1);

fn p(text: &str) -> Expr {
    parse(text, L11).unwrap()
}

/// Richardson-extrapolated central difference, independent of the
/// symbolic route.
fn richardson(f: impl Fn(f64) -> f64, t: f64, h: f64) -> f64 {
    let d = |h: f64| (f(t + h) - f(t - h)) / (2.0 * h);
    (4.0 * d(h / 2.0) - d(h)) / 3.0
}

#[test]
fn parses_product_node() {
    let e = p("x0^2 * y0");
    assert!(matches!(e.node(), Node::Mul(..)));
    assert_eq!(e.eval(&[3.0], &[2.0]), 18.0);
}

#[test]
fn parses_bump_primitive() {
    let e = p("bump(x0)");
    assert!(matches!(e.node(), Node::Bump { order: 0, .. }));
}

#[test]
fn incomplete_sum_reports_offset() {
    let err = parse("x0 +", L11).unwrap_err();
    assert_eq!(err.offset(), 4);
    assert!(matches!(err, ParseError::Syntax { .. }));
}

#[test]
fn parse_errors() {
    assert!(matches!(
        parse("foo(x0)", L11),
        Err(ParseError::UnknownIdentifier { offset: 0, .. })
    ));
    assert!(matches!(
        parse("x0 + y3", L11),
        Err(ParseError::VarOutOfRange { offset: 5, .. })
    ));
    assert!(matches!(parse("x0 / y0", L11), Err(ParseError::Invalid { .. })));
    assert!(matches!(parse("1 / 0", L11), Err(ParseError::Invalid { .. })));
    assert!(parse("x0 / (1 + y0^2)", L11).is_ok());
    assert!(parse("x0 / exp(y0)", L11).is_ok());
    assert!(parse("x0 / (2 + sin(y0))", L11).is_ok());
}

#[test]
fn decimals_are_exact() {
    let e = p("0.1 + 0.2");
    assert_eq!(e.to_string(), "3/10");
    assert_eq!(p("2.5e-1").to_string(), "1/4");
    assert_eq!(p("1e3").to_string(), "1000");
}

#[test]
fn mixed_partial_of_polynomial() {
    let e = p("x0^2 * y0");
    let d = e.differentiate(L11, &MultiIndex::new(vec![1, 1])).unwrap();
    for x in [-1.5, 0.0, 0.7, 2.0] {
        assert_eq!(d.eval(&[x], &[0.3]), 2.0 * x);
    }
}

#[test]
fn zero_order_derivative_is_identity() {
    let e = p("sin(x0) * bump(y0)");
    let d = e.differentiate(L11, &MultiIndex::zeros(2)).unwrap();
    assert!(d.ptr_eq(&e));
}

#[test]
fn bump_values() {
    let b = p("bump(x0)");
    assert_eq!(b.eval(&[0.0], &[]), (-1.0f64).exp());
    assert_eq!(b.eval(&[1.0], &[]), 0.0);
    assert_eq!(b.eval(&[-1.0], &[]), 0.0);
    let oracle = (-4.0f64 / 3.0).exp();
    assert!((b.eval(&[0.5], &[]) - oracle).abs() < 1e-15);
}

#[test]
fn bump_derivative_against_finite_differences() {
    let b = p("bump(x0)");
    let d = b.derive(Var::X(0));
    assert_eq!(d.eval(&[0.0], &[]), 0.0);
    let fd = richardson(|t| b.eval(&[t], &[]), 0.5, 1e-4);
    let exact = d.eval(&[0.5], &[]);
    assert!(((exact - fd) / fd).abs() < 1e-6, "{exact} vs {fd}");
}

#[test]
fn substitution_examples() {
    let e = p("x0 * y0");
    let mut map = BTreeMap::new();
    map.insert(Var::Y(0), Expr::x(0));
    let s = e.substitute(&map);
    assert_eq!(s.free_vars(), vec![Var::X(0)]);
    for x in [-2.0, 0.5, 3.0] {
        assert_eq!(s.eval(&[x], &[]), x * x);
    }

    let b = p("bump(y0)");
    map.insert(Var::Y(0), p("x0 + 1"));
    assert_eq!(b.substitute(&map).eval(&[0.0], &[]), 0.0);
}

#[test]
fn chain_rule_through_substitution() {
    let b = p("bump(y0)");
    let mut map = BTreeMap::new();
    map.insert(Var::Y(0), p("x0^2"));
    let composed = b.substitute(&map);
    let d = composed.derive(Var::X(0));
    let fd = richardson(|t| composed.eval(&[t], &[]), 0.6, 1e-4);
    let exact = d.eval(&[0.6], &[]);
    assert!(((exact - fd) / fd).abs() < 1e-6, "{exact} vs {fd}");
}

#[test]
fn support_box_examples() {
    let l = Layout::base_only(1);
    let b = parse("bump(x0)", l).unwrap().support_box(l);
    assert_eq!(b.side(0), Some(Interval::new(-1.0, 1.0)));
    let b = parse("bump(2*x0)", l).unwrap().support_box(l);
    assert_eq!(b.side(0), Some(Interval::new(-0.5, 0.5)));
    let b = parse("x0^2", l).unwrap().support_box(l);
    assert!(!b.is_bounded());
    assert!(parse("0*x0", l).unwrap().support_box(l).is_empty());
}

#[test]
fn support_propagates_through_coupled_bumps() {
    let e = p("bump(x0 - y0) * bump(x0)");
    let b = e.support_box(L11);
    assert!(b.is_bounded());
    let y = b.side(1).unwrap();
    assert!(y.lo <= -2.0 && y.lo > -2.0 - 1e-9 && y.hi >= 2.0 && y.hi < 2.0 + 1e-9);
}

#[test]
fn sums_take_the_hull() {
    let l = Layout::base_only(1);
    let e = parse("bump(2*x0 - 1) + bump(2*x0 - 5)", l).unwrap();
    let s = e.support_box(l).side(0).unwrap();
    assert!((s.lo - 0.0).abs() < 1e-12 && (s.hi - 3.0).abs() < 1e-12);
    let e = parse("bump(x0) + x0", l).unwrap();
    assert!(!e.support_box(l).is_bounded());
}

#[test]
fn bump_derivatives_vanish_and_are_continuous_at_the_boundary() {
    let b = p("bump(x0)");
    let mut d = b.clone();
    for order in 0..=6 {
        for t in [1.0, -1.0, 1.5, -7.0] {
            assert_eq!(d.eval(&[t], &[]), 0.0, "order {order} at {t}");
        }
        for eps in [1e-3, 1e-4, 1e-6] {
            for edge in [1.0, -1.0] {
                let inside = d.eval(&[edge * (1.0 - eps)], &[]);
                let outside = d.eval(&[edge * (1.0 + eps)], &[]);
                assert!((inside - outside).abs() < 1e-8, "order {order}: {inside}");
            }
        }
        d = d.derive(Var::X(0));
    }
}

#[test]
fn finite_differences_converge_at_second_order() {
    let cases = [
        ("bump(x0) * (2 + x0*y0)", [0.3, 0.4]),
        ("sin(x0*y0) + exp(y0/2)", [0.7, -1.1]),
        ("bump(x0 - y0) * x0^3", [0.2, -0.1]),
        ("cos(x0)^2 * bump(y0/2)", [-0.4, 0.9]),
    ];
    for (text, pt) in cases {
        let e = p(text);
        for (axis, v) in [(0usize, Var::X(0)), (1, Var::Y(0))] {
            let d = e.derive(v);
            let exact = d.eval(&pt[..1], &pt[1..]);
            let err = |h: f64| {
                let mut a = pt;
                let mut b = pt;
                a[axis] += h;
                b[axis] -= h;
                ((e.eval(&a[..1], &a[1..]) - e.eval(&b[..1], &b[1..])) / (2.0 * h) - exact).abs()
            };
            let (e1, e2) = (err(1e-2), err(5e-3));
            if e1 > 1e-11 {
                let order = (e1 / e2).log2();
                assert!(order >= 1.9, "{text} axis {axis}: order {order}");
            }
        }
    }
}

#[test]
fn layout_checked_evaluation() {
    let e = p("x0 + y0");
    assert_eq!(e.evaluate(L11, &[1.0, 2.0]), Ok(3.0));
    assert!(matches!(
        e.evaluate(L11, &[1.0]),
        Err(ExprError::DimensionMismatch { .. })
    ));
    assert!(matches!(
        e.evaluate(Layout::base_only(1), &[1.0]),
        Err(ExprError::VarOutOfRange { .. })
    ));
}

#[test]
fn interval_enclosure_is_sound() {
    let e = p("x0^2 - 2*x0*y0 + sin(y0)");
    let xs = [Interval::new(-1.0, 0.5)];
    let ys = [Interval::new(0.0, 2.0)];
    let r = e.enclose(&xs, &ys, Interval::whole());
    for i in 0..=20 {
        for j in 0..=20 {
            let x = -1.0 + 1.5 * i as f64 / 20.0;
            let y = 2.0 * j as f64 / 20.0;
            assert!(r.contains(e.eval(&[x], &[y])));
        }
    }
}

fn arb_expr() -> impl Strategy<Value = Expr> {
    let leaf = prop_oneof![
        Just(Expr::x(0)),
        Just(Expr::y(0)),
        (-3i64..=3).prop_map(Expr::int),
    ];
    leaf.prop_recursive(4, 24, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| a + b),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| a - b),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| a * b),
            (inner.clone(), 2u32..4).prop_map(|(a, n)| Expr::pow(&a, n)),
            inner.clone().prop_map(|a| Expr::sin(&a)),
            inner.clone().prop_map(|a| Expr::cos(&a)),
            inner.clone().prop_map(|a| Expr::exp(&Expr::sin(&a))),
            inner.clone().prop_map(|a| Expr::bump(&(&a * &Expr::rational(
                BigRational::new(1.into(), 2.into())
            )))),
            inner.prop_map(|a| Expr::div(&a, &(Expr::int(2) + Expr::pow(&Expr::y(0), 2))).unwrap()),
        ]
    })
}

fn grid17() -> Vec<[f64; 2]> {
    let pts: Vec<f64> = (0..17).map(|i| -2.0 + 4.0 * i as f64 / 16.0).collect();
    pts.iter()
        .flat_map(|&a| pts.iter().map(move |&b| [a, b]))
        .collect()
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn derivatives_compose(e in arb_expr(), a in 0u32..3, b in 0u32..3, c in 0u32..2, d in 0u32..2) {
        let alpha = MultiIndex::new(vec![a, c]);
        let beta = MultiIndex::new(vec![b, d]);
        let stepwise = e.differentiate(L11, &alpha).unwrap().differentiate(L11, &beta).unwrap();
        let direct = e.differentiate(L11, &(&alpha + &beta)).unwrap();
        for [x, y] in grid17() {
            let (u, v) = (stepwise.eval(&[x], &[y]), direct.eval(&[x], &[y]));
            prop_assert!(close(u, v, 1e-10), "{u} vs {v} at ({x},{y})");
        }
    }

    #[test]
    fn print_parse_round_trip(e in arb_expr()) {
        let text = e.to_string();
        let back = parse(&text, L11).unwrap();
        prop_assert!(back.same_tree(&e), "{text} -> {back}");
    }

    #[test]
    fn support_box_is_sound(
        shift in -2.0f64..2.0,
        scale in 0.5f64..3.0,
        pts in prop::collection::vec((-10.0f64..10.0, -10.0f64..10.0), 64),
    ) {
        let e = Expr::bump(&(Expr::float(scale) * Expr::x(0) - Expr::float(shift)))
            * Expr::bump(&(Expr::x(0) - Expr::y(0)))
            * (Expr::int(3) + Expr::sin(&Expr::y(0)));
        let b = e.support_box(L11);
        prop_assert!(b.is_bounded());
        for (x, y) in pts {
            if !b.contains(&[x, y]) {
                prop_assert_eq!(e.eval(&[x], &[y]), 0.0);
            }
        }
    }
}
