use std::io::Write;
use std::path::PathBuf;

use serde_json::Value;

use super::*;
use crate::distribution::TransversalDistribution;
use crate::expr::parse;

fn scene_path(name: &str) -> String {
    let p: PathBuf = [env!("CARGO_MANIFEST_DIR"), "scenes", name].iter().collect();
    p.display().to_string()
}

fn cli(args: &[&str]) -> Outcome {
    run(std::iter::once("transversal").chain(args.iter().copied()))
}

fn json_of(o: &Outcome) -> Value {
    assert_eq!(o.code, EXIT_OK, "{}", o.stderr);
    serde_json::from_str(&o.stdout).unwrap()
}

fn temp_scene(text: &str) -> tempfile::NamedTempFile {
    let mut f = tempfile::NamedTempFile::new().unwrap();
    f.write_all(text.as_bytes()).unwrap();
    f
}

fn code_for(text: &str) -> i32 {
    match parse_scene(text, "inline") {
        Ok(_) => EXIT_OK,
        Err(e) => CliError::from(e).exit_code(),
    }
}

const LINE: &str = r#""bundle": {"base_dim": 1, "fibre_dim": 1}"#;

#[test]
fn minimal_scene_is_empty() {
    let s = parse_scene(&format!("{{{LINE}}}"), "inline").unwrap();
    assert_eq!((s.bundle.base_dim, s.bundle.fibre_dim), (1, 1));
    assert!(s.functions.is_empty() && s.distributions.is_empty() && s.operators.is_empty());
}

#[test]
fn scene_errors_have_distinct_codes() {
    let undefined = format!(
        r#"{{{LINE}, "distributions": {{"T": [{{"type": "dirac_section", "section": "E", "weight": "bump(x0)"}}]}}}}"#
    );
    assert_eq!(code_for(&undefined), EXIT_UNRESOLVED);
    let op = format!(r#"{{{LINE}, "operators": {{"K": "nowhere"}}}}"#);
    assert_eq!(code_for(&op), EXIT_UNRESOLVED);

    assert_eq!(code_for(r#"{"bundle": {"base_dim": 1,"#), EXIT_PARSE);
    assert_eq!(code_for(&format!(r#"{{{LINE}, "functions": {{"F": "2 +* y0"}}}}"#)), EXIT_PARSE);
    assert_eq!(code_for(&format!(r#"{{{LINE}, "extra": 1}}"#)), EXIT_PARSE);
    assert_eq!(
        code_for(&format!(r#"{{{LINE}, "functions": {{"E": "y0"}}, "sections": {{"E": ["x0"]}}}}"#)),
        EXIT_PARSE
    );

    assert_eq!(code_for(&format!(r#"{{{LINE}, "functions": {{"F": "y1"}}}}"#)), EXIT_DIMENSION);
    assert_eq!(code_for(&format!(r#"{{{LINE}, "sections": {{"E": ["x0", "x0"]}}}}"#)), EXIT_DIMENSION);
    let pair_only = r#"{"bundle": {"base_dim": 2, "fibre_dim": 1},
        "operators": {"K": [{"type": "density", "phi": "bump(x0)*bump(x1)*bump(y0)"}]}}"#;
    assert_eq!(code_for(pair_only), EXIT_DIMENSION);
}

#[test]
fn parse_errors_name_the_location() {
    let e = parse_scene(&format!(r#"{{{LINE}, "functions": {{"F": "2 +* y0"}}}}"#), "s.json").unwrap_err();
    let msg = e.to_string();
    assert!(msg.contains("$.functions.F") && msg.contains("offset 3"), "{msg}");
    let e = parse_scene("{\n  \"bundle\": [\n", "s.json").unwrap_err();
    assert!(matches!(e, SceneError::Json { line: 3, .. }), "{e}");
}

#[test]
fn exit_codes_from_the_command_line() {
    let demo = scene_path("dirac_demo.json");
    assert_eq!(cli(&[&demo, "frobnicate"]).code, EXIT_USAGE);
    assert_eq!(cli(&[&demo]).code, EXIT_USAGE);
    assert_eq!(cli(&[&demo, "eval", "T", "F", "--at", "x"]).code, EXIT_USAGE);
    assert_eq!(cli(&[&demo, "check", "--suite", "everything"]).code, EXIT_USAGE);
    assert_eq!(cli(&[&demo, "eval", "Nope", "F", "--at", "0"]).code, EXIT_UNRESOLVED);
    assert_eq!(cli(&[&demo, "eval", "T", "F", "--at", "0,1"]).code, EXIT_DIMENSION);
    assert_eq!(cli(&[&demo, "derive", "T", "--alpha", "1,1"]).code, EXIT_DIMENSION);
    assert_eq!(cli(&["/nonexistent/scene.json", "support", "T"]).code, EXIT_INTERNAL);
    assert_eq!(cli(&["--help"]).code, EXIT_OK);

    let bad = temp_scene(&format!(r#"{{{LINE}, "functions": {{"F": "exp("}}}}"#));
    let o = cli(&[bad.path().to_str().unwrap(), "support", "T"]);
    assert_eq!(o.code, EXIT_PARSE);
    assert!(o.stderr.contains("$.functions.F"));
}

#[test]
fn eval_reproduces_the_dirac_example() {
    let v = json_of(&cli(&[&scene_path("dirac_demo.json"), "eval", "T", "F", "--at", "0.5"]));
    let got = v["values"][0]["value"].as_f64().unwrap();
    // bump(1/2)·(2 + (1/2)²)
    let expected = (-1.0f64 / 0.75).exp() * 2.25;
    assert!((got - expected).abs() < 1e-15, "{got} vs {expected}");
    assert_eq!(v["values"][0]["x"][0].as_f64(), Some(0.5));
}

#[test]
fn negative_points_are_accepted() {
    let v = json_of(&cli(&[&scene_path("dirac_demo.json"), "eval", "T", "F", "--at", "-0.5"]));
    // F(x, x) = 2 + x²
    let expected = (-1.0f64 / 0.75).exp() * 2.25;
    assert!((v["values"][0]["value"].as_f64().unwrap() - expected).abs() < 1e-15);
}

#[test]
fn restrict_lists_the_atom() {
    let v = json_of(&cli(&[&scene_path("dirac_demo.json"), "restrict", "T", "--at", "0.0"]));
    let r = &v["restrictions"][0];
    assert_eq!(r["atoms"].as_array().unwrap().len(), 1);
    assert!(r["densities"].as_array().unwrap().is_empty());
    let atom = &r["atoms"][0];
    assert_eq!(atom["point"][0].as_f64(), Some(0.0));
    assert_eq!(atom["beta"], serde_json::json!([0]));
    assert_eq!(atom["coeff"].as_f64(), Some((-1.0f64).exp()));
}

/// Loads a serialized term list back into a scene over `bundle`.
fn reload(bundle: &str, terms: &Value) -> TransversalDistribution {
    let text = format!(r#"{{"bundle": {bundle}, "distributions": {{"R": {terms}}}}}"#);
    parse_scene(&text, "round-trip").unwrap().distribution("R").unwrap().clone()
}

fn assert_same(a: &TransversalDistribution, b: &TransversalDistribution) {
    use crate::distribution::Term;
    assert_eq!(a.terms().len(), b.terms().len());
    for (s, t) in a.terms().iter().zip(b.terms()) {
        match (s, t) {
            (Term::Dirac(p), Term::Dirac(q)) => {
                assert!(p.weight().same_tree(q.weight()), "{} vs {}", p.weight(), q.weight());
                assert_eq!(p.beta(), q.beta());
                for (c, d) in p.section().components().iter().zip(q.section().components()) {
                    assert!(c.same_tree(d), "{c} vs {d}");
                }
            }
            (Term::Density(p), Term::Density(q)) => {
                assert!(p.phi().same_tree(q.phi()));
                assert_eq!(p.hidden(), q.hidden());
                // reloading may tighten the box to the structural support
                assert!(p.support().is_subset_of(q.support()) || q.support().is_subset_of(p.support()));
            }
            _ => panic!("term kinds differ"),
        }
    }
}

#[test]
fn derived_and_acted_distributions_round_trip() {
    let demo = scene_path("dirac_demo.json");
    let scene = load_scene(std::path::Path::new(&demo)).unwrap();
    let line = r#"{"base_dim": 1, "fibre_dim": 1}"#;
    for name in ["T", "D", "D2", "L"] {
        let v = json_of(&cli(&[&demo, "derive", name, "--alpha", "2"]));
        let expected = scene.distribution(name).unwrap().family_derivative(&MultiIndex::new(vec![2])).unwrap();
        assert_same(&reload(line, &v["result"]), &expected);

        let v = json_of(&cli(&[&demo, "action", name, "--base", "f"]));
        let f = scene.function("f").unwrap();
        let expected = scene.distribution(name).unwrap().module_action_base(f).unwrap();
        assert_same(&reload(line, &v["result"]), &expected);

        let v = json_of(&cli(&[&demo, "action", name, "--total", "Q"]));
        let expected = scene.distribution(name).unwrap().module_action_total(scene.function("Q").unwrap()).unwrap();
        assert_same(&reload(line, &v["result"]), &expected);
    }
}

#[test]
fn composite_kernels_round_trip_with_hidden_blocks() {
    let demo = scene_path("operator_demo.json");
    let scene = load_scene(std::path::Path::new(&demo)).unwrap();
    let v = json_of(&cli(&[&demo, "compose", "S", "S", "--at", "0.25"]));
    let back = reload(r#"{"base_dim": 1, "fibre_dim": 1}"#, &v["composite"]);
    let direct = scene.operator("S").unwrap().compose(scene.operator("S").unwrap()).unwrap();
    assert_same(&back, direct.distribution());
    let f = parse("cos(y0)*exp(x0)", scene.bundle.layout()).unwrap();
    let (a, b) = (back.evaluate(&f).unwrap(), direct.distribution().evaluate(&f).unwrap());
    for x in [-1.5, -0.25, 0.0, 0.7] {
        assert!((a.value(&[x]) - b.value(&[x])).abs() < 1e-12);
    }
}

#[test]
fn support_boxes_round_trip() {
    let v = json_of(&cli(&[&scene_path("density_demo.json"), "support", "rho"]));
    // bump(x0/2)·bump(x1/2)·bump(y0 − x0/2)
    let expected = [[-2.0, 2.0], [-2.0, 2.0], [-2.0, 2.0]];
    for (side, e) in v["total"].as_array().unwrap().iter().zip(expected) {
        let (lo, hi) = (side[0].as_f64().unwrap(), side[1].as_f64().unwrap());
        // enclosures round outwards
        assert!(lo <= e[0] && hi >= e[1] && e[0] - lo < 1e-12 && hi - e[1] < 1e-12, "{side}");
    }
    assert_eq!(v["base"].as_array().unwrap().len(), 2);
}

#[test]
fn compose_routes_agree() {
    let v = json_of(&cli(&[&scene_path("operator_demo.json"), "compose", "Pd", "S"]));
    let evals = v["evaluations"].as_array().unwrap();
    assert_eq!(evals.len(), 5 * GRID_POINTS);
    for e in evals {
        let a = e["composite"].as_f64().unwrap();
        let b = e["sequential"].as_f64().unwrap();
        assert!((a - b).abs() < 1e-8, "{e}");
    }
}

#[test]
fn apply_pulls_back_along_the_graph() {
    let v = json_of(&cli(&[&scene_path("operator_demo.json"), "apply", "Ps", "g", "--at", "0.5"]));
    // g(x + 1) times a cutoff within 1e-14 of 1
    assert!((v["values"][0]["value"].as_f64().unwrap() - 2.25).abs() < 1e-12);
    let o = cli(&[&scene_path("dirac_demo.json"), "apply", "T", "F", "--at", "0"]);
    assert_eq!(o.code, EXIT_UNRESOLVED);
}

#[test]
fn seminorm_and_member() {
    let demo = scene_path("dirac_demo.json");
    let v = json_of(&cli(&[&demo, "seminorm", "F", "--box", "-1:1,-1:1", "--order", "0"]));
    assert_eq!(v["value"].as_f64(), Some(3.0));
    let v = json_of(&cli(&[&demo, "seminorm", "f", "--box", "-1:1", "--order", "1"]));
    assert!((v["value"].as_f64().unwrap() - 1.0).abs() < 1e-15);
    assert_eq!(cli(&[&demo, "seminorm", "F", "--box", "-1:1", "--order", "0"]).code, EXIT_DIMENSION);

    // |f| ≤ 1 everywhere but cos has no compact support
    assert_eq!(cli(&[&demo, "member", "P", "f"]).code, EXIT_INTERNAL);
    let v = json_of(&cli(&[&demo, "member", "P", "T"]));
    assert_eq!(v["holds"], Value::Bool(true));
    assert!(v["witness"].is_null());
}

#[test]
fn check_passes_and_is_deterministic() {
    let demo = scene_path("dirac_demo.json");
    let a = cli(&[&demo, "check", "--suite", "restriction,support"]);
    let b = cli(&[&demo, "check", "--suite", "restriction,support"]);
    assert_eq!(a.code, EXIT_OK, "{}", a.stdout);
    assert_eq!(a, b);
    let v: Value = serde_json::from_str(&a.stdout).unwrap();
    assert_eq!(v["pass"], Value::Bool(true));
    assert_eq!(v["suites"].as_array().unwrap().len(), 2);

    let t = cli(&[&demo, "check", "--suite", "support", "--format", "table"]);
    assert!(t.stdout.starts_with("support ("), "{}", t.stdout);
    assert!(t.stdout.ends_with("all suites passed\n"));
}

#[test]
fn tables_are_flat() {
    let o = cli(&[&scene_path("dirac_demo.json"), "--format", "table", "support", "T"]);
    assert_eq!(o.code, EXIT_OK);
    assert!(o.stdout.lines().any(|l| l.starts_with("distribution") && l.ends_with("T")));
}

#[test]
fn inline_sections_and_domains_load() {
    let text = format!(
        r#"{{{LINE}, "distributions": {{"T": [{{"type": "dirac_section",
            "section": {{"components": ["x0"], "domain": [[-2, 2]]}}, "weight": "bump(x0)", "beta": [1]}}]}}}}"#
    );
    let s = parse_scene(&text, "inline").unwrap();
    let t = s.distribution("T").unwrap();
    let f = parse("x0*y0^2", s.bundle.layout()).unwrap();
    // bump(x)·D_y(x·y²) at y = x is 2x²·bump(x)
    let v = t.evaluate(&f).unwrap().value(&[0.5]);
    assert!((v - 0.5 * (-1.0f64 / 0.75).exp()).abs() < 1e-15);
}
