use std::str::FromStr;

use serde_json::{json, Map, Number, Value};

use crate::distribution::{PointDistribution, Term, TransversalDistribution};
use crate::expr::{AxisBox, MultiIndex};
use crate::verify::{CaseResult, CheckReport};

/// 17 significant digits; non-finite values become strings.
pub fn num(v: f64) -> Value {
    if !v.is_finite() {
        return Value::String(v.to_string());
    }
    Value::Number(Number::from_str(&format!("{v:.16e}")).expect("formatted float is valid JSON"))
}

pub fn point(p: &[f64]) -> Value {
    Value::Array(p.iter().map(|&v| num(v)).collect())
}

pub fn index(a: &MultiIndex) -> Value {
    json!(a.entries())
}

pub fn axis_box(b: &AxisBox) -> Value {
    match b.sides() {
        None => Value::String("empty".into()),
        Some(sides) => Value::Array(sides.iter().map(|s| json!([num(s.lo), num(s.hi)])).collect()),
    }
}

/// Terms in scene syntax, so the output loads back as a distribution.
pub fn distribution(t: &TransversalDistribution) -> Value {
    let terms = t
        .terms()
        .iter()
        .map(|term| match term {
            Term::Dirac(d) => {
                let comps: Vec<String> = d.section().components().iter().map(|c| c.to_string()).collect();
                let section = match d.section().domain() {
                    Some(dom) => json!({"components": comps, "domain": axis_box(dom)}),
                    None => json!(comps),
                };
                json!({
                    "type": "dirac_section",
                    "section": section,
                    "weight": d.weight().to_string(),
                    "beta": index(d.beta()),
                })
            }
            Term::Density(p) => json!({
                "type": "density",
                "phi": p.phi().to_string(),
                "hidden": p.hidden(),
                "support": axis_box(p.support()),
            }),
        })
        .collect();
    Value::Array(terms)
}

pub fn point_distribution(p: &PointDistribution) -> Value {
    let atoms: Vec<Value> = p
        .atoms
        .iter()
        .map(|a| json!({"point": point(&a.point), "beta": index(&a.beta), "coeff": num(a.coeff)}))
        .collect();
    let densities: Vec<Value> = p
        .densities
        .iter()
        .map(|d| json!({"density": d.density.to_string(), "hidden": d.hidden, "domain": axis_box(&d.domain)}))
        .collect();
    json!({"atoms": atoms, "densities": densities})
}

fn case(c: &CaseResult) -> Value {
    let mut m = Map::new();
    m.insert("id".into(), json!(c.id));
    m.insert("pass".into(), json!(c.pass));
    m.insert("max_error".into(), num(c.max_error));
    m.insert("tolerance".into(), num(c.tolerance));
    if let Some(s) = &c.skipped {
        m.insert("skipped".into(), json!(s));
    }
    if let Some(w) = &c.witness {
        m.insert(
            "witness".into(),
            json!({"point": point(&w.point), "multi_index": w.multi_index, "note": w.note}),
        );
    }
    Value::Object(m)
}

/// Timings are left out so reports are byte-identical across runs.
pub fn report(r: &CheckReport) -> Value {
    json!({
        "suite": r.suite,
        "pass": r.passed(),
        "max_error": num(r.max_error()),
        "cases": r.cases.iter().map(case).collect::<Vec<_>>(),
    })
}

pub fn report_table(r: &CheckReport, out: &mut String) {
    use std::fmt::Write;
    let status = if r.passed() { "PASS" } else { "FAIL" };
    let _ = writeln!(out, "{} ({} cases): {status}", r.suite, r.cases.len());
    for c in &r.cases {
        let mark = match (&c.skipped, c.pass) {
            (Some(_), _) => "skip",
            (None, true) => "ok",
            (None, false) => "FAIL",
        };
        let _ = write!(out, "  {mark:<4} {:<48} {:.3e} / {:.1e}", c.id, c.max_error, c.tolerance);
        if let Some(reason) = &c.skipped {
            let _ = write!(out, "  ({reason})");
        }
        if let (false, Some(w)) = (c.pass, &c.witness) {
            let _ = write!(out, "  at {:?} α={:?} {}", w.point, w.multi_index, w.note);
        }
        let _ = writeln!(out);
    }
}

/// Two-column `path  value` rendering of a JSON tree.
pub fn table(v: &Value) -> String {
    let mut rows = Vec::new();
    flatten(v, String::new(), &mut rows);
    let width = rows.iter().map(|(k, _)| k.chars().count()).max().unwrap_or(0);
    let mut out = String::new();
    for (k, val) in rows {
        let pad = width - k.chars().count();
        out.push_str(&k);
        out.push_str(&" ".repeat(pad + 2));
        out.push_str(&val);
        out.push('\n');
    }
    out
}

fn flatten(v: &Value, prefix: String, rows: &mut Vec<(String, String)>) {
    match v {
        Value::Object(m) => {
            for (k, c) in m {
                let p = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                flatten(c, p, rows);
            }
        }
        Value::Array(a) if a.iter().any(|c| c.is_object() || c.is_array()) => {
            for (i, c) in a.iter().enumerate() {
                flatten(c, format!("{prefix}[{i}]"), rows);
            }
        }
        Value::Array(a) => {
            let items: Vec<String> = a.iter().map(scalar).collect();
            rows.push((prefix, format!("[{}]", items.join(", "))));
        }
        _ => rows.push((prefix, scalar(v))),
    }
}

fn scalar(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_keep_seventeen_digits_and_round_trip() {
        for v in [0.1, -1.0 / 3.0, 1e-300, 6.02214076e23, 0.0, f64::MIN_POSITIVE] {
            let text = serde_json::to_string(&num(v)).unwrap();
            let digits = text.split('e').next().unwrap().chars().filter(|c| c.is_ascii_digit()).count();
            assert_eq!(digits, 17, "{text}");
            let back: Value = serde_json::from_str(&text).unwrap();
            assert_eq!(back.as_f64().unwrap().to_bits(), v.to_bits());
        }
        assert_eq!(num(f64::NAN), Value::String("NaN".into()));
    }

    #[test]
    fn tables_flatten_nested_values() {
        let t = table(&json!({"a": {"b": [1, 2]}, "c": [{"d": "x"}]}));
        assert_eq!(t, "a.b     [1, 2]\nc[0].d  x\n");
    }
}
