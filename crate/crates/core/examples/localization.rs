//! Distributions vanishing on one fibre split as Σ fᵢ·Tᵢ with fᵢ(a) = 0.
//!
//! ```bash
//! cargo run --example localization
//! ```

use transversal::bundle::{Section, TrivialBundle};
use transversal::distribution::{hadamard_factor, TransversalDistribution};
use transversal::expr::{parse, MultiIndex};

fn main() {
    let bundle = TrivialBundle::new(1, 1).unwrap();
    let base = |s: &str| parse(s, bundle.base_layout()).unwrap();

    let h = hadamard_factor(&base("x0^3 - 2*x0 + 1"), &[1.0]).unwrap();
    println!("f(1) = {}, f = f(1) + Σ (x − 1)·gᵢ with gᵢ = {:?}", h.value, h.factors.iter().map(|(_, g)| g.to_string()).collect::<Vec<_>>());

    let sigma = Section::new(bundle, vec![base("x0")], None).unwrap();
    let t = TransversalDistribution::dirac(sigma, base("x0*bump(x0)"), MultiIndex::zeros(1)).unwrap();
    let parts = t.localize_decompose(&[0.0]).unwrap();
    for (f, ti) in &parts {
        println!("factor {f}  ·  {} term(s)", ti.terms().len());
    }

    let f = parse("exp(y0)", bundle.layout()).unwrap();
    let x = [0.4];
    let whole = t.evaluate(&f).unwrap().value(&x);
    let sum: f64 = parts
        .iter()
        .map(|(fi, ti)| fi.eval(&x, &[]) * ti.evaluate(&f).unwrap().value(&x))
        .sum();
    println!("T(F)(0.4) = {whole:.16e}, Σ fᵢ·Tᵢ(F)(0.4) = {sum:.16e}");

    match t.localize_decompose(&[0.5]) {
        Ok(_) => println!("unexpected decomposition"),
        Err(e) => println!("at 0.5: {e}"),
    }
}
