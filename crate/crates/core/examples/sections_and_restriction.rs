//! Trivial bundles, sections and restriction of total-space functions to
//! fibres.
//!
//! ```bash
//! cargo run --example sections_and_restriction
//! ```

use transversal::bundle::{Section, TrivialBundle};
use transversal::expr::parse;

fn main() {
    let bundle = TrivialBundle::new(2, 1).unwrap();
    let f = parse("x0*y0^2 + sin(x1)", bundle.layout()).unwrap();

    let fibre = bundle.restrict_function(&f, &[0.5, 0.0]).unwrap();
    println!("F restricted to the fibre over (0.5, 0): {fibre}");

    let g = parse("cos(y0)", bundle.fibre_layout()).unwrap();
    println!("cos(y0) extended to the total space: {}", bundle.extend_function(&g).unwrap());

    let sigma = Section::new(bundle, vec![parse("x0 - x1^2", bundle.base_layout()).unwrap()], None).unwrap();
    println!("σ(1, 2) = {:?}", sigma.eval(&[1.0, 2.0]));
    println!("F∘σ     = {}", sigma.pull_back(&f));
}
