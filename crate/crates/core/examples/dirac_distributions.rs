//! A Dirac family along the graph of a section: evaluation, restriction to
//! fibres and derivatives in the family parameter.
//!
//! ```bash
//! cargo run --example dirac_distributions
//! ```

use transversal::bundle::{Section, TrivialBundle};
use transversal::distribution::{Term, TransversalDistribution};
use transversal::expr::{parse, MultiIndex};

fn main() {
    let bundle = TrivialBundle::new(1, 1).unwrap();
    let base = |s: &str| parse(s, bundle.base_layout()).unwrap();
    let sigma = Section::new(bundle, vec![base("x0")], None).unwrap();
    let t = TransversalDistribution::dirac(sigma, base("bump(x0)"), MultiIndex::zeros(1)).unwrap();

    let f = parse("2 + x0*y0", bundle.layout()).unwrap();
    let u = t.evaluate(&f).unwrap();
    println!("T(F)      = {}", u.symbolic_part());
    println!("T(F)(0.5) = {:.16e}", u.value(&[0.5]));

    let tx = t.restrict(&[0.0]).unwrap();
    for a in &tx.atoms {
        println!("T_0 = {:.16e}·δ^{} at {:?}", a.coeff, a.beta, a.point);
    }
    let g = parse("cos(y0)", bundle.fibre_layout()).unwrap();
    println!("T_0(cos) = {:.16e}", tx.pair(&g).unwrap());

    // the chain rule through σ raises the fibre order
    let bent = Section::new(bundle, vec![base("x0 + x0^2/4")], None).unwrap();
    let s = TransversalDistribution::dirac(bent, base("bump(x0)"), MultiIndex::zeros(1)).unwrap();
    let ds = s.family_derivative(&MultiIndex::new(vec![1])).unwrap();
    println!("D(⟦σ, bump⟧) has {} terms:", ds.terms().len());
    for term in ds.terms() {
        if let Term::Dirac(d) = term {
            println!("  weight {}, fibre derivative {}", d.weight(), d.beta());
        }
    }
    println!("supp T = {}, base support {}", t.total_support(), t.base_support());
}
