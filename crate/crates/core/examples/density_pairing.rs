//! Density families, the pairing F ↦ T(F) and the module actions of base
//! and total-space functions.
//!
//! ```bash
//! cargo run --example density_pairing
//! ```

use transversal::bundle::TrivialBundle;
use transversal::distribution::TransversalDistribution;
use transversal::expr::parse;

fn main() {
    let bundle = TrivialBundle::new(1, 1).unwrap();
    let total = |s: &str| parse(s, bundle.layout()).unwrap();
    let t = TransversalDistribution::density(bundle, total("bump(x0)*bump(y0 - x0/2)")).unwrap();

    let f = total("cos(y0)*exp(x0)");
    let u = TransversalDistribution::hat_pair(&f, &t).unwrap();
    for x in [-0.5, 0.0, 0.5] {
        println!("F̂(T)({x:>4}) = {:.16e}", u.value(&[x]));
    }

    let m = parse("1 + x0^2", bundle.base_layout()).unwrap();
    let mt = t.module_action_base(&m).unwrap();
    let lhs = TransversalDistribution::hat_pair(&f, &mt).unwrap().value(&[0.3]);
    let rhs = 1.09 * u.value(&[0.3]);
    println!("(m·T)(F) = {lhs:.16e}, m·T(F) = {rhs:.16e}");

    let g = total("y0^2");
    let gt = t.module_action_total(&g).unwrap();
    let a = gt.evaluate(&f).unwrap().value(&[0.3]);
    let b = t.evaluate(&total("y0^2*cos(y0)*exp(x0)")).unwrap().value(&[0.3]);
    println!("(G·T)(F) = {a:.16e}, T(G·F) = {b:.16e}");

    let r = t.restrict(&[0.25]).unwrap();
    println!("T_0.25 is a density on {}", r.densities[0].domain);
}
