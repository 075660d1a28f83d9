//! Sampled C^m seminorms and membership in basic neighbourhoods of zero.
//!
//! ```bash
//! cargo run --example seminorms
//! ```

use transversal::bundle::{Section, TrivialBundle};
use transversal::distribution::{BaseFunction, TransversalDistribution};
use transversal::expr::{parse, AxisBox, MultiIndex};
use transversal::topology::{lf_membership, lfb_membership, BoundedFamily, LfProfile, Seminorm};

fn main() {
    let bundle = TrivialBundle::new(1, 1).unwrap();
    let base = |s: &str| parse(s, bundle.base_layout()).unwrap();

    let f = base("bump(x0)/10");
    for m in 0..3 {
        let s = Seminorm::new(AxisBox::cube(1, 1.0), m).unwrap().eval(&f, bundle.base_layout()).unwrap();
        println!("p_[-1,1],{m}(f) = {:.6e} at x = {:?}, α = {}", s.value, s.point, s.alpha);
    }

    let profile = LfProfile::new(vec![1, 2], vec![0.5, 0.1]).unwrap();
    let m = lf_membership(&profile, &BaseFunction::symbolic(1, f), 65).unwrap();
    println!("f/10 in V: {}", m.holds);
    let m = lf_membership(&profile, &BaseFunction::symbolic(1, base("bump(x0/2)")), 65).unwrap();
    println!("bump(x/2) in V: {} (witness {:?})", m.holds, m.witness);

    let sigma = Section::new(bundle, vec![base("x0")], None).unwrap();
    let t = TransversalDistribution::dirac(sigma, base("bump(x0)/100"), MultiIndex::zeros(1)).unwrap();
    let family = BoundedFamily::new(vec![parse("y0", bundle.fibre_layout()).unwrap()]).unwrap();
    let m = lfb_membership(&profile, &[family], &t, 33).unwrap();
    println!("⟦E, bump/100⟧ in V_B: {}", m.holds);
}
