//! Distributions on the pair bundle as Schwartz kernels: pullbacks along
//! graphs, smoothing kernels and their compositions.
//!
//! ```bash
//! cargo run --example kernel_operators
//! ```

use transversal::bundle::{Section, TrivialBundle};
use transversal::distribution::{BaseFunction, TransversalDistribution};
use transversal::expr::parse;
use transversal::operators::{graph_kernel, KernelOperator};

fn main() {
    let pair = TrivialBundle::new(1, 1).unwrap();
    let base = |s: &str| parse(s, pair.base_layout()).unwrap();
    // within 1e-14 of 1 on [-1, 1]
    let cutoff = base("bump(x0/10000000)*exp(1)");
    let graph = |s: &str| graph_kernel(Section::new(pair, vec![base(s)], None).unwrap(), cutoff.clone()).unwrap();

    let double = graph("2*x0");
    let shift = graph("x0 + 1");
    let g = parse("y0^2", pair.fibre_layout()).unwrap();

    // K_Φ ∘ K_Ψ pulls back along Ψ∘Φ
    let ds = double.compose(&shift).unwrap();
    let sd = shift.compose(&double).unwrap();
    let x = [0.5];
    println!("(double∘shift) g (0.5) = {:.16e}  [(2x + 1)² = 4]", ds.apply(&g).unwrap().value(&x));
    println!("(shift∘double) g (0.5) = {:.16e}  [(2x + 2)² = 9]", sd.apply(&g).unwrap().value(&x));

    let smooth = KernelOperator::new(
        TransversalDistribution::density(pair, parse("bump(x0/2)*bump(y0 - x0)", pair.layout()).unwrap()).unwrap(),
    )
    .unwrap();
    let both = smooth.compose(&smooth).unwrap();
    println!("smooth∘smooth carries {:?}", both.classes());
    let inner: BaseFunction = smooth.apply(&g).unwrap();
    for x in [-0.5, 0.0, 0.75] {
        let direct = both.apply(&g).unwrap().value(&[x]);
        let nested = smooth.apply_numeric(&inner, &[x]);
        println!("x = {x:>5}: composite {direct:.12e}, nested {nested:.12e}");
    }
}
