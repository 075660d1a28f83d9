//! Parsing, exact differentiation and structural supports of expressions.
//!
//! ```bash
//! cargo run --example symbolic_calculus
//! ```

use transversal::expr::{parse, Layout, MultiIndex, Var};

fn main() {
    let layout = Layout::new(1, 1);
    let f = parse("bump(x0/2)*sin(y0)*exp(x0*y0)", layout).unwrap();
    println!("F            = {f}");
    println!("∂F/∂x0       = {}", f.derive(Var::X(0)));

    let alpha = MultiIndex::new(vec![2, 1]);
    let d = f.differentiate(layout, &alpha).unwrap();
    println!("D^(2,1) F    = {d}");
    println!("D^(2,1) F(0.3, -0.4) = {:.16e}", d.eval(&[0.3], &[-0.4]));

    // bump factors bound the support along the variables they mention
    println!("supp F ⊂ {}", f.support_box(layout));
    let g = parse("bump(x0 - y0)*bump(y0/3)", layout).unwrap();
    println!("supp G ⊂ {}", g.support_box(layout));

    let poly = parse("(x0 - 1)^2*(y0 + 2)", layout).unwrap();
    println!("expanded: {}", poly.to_poly().unwrap().to_expr());
}
