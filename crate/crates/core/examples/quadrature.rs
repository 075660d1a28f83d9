//! Gauss–Legendre rules: the bump integral, polynomial exactness and
//! iterated integration over variable ranges.
//!
//! ```bash
//! cargo run --example quadrature
//! ```

use transversal::expr::{AxisBox, Interval};
use transversal::quadrature::{integrate, integrate_nested, BUMP_INTEGRAL};

fn bump(t: f64) -> f64 {
    if t.abs() < 1.0 {
        (-1.0 / (1.0 - t * t)).exp()
    } else {
        0.0
    }
}

fn main() {
    let line = AxisBox::cube(1, 1.0);
    for q in [16, 32, 64, 96] {
        let v = integrate(|p| bump(p[0]), &line, q).value;
        println!("q = {q:>2}: ∫bump = {v:.16e}  (Δ = {:.1e})", v - BUMP_INTEGRAL);
    }

    // degree 2q − 1 is integrated exactly
    let q = 8;
    let v = integrate(|p| p[0].powi(14) + p[1].powi(15), &AxisBox::cube(2, 1.0), q).value;
    println!("∫∫ x¹⁴ + y¹⁵ over [-1,1]² = {v:.16e}, exact {:.16e}", 4.0 / 15.0);

    // area of the triangle 0 ≤ y ≤ x ≤ 1
    let area = integrate_nested(
        |_| 1.0,
        2,
        |prefix| match prefix {
            [] => Some(Interval::new(0.0, 1.0)),
            [x] => Some(Interval::new(0.0, *x)),
            _ => None,
        },
        16,
    );
    println!("triangle area = {area}");
}
