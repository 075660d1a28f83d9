//! Closed form of the bump and its derivatives.
//!
//! With `s = 1 - t²`, every derivative has the shape
//! `bump⁽ⁿ⁾(t) = Pₙ(t) · exp(-1/s) / s²ⁿ` on `|t| < 1`, where the integer
//! polynomials obey
//! `Pₙ₊₁ = Pₙ'·s² + Pₙ·(4n·t·s - 2t)`, `P₀ = 1`.

use std::sync::{OnceLock, RwLock};

fn table() -> &'static RwLock<Vec<Vec<f64>>> {
    static TABLE: OnceLock<RwLock<Vec<Vec<f64>>>> = OnceLock::new();
    TABLE.get_or_init(|| RwLock::new(vec![vec![1.0]]))
}

fn next(p: &[f64], n: usize) -> Vec<f64> {
    let n = n as f64;
    // s = 1 - t², s² = 1 - 2t² + t⁴
    let mut out = vec![0.0; p.len() + 3];
    for (i, &c) in p.iter().enumerate().skip(1) {
        let d = c * i as f64;
        out[i - 1] += d;
        out[i + 1] -= 2.0 * d;
        out[i + 3] += d;
    }
    // 4n·t·s - 2t = (4n - 2)·t - 4n·t³
    for (i, &c) in p.iter().enumerate() {
        out[i + 1] += c * (4.0 * n - 2.0);
        out[i + 3] -= c * 4.0 * n;
    }
    while out.len() > 1 && *out.last().unwrap() == 0.0 {
        out.pop();
    }
    out
}

/// Coefficients of `Pₙ`, lowest degree first.
pub(crate) fn polynomial(order: u32) -> Vec<f64> {
    let order = order as usize;
    {
        let guard = table().read().expect("bump table poisoned");
        if let Some(p) = guard.get(order) {
            return p.clone();
        }
    }
    let mut guard = table().write().expect("bump table poisoned");
    while guard.len() <= order {
        let n = guard.len() - 1;
        let p = next(&guard[n], n);
        guard.push(p);
    }
    guard[order].clone()
}

fn horner(p: &[f64], t: f64) -> f64 {
    p.iter().rev().fold(0.0, |acc, &c| acc * t + c)
}

/// `bump⁽ⁿ⁾(t)`; exactly `0` for `|t| ≥ 1`.
pub(crate) fn eval(order: u32, t: f64) -> f64 {
    if t.abs() >= 1.0 {
        return 0.0;
    }
    let s = (1.0 - t) * (1.0 + t);
    let envelope = (-1.0 / s - 2.0 * order as f64 * s.ln()).exp();
    if envelope == 0.0 {
        return 0.0;
    }
    if order == 0 {
        return envelope;
    }
    horner(&polynomial(order), t) * envelope
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_polynomials() {
        assert_eq!(polynomial(0), vec![1.0]);
        // bump' = bump · (-2t) / s²
        assert_eq!(polynomial(1), vec![0.0, -2.0]);
        // bump'' = bump · (6t⁴ - 2) / s⁴
        assert_eq!(polynomial(2), vec![-2.0, 0.0, 0.0, 0.0, 6.0]);
    }

    #[test]
    fn boundary_is_exact_zero() {
        for n in 0..8 {
            assert_eq!(eval(n, 1.0), 0.0);
            assert_eq!(eval(n, -1.0), 0.0);
            assert_eq!(eval(n, 3.5), 0.0);
        }
    }

    #[test]
    fn no_overflow_near_boundary() {
        for n in 0..12 {
            let v = eval(n, 1.0 - 1e-12);
            assert!(v.is_finite() && v.abs() < 1e-100, "order {n}: {v}");
        }
    }
}
