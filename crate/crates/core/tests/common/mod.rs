#![allow(dead_code)]

use z3ro_sim::Complex64;

/// `E|s|⁴` for `s ~ CN(0, p)` by composite Simpson quadrature of
/// `∫ u² e^{-u/p} / p du`, the density of `u = |s|²` being exponential.
pub fn fourth_moment_by_quadrature(p: f64) -> f64 {
    let upper = 80.0 * p;
    let n = 200_000; // even
    let h = upper / n as f64;
    let f = |u: f64| u * u * (-u / p).exp() / p;
    let mut acc = f(0.0) + f(upper);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(i as f64 * h);
    }
    acc * h / 3.0
}

/// Bussgang gain of `y = a1·s + a3·s|s|²` for `s ~ CN(0, p)`:
/// `E[y s*]/p = a1 + a3·E|s|⁴/p`, with the moment taken from quadrature.
pub fn cubic_bussgang_oracle(a1: Complex64, a3: Complex64, p: f64) -> Complex64 {
    a1 + a3 * (fourth_moment_by_quadrature(p) / p)
}

/// Bitwise equality that also distinguishes `-0.0` and NaN payloads.
pub fn same_bits(a: &[f64], b: &[f64]) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits())
}

pub fn sample_std(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
}
