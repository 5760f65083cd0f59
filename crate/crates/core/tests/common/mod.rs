#![allow(dead_code)]

pub mod topology;

/// Composite Simpson rule with `n` (even) intervals. Kept separate from the
/// library quadrature so test oracles do not share code with what they check.
pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let n = n + n % 2;
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(a + i as f64 * h);
    }
    s * h / 3.0
}

pub fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}
