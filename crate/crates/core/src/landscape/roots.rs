use nalgebra::Complex;

/// Real roots of a real polynomial, found by simultaneous Aberth-Ehrlich
/// iteration on all roots and polished by Newton steps.
#[derive(Debug, Clone, PartialEq)]
pub struct RealRoots {
    /// Real roots, ascending; near-coincident pairs are kept separately.
    pub roots: Vec<f64>,
    /// Count of non-real roots.
    pub complex_count: usize,
    /// Whether every real root is simple.
    pub all_simple: bool,
}

/// `coeffs[k]` is the coefficient of `t^k`.
pub fn real_roots(coeffs: &[f64]) -> RealRoots {
    let scale = coeffs.iter().fold(0.0f64, |m, c| m.max(c.abs()));
    let mut c: Vec<f64> = coeffs.iter().map(|v| if scale > 0.0 { v / scale } else { 0.0 }).collect();
    while c.len() > 1 && c.last().map_or(false, |v| v.abs() < 1e-14) {
        c.pop();
    }
    let n = c.len() - 1;
    if n == 0 {
        return RealRoots {
            roots: vec![],
            complex_count: 0,
            all_simple: true,
        };
    }
    let mut roots = Vec::new();
    let mut complex_count = 0;
    for z in aberth(&c) {
        if z.im.abs() <= 1e-6 * z.norm().max(1.0) {
            roots.push(polish(&c, z.re));
        } else {
            complex_count += 1;
        }
    }
    roots.sort_by(f64::total_cmp);
    let mut all_simple = true;
    for w in roots.windows(2) {
        if (w[1] - w[0]).abs() <= 1e-5 * w[0].abs().max(1.0) {
            all_simple = false;
        }
    }
    for &r in &roots {
        let dp = eval_derivative(&c, r);
        if dp.abs() < 1e-7 * r.abs().max(1.0).powi(n as i32) {
            all_simple = false;
        }
    }
    RealRoots {
        roots,
        complex_count,
        all_simple,
    }
}

pub(crate) fn eval(c: &[f64], t: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &v| acc * t + v)
}

/// All complex roots of the polynomial with ascending coefficients `c`
/// (leading coefficient nonzero).
fn aberth(c: &[f64]) -> Vec<Complex<f64>> {
    let n = c.len() - 1;
    let lead = c[n];
    let monic: Vec<f64> = c.iter().map(|v| v / lead).collect();
    // Cauchy bound on the root moduli sets the initial circle.
    let radius = 1.0 + monic[..n].iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut z: Vec<Complex<f64>> = (0..n)
        .map(|k| Complex::from_polar(0.5 * radius, 0.4 + 2.0 * std::f64::consts::PI * k as f64 / n as f64))
        .collect();
    for _ in 0..500 {
        let mut max_step = 0.0f64;
        for i in 0..n {
            let (p, dp) = eval_complex(&monic, z[i]);
            if p.norm() == 0.0 {
                continue;
            }
            let ratio = p / dp;
            let repulsion: Complex<f64> = (0..n).filter(|&j| j != i).map(|j| (z[i] - z[j]).inv()).sum();
            let step = ratio / (Complex::new(1.0, 0.0) - ratio * repulsion);
            if step.re.is_finite() && step.im.is_finite() {
                z[i] -= step;
                max_step = max_step.max(step.norm() / z[i].norm().max(1.0));
            }
        }
        if max_step < 1e-15 {
            break;
        }
    }
    z
}

fn eval_complex(c: &[f64], t: Complex<f64>) -> (Complex<f64>, Complex<f64>) {
    let mut p = Complex::new(0.0, 0.0);
    let mut dp = Complex::new(0.0, 0.0);
    for &v in c.iter().rev() {
        dp = dp * t + p;
        p = p * t + v;
    }
    (p, dp)
}

fn eval_derivative(c: &[f64], t: f64) -> f64 {
    c.iter()
        .enumerate()
        .skip(1)
        .rev()
        .fold(0.0, |acc, (k, &v)| acc * t + k as f64 * v)
}

fn polish(c: &[f64], mut t: f64) -> f64 {
    for _ in 0..5 {
        let d = eval_derivative(c, t);
        if d == 0.0 {
            break;
        }
        let step = eval(c, t) / d;
        if !step.is_finite() || step.abs() > 1e-3 * t.abs().max(1.0) {
            break;
        }
        t -= step;
    }
    t
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn four_simple_roots() {
        // (t²−1)(t²−4)
        let r = real_roots(&[4.0, 0.0, -5.0, 0.0, 1.0]);
        assert_eq!(r.roots.len(), 4);
        assert!(r.all_simple);
        assert!((r.roots[0] + 2.0).abs() < 1e-12);
    }

    #[test]
    fn double_root_is_flagged() {
        // (t−1)²(t²+1)
        let r = real_roots(&[1.0, -2.0, 2.0, -2.0, 1.0]);
        assert!(!r.all_simple);
    }

    #[test]
    fn no_real_roots() {
        // (t²+1)², a repeated complex pair
        let r = real_roots(&[1.0, 0.0, 2.0, 0.0, 1.0]);
        assert!(r.roots.is_empty());
        assert_eq!(r.complex_count, 4);
    }

    #[test]
    fn repeated_real_root_in_a_cubic() {
        // (t−1)²(t+2) = t³ − 3t + 2
        let r = real_roots(&[2.0, -3.0, 0.0, 1.0]);
        assert!(!r.all_simple);
        assert!(r.roots.iter().any(|x| (x + 2.0).abs() < 1e-12));
    }

    #[test]
    fn leading_zeros_lower_the_degree() {
        let r = real_roots(&[-1.0, 0.0, 1.0, 0.0, 0.0]);
        assert_eq!(r.roots.len(), 2);
        assert!(r.all_simple);
    }
}
