mod common;

use std::f64::consts::PI;

use proptest::prelude::*;

use common::{rel, simpson};
use flatsaddle::special::{
    bessel_i, bessel_k_quarter, chi, gamma_fn, normal_cdf, psi_minus, psi_plus, tabulate, theta_minus, theta_plus,
    Crossover, Route,
};

// Defining integrals, evaluated by Simpson's rule on a truncated range.

fn psi_plus_def(a: f64) -> f64 {
    ((1.0 + a) / (2.0 * PI)).sqrt() * 2.0 * simpson(|y| (-(y.powi(4) + a * y * y) / 2.0).exp(), 0.0, 4.0, 40_000)
}

fn psi_minus_def(a: f64) -> f64 {
    let c = a / 4.0;
    let top = (c + 10.0).sqrt();
    ((1.0 + a) / (2.0 * PI)).sqrt() * 2.0 * simpson(|y| (-(y * y - c).powi(2) / 2.0).exp(), 0.0, top, 40_000)
}

fn theta_plus_def(a: f64) -> f64 {
    (1.0 + a) * simpson(|y| (-(y.powi(4) + a * y * y) / 2.0).exp() * y, 0.0, 4.0, 40_000)
}

fn theta_minus_def(a: f64) -> f64 {
    let c = a / 2.0;
    simpson(|y| (-(y * y - c).powi(2) / 2.0).exp() * y, 0.0, (c + 10.0).sqrt(), 40_000)
}

fn chi_def(a: f64) -> f64 {
    (1.0 + a).sqrt() / PI * simpson(|p| (-a * (1.0 - p.cos())).exp(), 0.0, 2.0 * PI, 40_000)
}

const ALPHAS: [f64; 8] = [0.0, 0.1, 0.5, 1.0, 2.0, 5.0, 10.0, 30.0];

#[test]
fn gamma_values() {
    assert!(rel(gamma_fn(0.5).unwrap(), PI.sqrt()) < 1e-12);
    assert!(rel(gamma_fn(5.0).unwrap(), 24.0) < 1e-12);
    // Γ(1/4) = ∫ t^{-3/4} e^{-t} dt = ∫ 4 e^{-u⁴} du with t = u⁴
    let oracle = simpson(|u| 4.0 * (-u.powi(4)).exp(), 0.0, 7.0, 40_000);
    assert!(rel(gamma_fn(0.25).unwrap(), oracle) < 1e-10);
    assert!(gamma_fn(0.0).is_err());
    assert!(gamma_fn(-1.5).is_err());
}

#[test]
fn normal_cdf_values() {
    assert_eq!(normal_cdf(0.0), 0.5);
    let density = |t: f64| (-t * t / 2.0).exp() / (2.0 * PI).sqrt();
    let oracle = 0.5 + simpson(density, 0.0, 1.0, 2000);
    assert!((normal_cdf(1.0) - oracle).abs() < 1e-12);
    let mut last = 0.0;
    for i in 0..60 {
        let v = normal_cdf(i as f64 * 0.25);
        assert!(v >= last && v <= 1.0);
        last = v;
    }
    assert!(1.0 - last < 1e-12);
}

#[test]
fn bessel_values() {
    assert_eq!(bessel_i(0.0, 0.0).unwrap(), 1.0);
    let oracle = simpson(|p| (2.0 * p.cos()).exp(), 0.0, 2.0 * PI, 4000) / (2.0 * PI);
    assert!(rel(bessel_i(0.0, 2.0).unwrap(), oracle) < 1e-10);
    assert!(bessel_k_quarter(0.0).is_err());
    assert!(bessel_k_quarter(-1.0).is_err());
}

#[test]
fn k_quarter_integral_identity() {
    // ∫ exp(−½[y⁴ + 2δy² + δ²/2]) dy = √(δ/2) K_{1/4}(δ²/4)
    for delta in [0.3, 1.0, 2.0, 5.0, 12.0] {
        let lhs = 2.0 * simpson(|y| (-0.5 * (y.powi(4) + 2.0 * delta * y * y + delta * delta / 2.0)).exp(), 0.0, 4.0, 40_000);
        let rhs = (delta / 2.0).sqrt() * bessel_k_quarter(delta * delta / 4.0).unwrap();
        assert!(rel(rhs, lhs) < 1e-10, "δ = {delta}: {rhs} vs {lhs}");
    }
}

#[test]
fn special_values_at_zero() {
    let psi0 = gamma_fn(0.25).unwrap() / (2f64.powf(1.25) * PI.sqrt());
    for f in [psi_plus, psi_minus] {
        assert!((f(0.0).unwrap() - psi0).abs() < 1e-12);
        assert!((f(0.0).unwrap() - 0.8600).abs() < 1e-4);
    }
    for f in [theta_plus, theta_minus] {
        assert!((f(0.0).unwrap() - (PI / 8.0).sqrt()).abs() < 1e-12);
        assert!((f(0.0).unwrap() - 0.6267).abs() < 1e-4);
    }
    assert_eq!(chi(0.0).unwrap(), 2.0);
}

#[test]
fn crossovers_match_defining_integrals() {
    type Pair = (fn(f64) -> flatsaddle::Result<f64>, fn(f64) -> f64, &'static str);
    let pairs: [Pair; 5] = [
        (psi_plus, psi_plus_def, "psi_plus"),
        (psi_minus, psi_minus_def, "psi_minus"),
        (theta_plus, theta_plus_def, "theta_plus"),
        (theta_minus, theta_minus_def, "theta_minus"),
        (chi, chi_def, "chi"),
    ];
    for (f, def, name) in pairs {
        for a in ALPHAS {
            let v = f(a).unwrap();
            let o = def(a);
            assert!(rel(v, o) < 1e-9, "{name}({a}) = {v}, oracle {o}");
        }
    }
}

#[test]
fn routes_agree() {
    for f in Crossover::ALL {
        let closed = tabulate(f, &ALPHAS, Route::ClosedForm).unwrap();
        let quad = tabulate(f, &ALPHAS, Route::Quadrature).unwrap();
        for (c, q) in closed.iter().zip(&quad) {
            assert_eq!(c.route, Route::ClosedForm);
            assert_eq!(q.route, Route::Quadrature);
            assert!(rel(c.value, q.value) < 1e-8, "{} at {}: {} vs {}", f.name(), c.alpha, c.value, q.value);
        }
    }
}

#[test]
fn auto_route_switches_for_psi_only() {
    assert_eq!(Crossover::PsiPlus.resolve(0.2, Route::Auto), Route::Quadrature);
    assert_eq!(Crossover::PsiMinus.resolve(0.7, Route::Auto), Route::ClosedForm);
    assert_eq!(Crossover::Chi.resolve(0.2, Route::Auto), Route::ClosedForm);
}

#[test]
fn crossovers_are_bounded() {
    for i in 0..=2000 {
        let a = i as f64 * 0.05;
        for f in Crossover::ALL {
            let v = f.eval(a, Route::Auto).unwrap().value;
            assert!((0.5..=2.5).contains(&v), "{}({a}) = {v}", f.name());
        }
    }
}

#[test]
fn psi_functions_overshoot_both_ends() {
    for (f, limit) in [(psi_plus as fn(f64) -> _, 1.0), (psi_minus, 2.0)] {
        let max = (0..=4000).map(|i| f(i as f64 * 0.01).unwrap()).fold(f64::MIN, f64::max);
        assert!(max > f(0.0).unwrap() && max > limit, "max {max}");
    }
}

#[test]
fn limits_are_reached_at_fifty() {
    assert!((psi_plus(50.0).unwrap() - 1.0).abs() < 0.02);
    assert!((psi_minus(50.0).unwrap() - 2.0).abs() < 0.05);
    assert!((theta_plus(50.0).unwrap() - 1.0).abs() < 0.02);
    for f in Crossover::ALL {
        let v = f.eval(50.0, Route::Auto).unwrap().value;
        assert!(rel(v, f.at_infinity()) < 0.02, "{}", f.name());
    }
    // far out, the tails are gone
    for f in Crossover::ALL {
        let v = f.eval(1e4, Route::Auto).unwrap().value;
        assert!(rel(v, f.at_infinity()) < 1e-3, "{}", f.name());
    }
}

#[test]
fn negative_arguments_are_rejected() {
    for f in Crossover::ALL {
        assert!(f.eval(-0.1, Route::Auto).is_err());
        assert!(f.eval(f64::NAN, Route::Auto).is_err());
    }
}

proptest! {
    #[test]
    fn normal_cdf_is_symmetric(x in -30.0f64..30.0) {
        prop_assert!((normal_cdf(-x) - (1.0 - normal_cdf(x))).abs() < 1e-14);
    }

    #[test]
    fn crossovers_are_finite_and_positive(a in 0.0f64..500.0) {
        for f in Crossover::ALL {
            let v = f.eval(a, Route::Auto).unwrap().value;
            prop_assert!(v.is_finite() && v > 0.0);
        }
    }
}
