//! Gamma, the standard normal CDF, modified Bessel functions of orders 0 and
//! ±1/4, and the crossover functions Ψ±, Θ±, χ.
//!
//! Each crossover function has two independent evaluation routes: a closed
//! form through Bessel/normal functions and a direct quadrature of its
//! defining integral. [`Route::Auto`] picks the stable one.

use std::f64::consts::{PI, SQRT_2};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{integrate, integrate_pieces, QuadConfig};

/// Below this α the Ψ± closed forms are evaluated by quadrature instead.
pub const ROUTE_SWITCH: f64 = 0.5;

/// Ψ±(0) = Γ(1/4)/(2^{5/4}√π).
pub fn psi_at_zero() -> f64 {
    libm::tgamma(0.25) / (2f64.powf(1.25) * PI.sqrt())
}

/// Θ±(0) = √(π/8).
pub fn theta_at_zero() -> f64 {
    (PI / 8.0).sqrt()
}

pub fn gamma_fn(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::Domain {
            name: "gamma argument",
            value: x,
        });
    }
    Ok(libm::tgamma(x))
}

pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / SQRT_2)
}

/// Scaled complementary error function e^{z²} erfc(z) for z ≥ 0.
pub fn erfcx(z: f64) -> f64 {
    if z < 3.0 {
        return (z * z).exp() * libm::erfc(z);
    }
    // Continued fraction erfc(z) = e^{-z²}/√π · 1/(z + (1/2)/(z + 1/(z + (3/2)/(z + …))))
    let mut frac = z;
    for k in (1..=80).rev() {
        frac = z + (k as f64 / 2.0) / frac;
    }
    1.0 / (PI.sqrt() * frac)
}

/// e^{-x} I_ν(x) for x ≥ 0 and ν > -1.
pub fn bessel_i_scaled(nu: f64, x: f64) -> Result<f64> {
    if !(x >= 0.0) || !x.is_finite() {
        return Err(Error::Domain {
            name: "Bessel I argument",
            value: x,
        });
    }
    if !(nu > -1.0) {
        return Err(Error::Domain {
            name: "Bessel I order",
            value: nu,
        });
    }
    if x == 0.0 {
        return Ok(if nu == 0.0 {
            1.0
        } else if nu > 0.0 {
            0.0
        } else {
            f64::INFINITY
        });
    }
    if x > 30.0 {
        // Hankel expansion: e^{-x} I_ν(x) ≈ (2πx)^{-1/2} Σ (-1)^k a_k(ν)/x^k.
        let mu = 4.0 * nu * nu;
        let mut term = 1.0;
        let mut sum = 1.0;
        for k in 1..60 {
            let kf = k as f64;
            let next = -term * (mu - (2.0 * kf - 1.0).powi(2)) / (8.0 * kf * x);
            if next.abs() > term.abs() {
                break;
            }
            term = next;
            sum += term;
            if term.abs() < 1e-17 * sum.abs() {
                break;
            }
        }
        return Ok(sum / (2.0 * PI * x).sqrt());
    }
    let half = 0.5 * x;
    let log_t0 = nu * half.ln() - x - libm::lgamma(nu + 1.0);
    let mut term = log_t0.exp();
    let mut sum = term;
    let q = half * half;
    for k in 1..500 {
        let kf = k as f64;
        term *= q / (kf * (kf + nu));
        sum += term;
        if term < 1e-17 * sum {
            break;
        }
    }
    Ok(sum)
}

pub fn bessel_i(nu: f64, x: f64) -> Result<f64> {
    Ok(bessel_i_scaled(nu, x)? * x.exp())
}

/// e^{x} K_{1/4}(x) for x > 0.
///
/// Small x uses the connection formula K_ν = π/2 (I_{-ν} − I_ν)/sin(νπ);
/// above `x = 2` the difference cancels too strongly and the integral
/// representation ∫₀^∞ e^{-x(cosh t − 1)} cosh(t/4) dt is used instead.
pub fn bessel_k_quarter_scaled(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::Domain {
            name: "Bessel K argument",
            value: x,
        });
    }
    let nu = 0.25;
    if x <= 2.0 {
        let im = bessel_i_scaled(-nu, x)?;
        let ip = bessel_i_scaled(nu, x)?;
        // scaled values carry e^{-x}; K carries e^{+x} after rescaling
        let k = 0.5 * PI * (im - ip) / (nu * PI).sin();
        return Ok(k * (2.0 * x).exp());
    }
    // cosh t − 1 ≥ 45/x cuts the integrand below e^{-45}
    let tmax = (1.0 + 45.0 / x).acosh();
    let r = integrate(
        |t| (-x * (t.cosh() - 1.0)).exp() * (nu * t).cosh(),
        0.0,
        tmax,
        &QuadConfig::tight(),
    );
    Ok(r.value)
}

pub fn bessel_k_quarter(x: f64) -> Result<f64> {
    Ok(bessel_k_quarter_scaled(x)? * (-x).exp())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Route {
    ClosedForm,
    Quadrature,
    Auto,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Crossover {
    PsiPlus,
    PsiMinus,
    ThetaPlus,
    ThetaMinus,
    Chi,
}

impl Crossover {
    pub const ALL: [Crossover; 5] = [
        Crossover::PsiPlus,
        Crossover::PsiMinus,
        Crossover::ThetaPlus,
        Crossover::ThetaMinus,
        Crossover::Chi,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Crossover::PsiPlus => "psi_plus",
            Crossover::PsiMinus => "psi_minus",
            Crossover::ThetaPlus => "theta_plus",
            Crossover::ThetaMinus => "theta_minus",
            Crossover::Chi => "chi",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        let key = s.to_ascii_lowercase().replace(['-', '_'], "");
        Some(match key.as_str() {
            "psiplus" | "psi+" => Crossover::PsiPlus,
            "psiminus" | "psi" => Crossover::PsiMinus,
            "thetaplus" | "theta+" => Crossover::ThetaPlus,
            "thetaminus" | "theta" => Crossover::ThetaMinus,
            "chi" => Crossover::Chi,
            _ => return None,
        })
    }

    pub fn at_zero(self) -> f64 {
        match self {
            Crossover::PsiPlus | Crossover::PsiMinus => psi_at_zero(),
            Crossover::ThetaPlus | Crossover::ThetaMinus => theta_at_zero(),
            Crossover::Chi => 2.0,
        }
    }

    pub fn at_infinity(self) -> f64 {
        match self {
            Crossover::PsiPlus | Crossover::ThetaPlus => 1.0,
            Crossover::PsiMinus => 2.0,
            Crossover::ThetaMinus => (PI / 2.0).sqrt(),
            Crossover::Chi => (2.0 / PI).sqrt(),
        }
    }

    /// Route actually used when `Route::Auto` is requested.
    pub fn resolve(self, alpha: f64, route: Route) -> Route {
        match route {
            Route::Auto => match self {
                Crossover::PsiPlus | Crossover::PsiMinus if alpha < ROUTE_SWITCH => Route::Quadrature,
                _ => Route::ClosedForm,
            },
            r => r,
        }
    }

    pub fn eval(self, alpha: f64, route: Route) -> Result<CrossoverEval> {
        check_alpha(alpha)?;
        let route = self.resolve(alpha, route);
        let value = match (self, route) {
            (Crossover::PsiPlus, Route::ClosedForm) => psi_plus_closed(alpha)?,
            (Crossover::PsiPlus, _) => psi_plus_quad(alpha),
            (Crossover::PsiMinus, Route::ClosedForm) => psi_minus_closed(alpha)?,
            (Crossover::PsiMinus, _) => psi_minus_quad(alpha),
            (Crossover::ThetaPlus, Route::ClosedForm) => theta_plus_closed(alpha),
            (Crossover::ThetaPlus, _) => theta_plus_quad(alpha),
            (Crossover::ThetaMinus, Route::ClosedForm) => theta_minus_closed(alpha),
            (Crossover::ThetaMinus, _) => theta_minus_quad(alpha),
            (Crossover::Chi, Route::ClosedForm) => chi_closed(alpha)?,
            (Crossover::Chi, _) => chi_quad(alpha),
        };
        Ok(CrossoverEval { alpha, value, route })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrossoverEval {
    pub alpha: f64,
    pub value: f64,
    pub route: Route,
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha >= 0.0 && alpha.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain {
            name: "crossover argument",
            value: alpha,
        })
    }
}

pub fn psi_plus(alpha: f64) -> Result<f64> {
    Ok(Crossover::PsiPlus.eval(alpha, Route::Auto)?.value)
}

pub fn psi_minus(alpha: f64) -> Result<f64> {
    Ok(Crossover::PsiMinus.eval(alpha, Route::Auto)?.value)
}

pub fn theta_plus(alpha: f64) -> Result<f64> {
    Ok(Crossover::ThetaPlus.eval(alpha, Route::Auto)?.value)
}

pub fn theta_minus(alpha: f64) -> Result<f64> {
    Ok(Crossover::ThetaMinus.eval(alpha, Route::Auto)?.value)
}

pub fn chi(alpha: f64) -> Result<f64> {
    Ok(Crossover::Chi.eval(alpha, Route::Auto)?.value)
}

/// Tabulate `f` on `alphas`.
pub fn tabulate(f: Crossover, alphas: &[f64], route: Route) -> Result<Vec<CrossoverEval>> {
    alphas.iter().map(|&a| f.eval(a, route)).collect()
}

fn psi_plus_closed(alpha: f64) -> Result<f64> {
    if alpha == 0.0 {
        return Ok(psi_at_zero());
    }
    let x = alpha * alpha / 16.0;
    Ok((alpha * (1.0 + alpha) / (8.0 * PI)).sqrt() * bessel_k_quarter_scaled(x)?)
}

fn psi_minus_closed(alpha: f64) -> Result<f64> {
    if alpha == 0.0 {
        return Ok(psi_at_zero());
    }
    let x = alpha * alpha / 64.0;
    let s = bessel_i_scaled(-0.25, x)? + bessel_i_scaled(0.25, x)?;
    Ok((PI * alpha * (1.0 + alpha) / 32.0).sqrt() * s)
}

fn theta_plus_closed(alpha: f64) -> f64 {
    // e^{α²/8} Φ(−α/2) = erfcx(α/(2√2))/2
    (PI / 2.0).sqrt() * (1.0 + alpha) * 0.5 * erfcx(alpha / (2.0 * SQRT_2))
}

fn theta_minus_closed(alpha: f64) -> f64 {
    (PI / 2.0).sqrt() * normal_cdf(alpha / 2.0)
}

fn chi_closed(alpha: f64) -> Result<f64> {
    Ok(2.0 * (1.0 + alpha).sqrt() * bessel_i_scaled(0.0, alpha)?)
}

fn quad_cfg() -> QuadConfig {
    QuadConfig {
        abs_tol: 1e-14,
        rel_tol: 1e-13,
        max_subdivisions: 200,
    }
}

// Integrands below are cut where the exponent passes 45 (e^{-45} ≈ 3e-20).
const CUT: f64 = 45.0;

fn psi_plus_quad(alpha: f64) -> f64 {
    // (y⁴ + αy²)/2 = CUT
    let y2 = 0.5 * (-alpha + (alpha * alpha + 8.0 * CUT).sqrt());
    let r = integrate(
        |y| (-(y.powi(4) + alpha * y * y) / 2.0).exp(),
        0.0,
        y2.sqrt(),
        &quad_cfg(),
    );
    ((1.0 + alpha) / (2.0 * PI)).sqrt() * 2.0 * r.value
}

fn psi_minus_quad(alpha: f64) -> f64 {
    let c = alpha / 4.0;
    let peak = c.sqrt();
    let ymax = (c + (2.0 * CUT).sqrt()).sqrt();
    let r = integrate_pieces(
        |y| (-(y * y - c).powi(2) / 2.0).exp(),
        &[0.0, peak, ymax],
        &quad_cfg(),
    );
    ((1.0 + alpha) / (2.0 * PI)).sqrt() * 2.0 * r.value
}

fn theta_plus_quad(alpha: f64) -> f64 {
    let y2 = 0.5 * (-alpha + (alpha * alpha + 8.0 * CUT).sqrt());
    let r = integrate(
        |y| (-(y.powi(4) + alpha * y * y) / 2.0).exp() * y,
        0.0,
        y2.sqrt(),
        &quad_cfg(),
    );
    (1.0 + alpha) * r.value
}

fn theta_minus_quad(alpha: f64) -> f64 {
    let c = alpha / 2.0;
    let peak = c.sqrt();
    let ymax = (c + (2.0 * CUT).sqrt()).sqrt();
    let r = integrate_pieces(
        |y| (-(y * y - c).powi(2) / 2.0).exp() * y,
        &[0.0, peak, ymax],
        &quad_cfg(),
    );
    r.value
}

fn chi_quad(alpha: f64) -> f64 {
    // symmetric in φ ↦ 2π − φ; the integrand peaks at φ = 0
    let r = if alpha > 1.0 {
        let w = (CUT / alpha).min(2.0);
        let edge = (1.0 - w).acos();
        integrate_pieces(
            |p| (-alpha * (1.0 - p.cos())).exp(),
            &[0.0, edge, PI],
            &quad_cfg(),
        )
    } else {
        integrate(|p| (-alpha * (1.0 - p.cos())).exp(), 0.0, PI, &quad_cfg())
    };
    (1.0 + alpha).sqrt() / PI * 2.0 * r.value
}
