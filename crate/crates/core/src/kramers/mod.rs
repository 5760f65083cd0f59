//! Closed-form capacities and expected transition times.
//!
//! Every formula is written as a capacity prefactor `cap · e^{V(z)/ε}`; the
//! expected time is the Laplace numerator `(2πε)^{d/2}/√det Hess V(x)`
//! divided by it. This keeps `expected_time · capacity` equal to the
//! numerator by construction.

mod bifurcation;
mod classified;
mod sweep;

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::quadrature::{integrate_pieces, QuadConfig};
use crate::special::gamma_fn;

pub use bifurcation::{
    boundary_discrepancy, doublezero_time, doublezero_window, pitchfork_longitudinal_time, pitchfork_saddles,
    pitchfork_transverse_time, sombrero_time, BoundaryReport, DoubleZeroSpec, LongitudinalSpec, LongitudinalSplit,
    PitchforkSaddles, SombreroSpec, TransverseSpec, TransverseSplit,
};
pub use classified::{minimum_spec_for, rate_for, saddle_spec_for};
pub use sweep::{
    chain3_doublezero_spec, chain3_minimum, chain3_sombrero_spec, sweep_chain3, sweep_chain3_doublezero, sweep_doublezero, sweep_longitudinal,
    sweep_transverse, SweepRow, CHAIN3_SEXTIC,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinimumSpec {
    pub value: f64,
    pub hessian_det: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eigenvalues: Option<Vec<f64>>,
}

impl MinimumSpec {
    pub fn new(value: f64, hessian_det: f64) -> Result<Self> {
        if !(hessian_det > 0.0) || !hessian_det.is_finite() {
            return Err(Error::Domain {
                name: "minimum Hessian determinant",
                value: hessian_det,
            });
        }
        Ok(Self {
            value,
            hessian_det,
            eigenvalues: None,
        })
    }

    pub fn from_eigenvalues(value: f64, eigenvalues: &[f64]) -> Result<Self> {
        if let Some(bad) = eigenvalues.iter().find(|v| !(**v > 0.0)) {
            return Err(Error::Domain {
                name: "minimum Hessian eigenvalue",
                value: *bad,
            });
        }
        let mut m = Self::new(value, eigenvalues.iter().product())?;
        m.eigenvalues = Some(eigenvalues.to_vec());
        Ok(m)
    }

    fn check_dim(&self, d: usize) -> Result<()> {
        match &self.eigenvalues {
            Some(e) if e.len() != d => Err(invalid(format!(
                "minimum has {} eigenvalues but the saddle data describes d = {d}",
                e.len()
            ))),
            _ => Ok(()),
        }
    }
}

/// Angular part k(φ) of a quartic form on a null plane, V₄(r cos φ, r sin φ) = r⁴ k(φ).
#[derive(Clone)]
pub enum AngularProfile {
    Constant(f64),
    /// Coefficients of u⁴, u³v, u²v², uv³, v⁴.
    Quartic([f64; 5]),
    Custom(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl fmt::Debug for AngularProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AngularProfile::Constant(k) => write!(f, "Constant({k})"),
            AngularProfile::Quartic(q) => write!(f, "Quartic({q:?})"),
            AngularProfile::Custom(_) => write!(f, "Custom(..)"),
        }
    }
}

const ANGULAR_SAMPLES: usize = 4096;

impl AngularProfile {
    pub fn eval(&self, phi: f64) -> f64 {
        match self {
            AngularProfile::Constant(k) => *k,
            AngularProfile::Quartic(q) => {
                let (v, u) = phi.sin_cos();
                q[0] * u.powi(4) + q[1] * u.powi(3) * v + q[2] * u * u * v * v + q[3] * u * v.powi(3) + q[4] * v.powi(4)
            }
            AngularProfile::Custom(f) => f(phi),
        }
    }

    /// Rejects profiles with a nonpositive or non-finite sample.
    pub fn check_positive(&self) -> Result<()> {
        let n = if matches!(self, AngularProfile::Constant(_)) { 1 } else { ANGULAR_SAMPLES };
        for i in 0..n {
            let phi = 2.0 * PI * i as f64 / n as f64;
            let k = self.eval(phi);
            if !(k > 0.0) || !k.is_finite() {
                return Err(Error::Domain {
                    name: "angular function k(phi)",
                    value: k,
                });
            }
        }
        Ok(())
    }

    /// (1/2π) ∫₀^{2π} g(k(φ)) dφ, by adaptive quadrature to relative 1e-10,
    /// or g(k) directly for a constant profile.
    pub fn average(&self, g: impl Fn(f64) -> f64) -> Result<f64> {
        if let AngularProfile::Constant(k) = self {
            return Ok(g(*k));
        }
        let cfg = QuadConfig {
            abs_tol: 0.0,
            rel_tol: 1e-12,
            max_subdivisions: 400,
        };
        let points: Vec<f64> = (0..=8).map(|i| PI * i as f64 / 4.0).collect();
        let r = integrate_pieces(|phi| g(self.eval(phi)), &points, &cfg);
        if !r.converged || !(r.abs_error <= 1e-10 * r.value.abs()) {
            return Err(Error::NonConvergence(format!(
                "angular integral reached error {:.3e} on value {:.6e}",
                r.abs_error, r.value
            )));
        }
        Ok(r.value / (2.0 * PI))
    }
}

/// A theorem's error order, kept as text together with its value at unit constant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorOrder {
    pub expr: String,
    pub unit_value: f64,
}

impl ErrorOrder {
    /// ε^{1/2p}|log ε|^{(2p+1)/2p}; for p = 1 this is the quadratic-saddle order ε^{1/2}|log ε|.
    pub fn flat(p: u32, eps: f64) -> Self {
        let l = eps.ln().abs();
        if p == 1 {
            return Self {
                expr: "eps^(1/2) |log eps|".into(),
                unit_value: eps.sqrt() * l,
            };
        }
        let two_p = 2.0 * p as f64;
        Self {
            expr: format!("eps^(1/{}) |log eps|^({}/{})", 2 * p, 2 * p + 1, 2 * p),
            unit_value: eps.powf(1.0 / two_p) * l.powf((two_p + 1.0) / two_p),
        }
    }

    /// [ε|log ε|³ / max(|λ|, (ε|log ε|)^{1/2})]^{1/2}
    pub fn bifurcation(lambda: f64, eps: f64) -> Self {
        let l = eps.ln().abs();
        let denom = lambda.abs().max((eps * l).sqrt());
        Self {
            expr: "(eps |log eps|^3 / max(|lambda|, (eps |log eps|)^(1/2)))^(1/2)".into(),
            unit_value: (eps * l.powi(3) / denom).sqrt(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateResult {
    /// V(saddle) − V(minimum).
    pub barrier: f64,
    pub prefactor: f64,
    /// prefactor · exp(barrier/ε).
    pub expected_time: f64,
    pub capacity: f64,
    pub error_order: ErrorOrder,
    pub regime_tag: String,
    /// Value of the crossover factor (Ψ±, angular Θ± average, Θ₋χ) where one enters.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub crossover: Option<f64>,
    pub eps: f64,
}

pub(crate) fn check_eps(eps: f64) -> Result<()> {
    if eps > 0.0 && eps.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain { name: "eps", value: eps })
    }
}

pub(crate) fn check_positive_list(name: &'static str, values: &[f64]) -> Result<()> {
    match values.iter().find(|v| !(**v > 0.0) || !v.is_finite()) {
        Some(v) => Err(Error::Domain { name, value: *v }),
        None => Ok(()),
    }
}

pub(crate) fn check_positive(name: &'static str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain { name, value: v })
    }
}

/// Assemble a result from the capacity prefactor `cap_pref = cap · e^{V(z)/ε}`.
pub(crate) fn assemble(
    min: &MinimumSpec,
    d: usize,
    saddle_value: f64,
    cap_pref: f64,
    eps: f64,
    error_order: ErrorOrder,
    regime_tag: &str,
    crossover: Option<f64>,
) -> Result<RateResult> {
    min.check_dim(d)?;
    if !(cap_pref > 0.0) || !cap_pref.is_finite() {
        return Err(Error::Invariant(format!("capacity prefactor {cap_pref} is not positive and finite")));
    }
    let numerator = (2.0 * PI * eps).powf(d as f64 / 2.0) / min.hessian_det.sqrt();
    let prefactor = numerator / cap_pref;
    let barrier = saddle_value - min.value;
    Ok(RateResult {
        barrier,
        prefactor,
        expected_time: prefactor * (barrier / eps).exp(),
        capacity: cap_pref * (-saddle_value / eps).exp(),
        error_order,
        regime_tag: regime_tag.into(),
        crossover,
        eps,
    })
}

/// Laplace numerator (2πε)^{d/2} e^{−V(x)/ε}/√det Hess V(x); equals expected_time · capacity.
pub fn laplace_numerator(min: &MinimumSpec, d: usize, eps: f64) -> f64 {
    (2.0 * PI * eps).powf(d as f64 / 2.0) / min.hessian_det.sqrt() * (-min.value / eps).exp()
}

/// Saddle data for the single-saddle formulas.
#[derive(Debug, Clone)]
pub struct SaddleSpec {
    pub value: f64,
    /// |λ₁|; absent for a flat unstable direction.
    pub unstable_eigenvalue: Option<f64>,
    /// Strictly positive eigenvalues entering the product (the quadratic stable directions).
    pub stable_eigenvalues: Vec<f64>,
    pub regime: SaddleRegime,
}

#[derive(Debug, Clone)]
pub enum SaddleRegime {
    Quadratic,
    /// Unstable direction −C y₁^{2p}.
    FlatUnstable { p: u32, c: f64 },
    /// One stable direction +C y₂^{2p}.
    FlatStable { p: u32, c: f64 },
    /// Two stable directions with leading form r^{2p} k(φ).
    Codim2 { k: AngularProfile, p: u32 },
}

impl SaddleSpec {
    pub fn quadratic(value: f64, unstable: f64, stable: Vec<f64>) -> Self {
        Self {
            value,
            unstable_eigenvalue: Some(unstable.abs()),
            stable_eigenvalues: stable,
            regime: SaddleRegime::Quadratic,
        }
    }

    fn unstable(&self) -> Result<f64> {
        let l = self
            .unstable_eigenvalue
            .ok_or_else(|| invalid("this regime needs the unstable eigenvalue |lambda_1|"))?;
        check_positive("unstable eigenvalue", l)?;
        Ok(l)
    }

    fn stable(&self) -> Result<f64> {
        check_positive_list("stable eigenvalue", &self.stable_eigenvalues)?;
        Ok(self.stable_eigenvalues.iter().product())
    }
}

fn check_p(p: u32) -> Result<()> {
    if p >= 2 {
        Ok(())
    } else {
        Err(Error::Domain {
            name: "flatness order p",
            value: p as f64,
        })
    }
}

/// Classical Eyring-Kramers: prefactor (2π/|λ₁|)·√(|det Hess V(z)|/det Hess V(x)).
pub fn ek_classical(min: &MinimumSpec, saddle: &SaddleSpec, eps: f64) -> Result<RateResult> {
    check_eps(eps)?;
    if !matches!(saddle.regime, SaddleRegime::Quadratic) {
        return Err(invalid("ek_classical needs a quadratic saddle; use the degenerate formulas"));
    }
    let l1 = saddle.unstable()?;
    let prod = saddle.stable()?;
    let d = 1 + saddle.stable_eigenvalues.len();
    let cap = (2.0 * PI).powf((d as f64 - 2.0) / 2.0) * (l1 / prod).sqrt() * eps.powf(d as f64 / 2.0);
    assemble(min, d, saddle.value, cap, eps, ErrorOrder::flat(1, eps), "quadratic", None)
}

/// Quartic (or 2p-flat) unstable direction: prefactor ∝ ε^{−(p−1)/2p}.
pub fn ek_flat_unstable(min: &MinimumSpec, saddle: &SaddleSpec, eps: f64) -> Result<RateResult> {
    check_eps(eps)?;
    let SaddleRegime::FlatUnstable { p, c } = saddle.regime else {
        return Err(invalid("ek_flat_unstable needs a FlatUnstable saddle"));
    };
    check_p(p)?;
    check_positive("flat coefficient C_2p", c)?;
    let prod = saddle.stable()?;
    let d = 1 + saddle.stable_eigenvalues.len();
    let pf = p as f64;
    let cap = pf * c.powf(1.0 / (2.0 * pf)) / gamma_fn(1.0 / (2.0 * pf))?
        * ((2.0 * PI).powf(d as f64 - 1.0) / prod).sqrt()
        * eps.powf(d as f64 / 2.0 + (pf - 1.0) / (2.0 * pf));
    assemble(min, d, saddle.value, cap, eps, ErrorOrder::flat(p, eps), "flat_unstable", None)
}

/// Quartic (or 2p-flat) stable direction: prefactor ∝ ε^{+(p−1)/2p}.
pub fn ek_flat_stable(min: &MinimumSpec, saddle: &SaddleSpec, eps: f64) -> Result<RateResult> {
    check_eps(eps)?;
    let SaddleRegime::FlatStable { p, c } = saddle.regime else {
        return Err(invalid("ek_flat_stable needs a FlatStable saddle"));
    };
    check_p(p)?;
    check_positive("flat coefficient C_2p", c)?;
    let l1 = saddle.unstable()?;
    let prod = saddle.stable()?;
    let d = 2 + saddle.stable_eigenvalues.len();
    let pf = p as f64;
    let cap = gamma_fn(1.0 / (2.0 * pf))? / (pf * c.powf(1.0 / (2.0 * pf)))
        * ((2.0 * PI).powf(d as f64 - 3.0) * l1 / prod).sqrt()
        * eps.powf(d as f64 / 2.0 - (pf - 1.0) / (2.0 * pf));
    assemble(min, d, saddle.value, cap, eps, ErrorOrder::flat(p, eps), "flat_stable", None)
}

/// Two vanishing stable eigenvalues with positive leading form r^{2p}k(φ): prefactor ∝ ε^{(p−1)/p}.
pub fn ek_codim2(min: &MinimumSpec, saddle: &SaddleSpec, eps: f64) -> Result<RateResult> {
    check_eps(eps)?;
    let SaddleRegime::Codim2 { k, p } = &saddle.regime else {
        return Err(invalid("ek_codim2 needs a Codim2 saddle"));
    };
    let p = *p;
    check_p(p)?;
    k.check_positive()?;
    let l1 = saddle.unstable()?;
    let prod = saddle.stable()?;
    let d = 3 + saddle.stable_eigenvalues.len();
    let pf = p as f64;
    let angular = 2.0 * PI * k.average(|kv| kv.powf(-1.0 / pf))?;
    let cap = gamma_fn(1.0 / pf)? / (2.0 * pf)
        * angular
        * ((2.0 * PI).powf(d as f64 - 4.0) * l1 / prod).sqrt()
        * eps.powf(d as f64 / 2.0 - (pf - 1.0) / pf);
    assemble(min, d, saddle.value, cap, eps, ErrorOrder::flat(p, eps), "codim2", Some(angular))
}

/// Capacities of saddles in parallel add.
pub fn parallel_capacity(capacities: &[f64]) -> f64 {
    capacities.iter().sum()
}

/// Order-only estimate for q ≥ 4 vanishing eigenvalues (q − 1 flat stable
/// directions of order 2p): capacity prefactor of order ε^{d/2 − (q−1)(p−1)/2p}.
/// No constant is available.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderEstimate {
    pub capacity_exponent: f64,
    pub prefactor_exponent: f64,
    pub expr: String,
}

pub fn higher_codim_order(d: usize, q: usize, p: u32) -> Result<OrderEstimate> {
    check_p(p)?;
    if q < 4 || q > d {
        return Err(invalid(format!("order-only estimate needs 4 <= q <= d, got q = {q}, d = {d}")));
    }
    let shift = (q as f64 - 1.0) * (p as f64 - 1.0) / (2.0 * p as f64);
    Ok(OrderEstimate {
        capacity_exponent: d as f64 / 2.0 - shift,
        prefactor_exponent: shift,
        expr: format!("eps^({}/2 - {}*{}/{})", d, q - 1, p - 1, 2 * p),
    })
}
