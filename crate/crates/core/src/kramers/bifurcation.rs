use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::{
    assemble, check_eps, check_positive, check_positive_list, ek_classical, AngularProfile, ErrorOrder, MinimumSpec,
    RateResult, SaddleSpec,
};
use crate::error::{invalid, Error, Result};
use crate::special::{chi, psi_minus, psi_plus, theta_minus, theta_plus};

/// Leading-order data of the two saddles z± created when λ₂ < 0 in a
/// transverse pitchfork with quartic coefficient C₄.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PitchforkSaddles {
    /// z± sit at ±offset along the bifurcating direction.
    pub offset: f64,
    /// Hessian eigenvalue of z± along that direction.
    pub mu2: f64,
    /// V(z±) − V(z).
    pub altitude: f64,
}

pub fn pitchfork_saddles(lambda2: f64, c4: f64) -> Result<PitchforkSaddles> {
    if !(lambda2 < 0.0) {
        return Err(Error::Domain {
            name: "lambda2 (must be negative for split saddles)",
            value: lambda2,
        });
    }
    check_positive("C4", c4)?;
    Ok(PitchforkSaddles {
        offset: (-lambda2 / (4.0 * c4)).sqrt(),
        mu2: -2.0 * lambda2,
        altitude: -lambda2 * lambda2 / (16.0 * c4),
    })
}

/// Spectrum at the saddle pair z± (λ₂ < 0 branch of the transverse pitchfork).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransverseSplit {
    pub value: f64,
    /// |μ₁|
    pub unstable: f64,
    pub mu2: f64,
    /// μ₃, …, μ_d
    pub stable: Vec<f64>,
}

/// Normal form ½λ₁y₁² + ½λ₂y₂² + C₄y₂⁴ + ½Σλⱼyⱼ² around the origin z.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransverseSpec {
    /// V(z)
    pub value: f64,
    /// |λ₁|
    pub unstable: f64,
    pub lambda2: f64,
    /// λ₃, …, λ_d
    pub stable: Vec<f64>,
    pub c4: f64,
    /// Required when λ₂ < 0.
    pub split: Option<TransverseSplit>,
}

impl TransverseSpec {
    /// Fill `split` from the leading-order formulas μ₂ = −2λ₂,
    /// V(z±) = V(z) − λ₂²/16C₄, other eigenvalues unchanged.
    pub fn with_leading_order_split(mut self) -> Result<Self> {
        if self.lambda2 < 0.0 {
            let s = pitchfork_saddles(self.lambda2, self.c4)?;
            self.split = Some(TransverseSplit {
                value: self.value + s.altitude,
                unstable: self.unstable,
                mu2: s.mu2,
                stable: self.stable.clone(),
            });
        }
        Ok(self)
    }
}

pub fn pitchfork_transverse_time(min: &MinimumSpec, spec: &TransverseSpec, eps: f64) -> Result<RateResult> {
    check_eps(eps)?;
    check_positive("C4", spec.c4)?;
    let s = (2.0 * eps * spec.c4).sqrt();
    let d = 2 + spec.stable.len();
    let scale = (2.0 * PI).powf((d as f64 - 2.0) / 2.0) * eps.powf(d as f64 / 2.0);
    if spec.lambda2 >= 0.0 {
        check_positive("unstable eigenvalue", spec.unstable)?;
        check_positive_list("stable eigenvalue", &spec.stable)?;
        let prod: f64 = spec.stable.iter().product();
        let psi = psi_plus(spec.lambda2 / s)?;
        let cap = scale * (spec.unstable / ((spec.lambda2 + s) * prod)).sqrt() * psi;
        assemble(
            min,
            d,
            spec.value,
            cap,
            eps,
            ErrorOrder::bifurcation(spec.lambda2, eps),
            "pitchfork_transverse_plus",
            Some(psi),
        )
    } else {
        let split = spec.split.as_ref().ok_or_else(|| {
            invalid("lambda2 < 0 needs the spectrum at the split saddles (see with_leading_order_split)")
        })?;
        if split.stable.len() != spec.stable.len() {
            return Err(invalid("split-saddle spectrum has the wrong length"));
        }
        check_positive("unstable eigenvalue", split.unstable)?;
        check_positive("mu2", split.mu2)?;
        check_positive_list("stable eigenvalue", &split.stable)?;
        let prod: f64 = split.stable.iter().product();
        let psi = psi_minus(split.mu2 / s)?;
        let cap = scale * (split.unstable / ((split.mu2 + s) * prod)).sqrt() * psi;
        assemble(
            min,
            d,
            split.value,
            cap,
            eps,
            ErrorOrder::bifurcation(split.mu2, eps),
            "pitchfork_transverse_minus",
            Some(psi),
        )
    }
}

/// Spectrum at the saddles z± of the λ₁ > 0 branch of the longitudinal pitchfork.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LongitudinalSplit {
    pub value: f64,
    /// |μ₁|
    pub unstable: f64,
    /// μ₂, …, μ_d
    pub stable: Vec<f64>,
}

/// Normal form ½λ₁y₁² − C₄y₁⁴ + ½Σλⱼyⱼ² around z.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LongitudinalSpec {
    pub value: f64,
    pub lambda1: f64,
    /// λ₂, …, λ_d
    pub stable: Vec<f64>,
    pub c4: f64,
    /// Required when λ₁ > 0.
    pub split: Option<LongitudinalSplit>,
}

impl LongitudinalSpec {
    /// Leading order: μ₁ = −2λ₁, V(z±) = V(z) + λ₁²/16C₄.
    pub fn with_leading_order_split(mut self) -> Result<Self> {
        if self.lambda1 > 0.0 {
            check_positive("C4", self.c4)?;
            self.split = Some(LongitudinalSplit {
                value: self.value + self.lambda1 * self.lambda1 / (16.0 * self.c4),
                unstable: 2.0 * self.lambda1,
                stable: self.stable.clone(),
            });
        }
        Ok(self)
    }
}

/// For λ₁ > 0 the caller asserts that the well between z₋ and z₊ lies
/// strictly above V(x).
pub fn pitchfork_longitudinal_time(min: &MinimumSpec, spec: &LongitudinalSpec, eps: f64) -> Result<RateResult> {
    check_eps(eps)?;
    check_positive("C4", spec.c4)?;
    let s = (2.0 * eps * spec.c4).sqrt();
    let d = 1 + spec.stable.len();
    let scale = (2.0 * PI).powf((d as f64 - 2.0) / 2.0) * eps.powf(d as f64 / 2.0);
    if spec.lambda1 <= 0.0 {
        check_positive_list("stable eigenvalue", &spec.stable)?;
        let prod: f64 = spec.stable.iter().product();
        let l1 = spec.lambda1.abs();
        let psi = psi_plus(l1 / s)?;
        let cap = scale * ((l1 + s) / prod).sqrt() / psi;
        assemble(
            min,
            d,
            spec.value,
            cap,
            eps,
            ErrorOrder::bifurcation(l1, eps),
            "pitchfork_longitudinal_minus",
            Some(psi),
        )
    } else {
        let split = spec
            .split
            .as_ref()
            .ok_or_else(|| invalid("lambda1 > 0 needs the spectrum at the split saddles (see with_leading_order_split)"))?;
        if split.stable.len() != spec.stable.len() {
            return Err(invalid("split-saddle spectrum has the wrong length"));
        }
        check_positive("unstable eigenvalue", split.unstable)?;
        check_positive_list("stable eigenvalue", &split.stable)?;
        let prod: f64 = split.stable.iter().product();
        let psi = psi_minus(split.unstable / s)?;
        let cap = scale * ((split.unstable + s) / prod).sqrt() / psi;
        assemble(
            min,
            d,
            split.value,
            cap,
            eps,
            ErrorOrder::bifurcation(split.unstable, eps),
            "pitchfork_longitudinal_plus",
            Some(psi),
        )
    }
}

/// Normal form ½λ₁y₁² + ½λ₂(y₂²+y₃²) + V₄(y₂,y₃) + ½Σλⱼyⱼ², V₄ = r⁴k(φ).
#[derive(Debug, Clone)]
pub struct DoubleZeroSpec {
    pub value: f64,
    /// |λ₁|
    pub unstable: f64,
    pub lambda2: f64,
    /// λ₄, …, λ_d
    pub stable: Vec<f64>,
    pub k: AngularProfile,
}

/// (ε|log ε|)^{1/2}: the double-zero formulas hold for λ₂ above minus this.
pub fn doublezero_window(eps: f64) -> f64 {
    (eps * eps.ln().abs()).sqrt()
}

pub fn doublezero_time(min: &MinimumSpec, spec: &DoubleZeroSpec, eps: f64) -> Result<RateResult> {
    check_eps(eps)?;
    check_positive("unstable eigenvalue", spec.unstable)?;
    check_positive_list("stable eigenvalue", &spec.stable)?;
    spec.k.check_positive()?;
    let window = doublezero_window(eps);
    let l2 = spec.lambda2;
    if l2 < -window * (1.0 + 1e-12) {
        return Err(invalid(format!(
            "lambda2 = {l2} is below -(eps|log eps|)^(1/2) = {:.6e}; use sombrero_time",
            -window
        )));
    }
    let d = 3 + spec.stable.len();
    let prod: f64 = spec.stable.iter().product();
    let scale = ((2.0 * PI).powf(d as f64 - 2.0) * spec.unstable / prod).sqrt() * eps.powf(d as f64 / 2.0);
    let (avg, tag) = if l2 >= 0.0 {
        let avg = spec.k.average(|k| {
            let s = (2.0 * eps * k).sqrt();
            theta_plus(l2 / s).map(|t| t / (l2 + s)).unwrap_or(f64::NAN)
        })?;
        (avg, "doublezero_plus")
    } else {
        let avg = spec.k.average(|k| {
            let s = (2.0 * eps * k).sqrt();
            let w = (l2 * l2 / (16.0 * eps * k)).exp();
            theta_minus(-l2 / s).map(|t| t / s * w).unwrap_or(f64::NAN)
        })?;
        (avg, "doublezero_minus")
    };
    if !avg.is_finite() {
        return Err(Error::NonConvergence("angular average is not finite".into()));
    }
    assemble(min, d, spec.value, scale * avg, eps, ErrorOrder::bifurcation(l2, eps), tag, Some(avg))
}

/// 2M equivalent saddles z* on the rim of a sombrero-shaped potential.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SombreroSpec {
    /// V(z*)
    pub value: f64,
    /// |μ₁|
    pub unstable: f64,
    /// Angular curvature at the dips.
    pub mu2: f64,
    /// Radial curvature at the dips.
    pub mu3: f64,
    /// μ₄, …, μ_d
    pub stable: Vec<f64>,
    pub m: u32,
    pub c4: f64,
}

pub fn sombrero_time(min: &MinimumSpec, spec: &SombreroSpec, eps: f64) -> Result<RateResult> {
    check_eps(eps)?;
    check_positive("unstable eigenvalue", spec.unstable)?;
    check_positive("mu2", spec.mu2)?;
    check_positive("mu3", spec.mu3)?;
    check_positive("C4", spec.c4)?;
    check_positive_list("stable eigenvalue", &spec.stable)?;
    if spec.m < 2 {
        return Err(Error::Domain {
            name: "sombrero order M",
            value: spec.m as f64,
        });
    }
    let d = 3 + spec.stable.len();
    let two_m = 2.0 * spec.m as f64;
    let q = two_m * two_m * 8.0 * eps * spec.c4;
    let prod: f64 = spec.stable.iter().product();
    let denom = theta_minus(spec.mu3 / (8.0 * eps * spec.c4).sqrt())? * chi(spec.mu2 * spec.mu3 / q)?;
    let cap = two_m
        * ((2.0 * PI).powf(d as f64 - 2.0) * spec.unstable / ((spec.mu2 * spec.mu3 + q) * prod)).sqrt()
        * denom
        * eps.powf(d as f64 / 2.0);
    assemble(min, d, spec.value, cap, eps, ErrorOrder::bifurcation(spec.mu2, eps), "sombrero", Some(denom))
}

/// Expected times on both sides of the double-zero validity boundary λ₂ = ±(ε|log ε|)^{1/2}.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryReport {
    pub eps: f64,
    pub boundary: f64,
    /// Double-zero formula and sombrero formula at λ₂ = −boundary. Times can
    /// overflow for very small ε; the discrepancy below is computed without them.
    pub negative_side: [f64; 2],
    /// Double-zero formula and classical formula (λ₂ = λ₃ = boundary) at λ₂ = +boundary.
    pub positive_side: [f64; 2],
    pub max_relative_discrepancy: f64,
}

/// `base` supplies everything but λ₂; `sombrero_at(λ₂)` builds the rim-saddle data.
pub fn boundary_discrepancy(
    min: &MinimumSpec,
    base: &DoubleZeroSpec,
    sombrero_at: impl Fn(f64) -> Result<SombreroSpec>,
    eps: f64,
) -> Result<BoundaryReport> {
    let w = doublezero_window(eps);
    let at = |l2: f64| DoubleZeroSpec {
        lambda2: l2,
        ..base.clone()
    };
    let dz_neg = doublezero_time(min, &at(-w), eps)?;
    let som = sombrero_time(min, &sombrero_at(-w)?, eps)?;
    let dz_pos = doublezero_time(min, &at(w), eps)?;
    let mut stable = vec![w, w];
    stable.extend_from_slice(&base.stable);
    let classical = ek_classical(min, &SaddleSpec::quadratic(base.value, base.unstable, stable), eps)?;
    // ratio of times without forming e^{barrier/ε}, which overflows for small ε
    let rel = |a: &RateResult, b: &RateResult| {
        let r = a.prefactor / b.prefactor * ((a.barrier - b.barrier) / eps).exp();
        (r - 1.0).abs() / r.min(1.0)
    };
    Ok(BoundaryReport {
        eps,
        boundary: w,
        negative_side: [dz_neg.expected_time, som.expected_time],
        positive_side: [dz_pos.expected_time, classical.expected_time],
        max_relative_discrepancy: rel(&dz_neg, &som).max(rel(&dz_pos, &classical)),
    })
}
