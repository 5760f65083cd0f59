use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::bifurcation::{
    doublezero_time, doublezero_window, pitchfork_longitudinal_time, pitchfork_transverse_time, sombrero_time,
    DoubleZeroSpec, LongitudinalSpec, SombreroSpec, TransverseSpec,
};
use super::{check_eps, AngularProfile, MinimumSpec, RateResult};
use crate::error::{invalid, Result};
use crate::potentials::uniform_minimum_spectrum;

/// One row of a sweep CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub control_parameter: f64,
    pub eps: f64,
    pub barrier: f64,
    pub prefactor: f64,
    pub expected_time: f64,
    pub regime_tag: String,
    pub error_order: String,
}

impl SweepRow {
    fn new(control: f64, r: RateResult) -> Self {
        Self {
            control_parameter: control,
            eps: r.eps,
            barrier: r.barrier,
            prefactor: r.prefactor,
            expected_time: r.expected_time,
            regime_tag: r.regime_tag,
            error_order: r.error_order.expr,
        }
    }
}

/// Evaluate `f` on the grid ε × parameter (ε outer) in parallel; rows keep grid order.
fn run_grid(params: &[f64], eps: &[f64], f: impl Fn(f64, f64) -> Result<RateResult> + Sync) -> Result<Vec<SweepRow>> {
    for &e in eps {
        check_eps(e)?;
    }
    let grid: Vec<(f64, f64)> = eps.iter().flat_map(|&e| params.iter().map(move |&p| (e, p))).collect();
    grid.par_iter()
        .map(|&(e, p)| f(p, e).map(|r| SweepRow::new(p, r)))
        .collect()
}

/// Transverse pitchfork sweep over λ₂; negative values use the leading-order split saddles.
pub fn sweep_transverse(
    min: &MinimumSpec,
    base: &TransverseSpec,
    lambdas: &[f64],
    eps: &[f64],
) -> Result<Vec<SweepRow>> {
    run_grid(lambdas, eps, |l2, e| {
        let spec = TransverseSpec {
            lambda2: l2,
            split: None,
            ..base.clone()
        }
        .with_leading_order_split()?;
        pitchfork_transverse_time(min, &spec, e)
    })
}

/// Longitudinal pitchfork sweep over λ₁; positive values use the leading-order split saddles.
pub fn sweep_longitudinal(
    min: &MinimumSpec,
    base: &LongitudinalSpec,
    lambdas: &[f64],
    eps: &[f64],
) -> Result<Vec<SweepRow>> {
    run_grid(lambdas, eps, |l1, e| {
        let spec = LongitudinalSpec {
            lambda1: l1,
            split: None,
            ..base.clone()
        }
        .with_leading_order_split()?;
        pitchfork_longitudinal_time(min, &spec, e)
    })
}

/// Double-zero sweep over λ₂; fails for λ₂ below the validity window.
pub fn sweep_doublezero(
    min: &MinimumSpec,
    base: &DoubleZeroSpec,
    lambdas: &[f64],
    eps: &[f64],
) -> Result<Vec<SweepRow>> {
    run_grid(lambdas, eps, |l2, e| {
        let spec = DoubleZeroSpec {
            lambda2: l2,
            ..base.clone()
        };
        doublezero_time(min, &spec, e)
    })
}

/// Coefficient D₆ of r⁶cos 6φ in the N = 3 chain normal form, obtained by
/// eliminating the uniform mode through its coupling z₀(z₁³ + z₋₁³)/3.
pub const CHAIN3_SEXTIC: f64 = 1.0 / 72.0;

const CHAIN3_C4: f64 = 1.0 / 8.0;

fn chain3_gamma(lambda2: f64) -> Result<f64> {
    // λ₂ = η₁ = −1 + 2γ sin²(π/3) = −1 + 3γ/2
    let gamma = (1.0 + lambda2) / 1.5;
    if gamma < 0.0 {
        return Err(invalid(format!("lambda2 = {lambda2} corresponds to negative coupling")));
    }
    Ok(gamma)
}

/// Minimum I⁻ = −(1,1,1) of the N = 3 chain at the coupling where η₁ = λ₂.
pub fn chain3_minimum(lambda2: f64) -> Result<MinimumSpec> {
    let spectrum = uniform_minimum_spectrum(3, chain3_gamma(lambda2)?)?;
    MinimumSpec::from_eigenvalues(-0.75, &spectrum)
}

pub fn chain3_doublezero_spec(lambda2: f64) -> DoubleZeroSpec {
    DoubleZeroSpec {
        value: 0.0,
        unstable: 1.0,
        lambda2,
        stable: vec![],
        k: AngularProfile::Constant(3.0 / 24.0),
    }
}

/// Leading-order rim saddles for λ₂ < 0: r*² = −λ₂/4C₄, μ₃ = −2λ₂,
/// μ₂ = (2M)²D₆ r*⁴ = 2λ₂², V(z*) = −λ₂²/16C₄.
pub fn chain3_sombrero_spec(lambda2: f64) -> Result<SombreroSpec> {
    if !(lambda2 < 0.0) {
        return Err(invalid("rim saddles exist only for lambda2 < 0"));
    }
    let m = 3u32;
    let r2 = -lambda2 / (4.0 * CHAIN3_C4);
    Ok(SombreroSpec {
        value: -lambda2 * lambda2 / (16.0 * CHAIN3_C4),
        unstable: 1.0,
        mu2: (2.0 * m as f64).powi(2) * CHAIN3_SEXTIC * r2.powi(m as i32 - 1),
        mu3: -2.0 * lambda2,
        stable: vec![],
        m,
        c4: CHAIN3_C4,
    })
}

/// λ₂-dependence of the N = 3 chain transition time: double-zero formulas
/// for λ₂ ≥ −(ε|log ε|)^{1/2}, sombrero formula below.
pub fn sweep_chain3(lambdas: &[f64], eps: &[f64]) -> Result<Vec<SweepRow>> {
    run_grid(lambdas, eps, |l2, e| {
        let min = chain3_minimum(l2)?;
        if l2 >= -doublezero_window(e) {
            doublezero_time(&min, &chain3_doublezero_spec(l2), e)
        } else {
            sombrero_time(&min, &chain3_sombrero_spec(l2)?, e)
        }
    })
}

/// Double-zero formulas alone for the N = 3 chain; fails below the validity window.
pub fn sweep_chain3_doublezero(lambdas: &[f64], eps: &[f64]) -> Result<Vec<SweepRow>> {
    run_grid(lambdas, eps, |l2, e| doublezero_time(&chain3_minimum(l2)?, &chain3_doublezero_spec(l2), e))
}
