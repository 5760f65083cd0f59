use std::f64::consts::PI;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::polynomial::{PolynomialPotential, Term};
use super::{Potential, PotentialModel};
use crate::error::{invalid, Result};

/// Coupling at which the origin of the two-particle chain changes type.
pub const PITCHFORK_COUPLING_TWO: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChainParams {
    #[serde(rename = "N")]
    pub n: usize,
    pub gamma: f64,
}

/// N particles in the double well `U(x) = x⁴/4 − x²/2` with periodic
/// nearest-neighbour coupling `(γ/4) Σ (x_i − x_{i+1})²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChainPotential {
    n: usize,
    gamma: f64,
}

impl ChainPotential {
    pub fn new(params: ChainParams) -> Result<Self> {
        if params.n < 2 {
            return Err(invalid(format!("chain needs N ≥ 2, got {}", params.n)));
        }
        if !(params.gamma >= 0.0) {
            return Err(invalid(format!("chain needs γ ≥ 0, got {}", params.gamma)));
        }
        Ok(Self {
            n: params.n,
            gamma: params.gamma,
        })
    }

    fn next(&self, i: usize) -> usize {
        (i + 1) % self.n
    }

    fn prev(&self, i: usize) -> usize {
        (i + self.n - 1) % self.n
    }
}

pub fn chain_potential(params: ChainParams) -> Result<PotentialModel> {
    Ok(PotentialModel::new(
        format!("chain(N={}, gamma={})", params.n, params.gamma),
        ChainPotential::new(params)?,
    )
    .confining())
}

impl Potential for ChainPotential {
    fn dim(&self) -> usize {
        self.n
    }

    fn value(&self, x: &[f64]) -> f64 {
        let mut v = 0.0;
        for i in 0..self.n {
            let xi = x[i];
            let dx = xi - x[self.next(i)];
            v += 0.25 * xi.powi(4) - 0.5 * xi * xi + 0.25 * self.gamma * dx * dx;
        }
        v
    }

    fn gradient_into(&self, x: &[f64], out: &mut [f64]) {
        for i in 0..self.n {
            let xi = x[i];
            let lap = 2.0 * xi - x[self.next(i)] - x[self.prev(i)];
            out[i] = xi * xi * xi - xi + 0.5 * self.gamma * lap;
        }
    }

    fn hessian(&self, x: &[f64]) -> DMatrix<f64> {
        let mut h = DMatrix::zeros(self.n, self.n);
        for i in 0..self.n {
            h[(i, i)] += 3.0 * x[i] * x[i] - 1.0 + self.gamma;
            h[(i, self.next(i))] -= 0.5 * self.gamma;
            h[(i, self.prev(i))] -= 0.5 * self.gamma;
        }
        h
    }

    fn partial(&self, x: &[f64], idx: &[usize]) -> f64 {
        match idx.len() {
            0 => self.value(x),
            1 => self.gradient(x)[idx[0]],
            2 => self.hessian(x)[(idx[0], idx[1])],
            k => {
                let i = idx[0];
                if idx.iter().any(|&j| j != i) {
                    return 0.0;
                }
                match k {
                    3 => 6.0 * x[i],
                    4 => 6.0,
                    _ => 0.0,
                }
            }
        }
    }

    fn exact_derivatives(&self) -> bool {
        true
    }
}

/// The chain as an explicit polynomial.
pub fn chain_polynomial(params: ChainParams) -> Result<PolynomialPotential> {
    let c = ChainPotential::new(params)?;
    let n = c.n;
    let mut terms = Vec::new();
    let unit = |i: usize, p: u32| {
        let mut e = vec![0u32; n];
        e[i] = p;
        e
    };
    for i in 0..n {
        let j = c.next(i);
        terms.push(Term { exponents: unit(i, 4), coeff: 0.25 });
        terms.push(Term { exponents: unit(i, 2), coeff: -0.5 + 0.25 * c.gamma });
        terms.push(Term { exponents: unit(j, 2), coeff: 0.25 * c.gamma });
        let mut e = vec![0u32; n];
        e[i] += 1;
        e[j] += 1;
        terms.push(Term { exponents: e, coeff: -0.5 * c.gamma });
    }
    PolynomialPotential::new(n, terms)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FourierMode {
    pub k: i64,
    pub eta: f64,
}

fn mode_range(n: usize) -> std::ops::RangeInclusive<i64> {
    let n = n as i64;
    -((n - 1) / 2)..=n / 2
}

/// Hessian eigenvalues of the chain at the origin, `η_k = −1 + 2γ sin²(kπ/N)`,
/// one per Fourier mode, sorted by k.
pub fn fourier_eigenvalues(n: usize, gamma: f64) -> Result<Vec<FourierMode>> {
    if n < 2 {
        return Err(invalid(format!("chain needs N ≥ 2, got {n}")));
    }
    Ok(mode_range(n)
        .map(|k| {
            let s = (k as f64 * PI / n as f64).sin();
            FourierMode {
                k,
                eta: -1.0 + 2.0 * gamma * s * s,
            }
        })
        .collect())
}

/// Coupling `γ* = 1/(2 sin²(π/N))` at which `η_{±1}` vanishes.
pub fn critical_coupling(n: usize) -> Result<f64> {
    if n < 3 {
        return Err(invalid(format!(
            "critical coupling defined for N ≥ 3 (use PITCHFORK_COUPLING_TWO for N = 2), got {n}"
        )));
    }
    let s = (PI / n as f64).sin();
    Ok(1.0 / (2.0 * s * s))
}

/// Hessian eigenvalues at the synchronised minima `±(1,…,1)`, ascending:
/// `2 + 2γ sin²(kπ/N)`.
pub fn uniform_minimum_spectrum(n: usize, gamma: f64) -> Result<Vec<f64>> {
    if n < 2 {
        return Err(invalid(format!("chain needs N ≥ 2, got {n}")));
    }
    let mut v: Vec<f64> = mode_range(n)
        .map(|k| {
            let s = (k as f64 * PI / n as f64).sin();
            2.0 + 2.0 * gamma * s * s
        })
        .collect();
    v.sort_by(f64::total_cmp);
    Ok(v)
}
