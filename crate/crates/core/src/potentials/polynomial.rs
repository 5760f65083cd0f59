use std::collections::BTreeMap;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{Potential, PotentialModel};
use crate::error::{invalid, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Term {
    pub exponents: Vec<u32>,
    pub coeff: f64,
}

/// JSON form `{"dimension": d, "terms": [{"exponents": [...], "coeff": c}]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolynomialDoc {
    pub dimension: usize,
    pub terms: Vec<Term>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolynomialPotential {
    dim: usize,
    terms: Vec<Term>,
}

impl PolynomialPotential {
    pub fn new(dim: usize, terms: Vec<Term>) -> Result<Self> {
        if dim == 0 {
            return Err(invalid("polynomial dimension must be positive"));
        }
        for t in &terms {
            if t.exponents.len() != dim {
                return Err(invalid(format!(
                    "term exponent vector has length {}, expected {dim}",
                    t.exponents.len()
                )));
            }
            if !t.coeff.is_finite() {
                return Err(invalid("non-finite polynomial coefficient"));
            }
        }
        Ok(Self::collect(dim, terms))
    }

    /// Merge equal monomials and drop zero coefficients.
    fn collect(dim: usize, terms: Vec<Term>) -> Self {
        let mut map: BTreeMap<Vec<u32>, f64> = BTreeMap::new();
        for t in terms {
            *map.entry(t.exponents).or_insert(0.0) += t.coeff;
        }
        let terms = map
            .into_iter()
            .filter(|(_, c)| *c != 0.0)
            .map(|(exponents, coeff)| Term { exponents, coeff })
            .collect();
        Self { dim, terms }
    }

    pub fn from_doc(doc: &PolynomialDoc) -> Result<Self> {
        Self::new(doc.dimension, doc.terms.clone())
    }

    pub fn to_doc(&self) -> PolynomialDoc {
        PolynomialDoc {
            dimension: self.dim,
            terms: self.terms.clone(),
        }
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn into_model(self, name: impl Into<String>) -> PotentialModel {
        PotentialModel::new(name, self)
    }

    /// The polynomial `y ↦ V(A y)` for a square matrix `A`.
    pub fn compose_linear(&self, a: &DMatrix<f64>) -> Result<Self> {
        let d = self.dim;
        if a.nrows() != d || a.ncols() != d {
            return Err(invalid("linear map must be square of the polynomial dimension"));
        }
        // x_i as a linear polynomial in y
        let linear: Vec<BTreeMap<Vec<u32>, f64>> = (0..d)
            .map(|i| {
                let mut m = BTreeMap::new();
                for j in 0..d {
                    if a[(i, j)] != 0.0 {
                        let mut e = vec![0u32; d];
                        e[j] = 1;
                        m.insert(e, a[(i, j)]);
                    }
                }
                m
            })
            .collect();
        let mut out: BTreeMap<Vec<u32>, f64> = BTreeMap::new();
        for t in &self.terms {
            let mut acc: BTreeMap<Vec<u32>, f64> = BTreeMap::new();
            acc.insert(vec![0; d], t.coeff);
            for (i, &e) in t.exponents.iter().enumerate() {
                for _ in 0..e {
                    acc = multiply(&acc, &linear[i]);
                }
            }
            for (k, v) in acc {
                *out.entry(k).or_insert(0.0) += v;
            }
        }
        let terms = out
            .into_iter()
            .map(|(exponents, coeff)| Term { exponents, coeff })
            .collect();
        Ok(Self::collect(d, terms))
    }
}

fn multiply(p: &BTreeMap<Vec<u32>, f64>, q: &BTreeMap<Vec<u32>, f64>) -> BTreeMap<Vec<u32>, f64> {
    let mut out = BTreeMap::new();
    for (ep, cp) in p {
        for (eq, cq) in q {
            let e: Vec<u32> = ep.iter().zip(eq).map(|(a, b)| a + b).collect();
            *out.entry(e).or_insert(0.0) += cp * cq;
        }
    }
    out
}

/// `x^e` differentiated `n` times, i.e. `e!/(e-n)! x^{e-n}`.
fn falling_pow(x: f64, e: u32, n: u32) -> f64 {
    if n > e {
        return 0.0;
    }
    let mut c = 1.0;
    for k in 0..n {
        c *= (e - k) as f64;
    }
    c * x.powi((e - n) as i32)
}

impl Potential for PolynomialPotential {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, x: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|t| {
                t.coeff
                    * t.exponents
                        .iter()
                        .zip(x)
                        .map(|(&e, &xi)| xi.powi(e as i32))
                        .product::<f64>()
            })
            .sum()
    }

    fn gradient_into(&self, x: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|o| *o = 0.0);
        for t in &self.terms {
            for (i, &ei) in t.exponents.iter().enumerate() {
                if ei == 0 {
                    continue;
                }
                let mut v = t.coeff;
                for (j, (&e, &xj)) in t.exponents.iter().zip(x).enumerate() {
                    if j == i {
                        v *= ei as f64 * xj.powi(e as i32 - 1);
                    } else if e > 0 {
                        v *= xj.powi(e as i32);
                    }
                }
                out[i] += v;
            }
        }
    }

    fn partial(&self, x: &[f64], idx: &[usize]) -> f64 {
        let mut counts = vec![0u32; self.dim];
        for &i in idx {
            counts[i] += 1;
        }
        self.terms
            .iter()
            .map(|t| {
                let mut v = t.coeff;
                for ((&e, &n), &xi) in t.exponents.iter().zip(&counts).zip(x) {
                    if n > e {
                        return 0.0;
                    }
                    v *= falling_pow(xi, e, n);
                }
                v
            })
            .sum()
    }

    fn exact_derivatives(&self) -> bool {
        true
    }
}

fn term(exponents: &[u32], coeff: f64) -> Term {
    Term {
        exponents: exponents.to_vec(),
        coeff,
    }
}

/// Two-particle chain in the coordinates rotated by π/4:
/// `−y₁²/2 − (1−2γ)y₂²/2 + (y₁⁴ + 6y₁²y₂² + y₂⁴)/8`.
pub fn rotated_two_particle(gamma: f64) -> PolynomialPotential {
    PolynomialPotential::collect(
        2,
        vec![
            term(&[2, 0], -0.5),
            term(&[0, 2], -(1.0 - 2.0 * gamma) / 2.0),
            term(&[4, 0], 0.125),
            term(&[2, 2], 0.75),
            term(&[0, 4], 0.125),
        ],
    )
}

/// One-dimensional double well `x⁴/4 − x²/2`.
pub fn double_well() -> PolynomialPotential {
    PolynomialPotential::collect(1, vec![term(&[4], 0.25), term(&[2], -0.5)])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partials_of_monomial() {
        let p = PolynomialPotential::new(2, vec![term(&[3, 2], 2.0)]).unwrap();
        let x = [1.5, -0.5];
        // ∂x∂x∂y (2x³y²) = 2·6x·2y
        let expect = 2.0 * 6.0 * 1.5 * 2.0 * -0.5;
        assert!((p.partial(&x, &[0, 1, 0]) - expect).abs() < 1e-12);
        assert_eq!(p.partial(&x, &[1, 1, 1]), 0.0);
    }

    #[test]
    fn gradient_matches_partials() {
        let p = rotated_two_particle(0.3);
        let x = [0.4, -1.1];
        let g = p.gradient(&x);
        assert!((g[0] - p.partial(&x, &[0])).abs() < 1e-14);
        assert!((g[1] - p.partial(&x, &[1])).abs() < 1e-14);
    }
}
