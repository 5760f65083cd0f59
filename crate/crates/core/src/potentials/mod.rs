//! Potential models `V: ℝ^d → ℝ` with derivatives up to order four.
//!
//! Built-in families (polynomials, the periodic double-well chain) carry
//! exact derivatives; user closures fall back to central differences with
//! step `h_k = ε_mach^{1/(2+k)} · max(1, ‖x‖)` for a k-th derivative.

mod chain;
mod polynomial;
mod spec;

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

pub use chain::{
    chain_polynomial, chain_potential, critical_coupling, fourier_eigenvalues, uniform_minimum_spectrum,
    ChainParams, ChainPotential, FourierMode, PITCHFORK_COUPLING_TWO,
};
pub use polynomial::{double_well, rotated_two_particle, PolynomialDoc, PolynomialPotential, Term};
pub use spec::{load_potential_file, PotentialSpec};

pub trait Potential: Send + Sync + fmt::Debug {
    fn dim(&self) -> usize;

    fn value(&self, x: &[f64]) -> f64;

    fn gradient(&self, x: &[f64]) -> DVector<f64> {
        let mut g = vec![0.0; self.dim()];
        self.gradient_into(x, &mut g);
        DVector::from_vec(g)
    }

    /// Gradient written into `out`; the SDE sampler calls this in its hot loop.
    fn gradient_into(&self, x: &[f64], out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate() {
            *o = fd_partial(&|y| self.value(y), x, &[i]);
        }
    }

    fn hessian(&self, x: &[f64]) -> DMatrix<f64> {
        let d = self.dim();
        let mut h = DMatrix::zeros(d, d);
        for i in 0..d {
            for j in i..d {
                let v = self.partial(x, &[i, j]);
                h[(i, j)] = v;
                h[(j, i)] = v;
            }
        }
        h
    }

    /// Mixed partial derivative `∂^k V / ∂x_{idx[0]} ⋯ ∂x_{idx[k-1]}`.
    fn partial(&self, x: &[f64], idx: &[usize]) -> f64 {
        fd_partial(&|y| self.value(y), x, idx)
    }

    /// k-th directional derivative `D^k V(x)[u_1, …, u_k]`.
    fn directional(&self, x: &[f64], dirs: &[&[f64]]) -> f64 {
        if self.exact_derivatives() {
            contract(self, x, dirs)
        } else {
            fd_directional(&|y| self.value(y), x, dirs)
        }
    }

    fn exact_derivatives(&self) -> bool {
        false
    }
}

/// Sum over index tuples of exact partials weighted by direction components.
fn contract<P: Potential + ?Sized>(p: &P, x: &[f64], dirs: &[&[f64]]) -> f64 {
    let d = p.dim();
    let k = dirs.len();
    if k == 0 {
        return p.value(x);
    }
    let mut idx = vec![0usize; k];
    let mut total = 0.0;
    loop {
        let w: f64 = idx.iter().zip(dirs).map(|(&i, u)| u[i]).product();
        if w != 0.0 {
            total += w * p.partial(x, &idx);
        }
        let mut m = 0;
        loop {
            if m == k {
                return total;
            }
            idx[m] += 1;
            if idx[m] < d {
                break;
            }
            idx[m] = 0;
            m += 1;
        }
    }
}

/// Finite-difference step for a k-th derivative at `x`.
pub fn fd_step(order: usize, x: &[f64]) -> f64 {
    let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    f64::EPSILON.powf(1.0 / (2.0 + order as f64)) * norm.max(1.0)
}

/// Central-difference mixed partial: the product of one-dimensional central
/// difference operators along each index.
pub fn fd_partial(f: &dyn Fn(&[f64]) -> f64, x: &[f64], idx: &[usize]) -> f64 {
    let d = x.len();
    let dirs: Vec<Vec<f64>> = idx
        .iter()
        .map(|&i| {
            let mut e = vec![0.0; d];
            e[i] = 1.0;
            e
        })
        .collect();
    let refs: Vec<&[f64]> = dirs.iter().map(|v| v.as_slice()).collect();
    fd_directional(f, x, &refs)
}

pub fn fd_directional(f: &dyn Fn(&[f64]) -> f64, x: &[f64], dirs: &[&[f64]]) -> f64 {
    let k = dirs.len();
    if k == 0 {
        return f(x);
    }
    let h = fd_step(k, x);
    let mut y = vec![0.0; x.len()];
    let mut total = 0.0;
    for mask in 0..(1usize << k) {
        let mut sign = 1.0;
        y.copy_from_slice(x);
        for (m, u) in dirs.iter().enumerate() {
            let s = if mask & (1 << m) != 0 { -1.0 } else { 1.0 };
            sign *= s;
            for (yi, ui) in y.iter_mut().zip(u.iter()) {
                *yi += s * h * ui;
            }
        }
        total += sign * f(&y);
    }
    total / (2.0 * h).powi(k as i32)
}

/// A potential given only by a value closure; derivatives are finite differences.
#[derive(Clone)]
pub struct ClosurePotential {
    dim: usize,
    f: Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>,
}

impl ClosurePotential {
    pub fn new(dim: usize, f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        Self { dim, f: Arc::new(f) }
    }
}

impl fmt::Debug for ClosurePotential {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ClosurePotential").field("dim", &self.dim).finish()
    }
}

impl Potential for ClosurePotential {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, x: &[f64]) -> f64 {
        (self.f)(x)
    }
}

/// Growth condition at infinity. Asserted by the caller, never checked.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Confinement {
    pub asserted: bool,
    /// Inert bookkeeping for the integrability constants of the growth condition.
    pub a0: Option<f64>,
    pub c_a: Option<f64>,
}

/// A potential together with its metadata. Cheap to clone and share between threads.
#[derive(Debug, Clone)]
pub struct PotentialModel {
    inner: Arc<dyn Potential>,
    pub name: String,
    /// Smoothness order r (V of class C^{r+1}).
    pub smoothness: u32,
    pub confinement: Confinement,
}

impl PotentialModel {
    pub fn new(name: impl Into<String>, inner: impl Potential + 'static) -> Self {
        Self {
            inner: Arc::new(inner),
            name: name.into(),
            smoothness: 4,
            confinement: Confinement::default(),
        }
    }

    pub fn confining(mut self) -> Self {
        self.confinement.asserted = true;
        self
    }

    pub fn from_closure(name: impl Into<String>, dim: usize, f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        Self::new(name, ClosurePotential::new(dim, f))
    }
}

impl Potential for PotentialModel {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn value(&self, x: &[f64]) -> f64 {
        self.inner.value(x)
    }

    fn gradient(&self, x: &[f64]) -> DVector<f64> {
        self.inner.gradient(x)
    }

    fn gradient_into(&self, x: &[f64], out: &mut [f64]) {
        self.inner.gradient_into(x, out)
    }

    fn hessian(&self, x: &[f64]) -> DMatrix<f64> {
        self.inner.hessian(x)
    }

    fn partial(&self, x: &[f64], idx: &[usize]) -> f64 {
        self.inner.partial(x, idx)
    }

    fn directional(&self, x: &[f64], dirs: &[&[f64]]) -> f64 {
        self.inner.directional(x, dirs)
    }

    fn exact_derivatives(&self) -> bool {
        self.inner.exact_derivatives()
    }
}
