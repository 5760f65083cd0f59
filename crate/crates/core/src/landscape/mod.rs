//! Stationary points and their classification.
//!
//! A stationary point is sorted by how many Hessian eigenvalues vanish:
//! none (minimum or ordinary saddle), one (codimension 1, decided by the
//! normal-form coefficients C₃ and C₄), two (codimension 2, decided by the
//! discriminant of the leading homogeneous part on the null plane), or more
//! (reported only). A grid oracle computes communication heights in d = 2.

mod classify;
mod gate;
mod roots;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::potentials::{Potential, PotentialModel};

pub use classify::{
    classify, codim1_coefficients, codim2_form, ClassDetail, ClassifyOptions, ClassificationReport, HigherCodimReport,
    HigherOrderProbe, NormalFormCodim1, NormalFormCodim2, RootAnalysis, SaddleClass, Tag, Verdict,
};
pub use gate::{communication_height_2d, GateResult, GridSpec};
pub use roots::{real_roots, RealRoots};

/// Relative threshold below which an eigenvalue counts as zero.
pub const DEFAULT_ZERO_TOL: f64 = 1e-6;

#[derive(Debug, Clone)]
pub struct StationaryPoint {
    pub location: Vec<f64>,
    pub value: f64,
    pub gradient_norm: f64,
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    /// Orthonormal eigenvectors as columns, matching `eigenvalues`.
    pub eigenvectors: DMatrix<f64>,
    pub zero_indices: Vec<usize>,
}

impl StationaryPoint {
    /// Evaluate value, gradient and sorted Hessian spectrum at `x`.
    pub fn at(model: &PotentialModel, x: &[f64], zero_tol: f64) -> Self {
        let (eigenvalues, eigenvectors) = sorted_eigen(&model.hessian(x));
        let zero_indices = zero_indices(&eigenvalues, zero_tol);
        Self {
            location: x.to_vec(),
            value: model.value(x),
            gradient_norm: model.gradient(x).norm(),
            eigenvalues,
            eigenvectors,
            zero_indices,
        }
    }

    pub fn dim(&self) -> usize {
        self.location.len()
    }

    pub fn eigenvector(&self, i: usize) -> Vec<f64> {
        self.eigenvectors.column(i).iter().copied().collect()
    }

    /// Indices of strictly negative (non-zero) eigenvalues.
    pub fn negative_indices(&self) -> Vec<usize> {
        (0..self.eigenvalues.len())
            .filter(|i| self.eigenvalues[*i] < 0.0 && !self.zero_indices.contains(i))
            .collect()
    }

    pub fn positive_indices(&self) -> Vec<usize> {
        (0..self.eigenvalues.len())
            .filter(|i| self.eigenvalues[*i] > 0.0 && !self.zero_indices.contains(i))
            .collect()
    }

    pub fn hessian_det(&self) -> f64 {
        self.eigenvalues.iter().product()
    }
}

pub(crate) fn zero_indices(eigenvalues: &[f64], zero_tol: f64) -> Vec<usize> {
    let radius = eigenvalues.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let thr = zero_tol * radius.max(1.0);
    (0..eigenvalues.len()).filter(|&i| eigenvalues[i].abs() < thr).collect()
}

/// Symmetric eigendecomposition with ascending eigenvalues and each
/// eigenvector oriented so that its first non-negligible component is positive.
pub fn sorted_eigen(h: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let sym = (h + h.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let d = h.nrows();
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let mut vecs = DMatrix::zeros(d, d);
    let mut vals = Vec::with_capacity(d);
    for (col, &k) in order.iter().enumerate() {
        vals.push(eig.eigenvalues[k]);
        let mut v: DVector<f64> = eig.eigenvectors.column(k).into_owned();
        if let Some(first) = v.iter().find(|c| c.abs() > 1e-12) {
            if *first < 0.0 {
                v = -v;
            }
        }
        vecs.set_column(col, &v);
    }
    (vals, vecs)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedFailure {
    pub seed_index: usize,
    pub seed: Vec<f64>,
    pub reason: String,
    pub final_gradient_norm: f64,
}

#[derive(Debug, Clone, Default)]
pub struct StationarySearch {
    pub points: Vec<StationaryPoint>,
    /// For each seed, the index into `points` it converged to.
    pub seed_to_point: Vec<Option<usize>>,
    pub failures: Vec<SeedFailure>,
}

const MAX_NEWTON_ITER: usize = 500;

/// Newton refinement of `∇V = 0` from each seed, with a backtracking line
/// search on `‖∇V‖` and a pseudo-inverse for (near-)singular Hessians.
/// Points closer than `max(10·tol, 1e-6)` are merged.
pub fn find_stationary_points(model: &PotentialModel, seeds: &[Vec<f64>], tol: f64) -> StationarySearch {
    find_stationary_points_with(model, seeds, tol, DEFAULT_ZERO_TOL)
}

pub fn find_stationary_points_with(
    model: &PotentialModel,
    seeds: &[Vec<f64>],
    tol: f64,
    zero_tol: f64,
) -> StationarySearch {
    let mut out = StationarySearch::default();
    let merge = (10.0 * tol).max(1e-6);
    for (i, seed) in seeds.iter().enumerate() {
        match newton(model, seed, tol) {
            Ok(x) => {
                let existing = out.points.iter().position(|p| {
                    p.location
                        .iter()
                        .zip(&x)
                        .map(|(a, b)| (a - b).powi(2))
                        .sum::<f64>()
                        .sqrt()
                        <= merge
                });
                let idx = match existing {
                    Some(k) => k,
                    None => {
                        out.points.push(StationaryPoint::at(model, &x, zero_tol));
                        out.points.len() - 1
                    }
                };
                out.seed_to_point.push(Some(idx));
            }
            Err((reason, gnorm)) => {
                out.seed_to_point.push(None);
                out.failures.push(SeedFailure {
                    seed_index: i,
                    seed: seed.clone(),
                    reason,
                    final_gradient_norm: gnorm,
                });
            }
        }
    }
    out
}

fn newton(model: &PotentialModel, seed: &[f64], tol: f64) -> Result<Vec<f64>, (String, f64)> {
    let d = model.dim();
    if seed.len() != d {
        return Err((format!("seed has dimension {}, expected {d}", seed.len()), f64::NAN));
    }
    if seed.iter().any(|v| !v.is_finite()) {
        return Err(("seed is not finite".into(), f64::NAN));
    }
    let mut x = DVector::from_column_slice(seed);
    let mut g = model.gradient(x.as_slice());
    let mut gnorm = g.norm();
    for _ in 0..MAX_NEWTON_ITER {
        if gnorm <= tol {
            return Ok(polish(model, x, gnorm));
        }
        let h = model.hessian(x.as_slice());
        let svd = h.svd(true, true);
        let smax = svd.singular_values.max();
        let step = match svd.solve(&g, 1e-13 * smax.max(1e-300)) {
            Ok(s) => -s,
            Err(e) => return Err((format!("linear solve failed: {e}"), gnorm)),
        };
        let mut t = 1.0;
        let mut accepted = false;
        while t > 1e-6 {
            let trial = &x + &step * t;
            let gt = model.gradient(trial.as_slice());
            let nt = gt.norm();
            if nt.is_finite() && nt < gnorm {
                x = trial;
                g = gt;
                gnorm = nt;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            return Err(("line search stalled".into(), gnorm));
        }
    }
    if gnorm <= tol {
        Ok(polish(model, x, gnorm))
    } else {
        Err((format!("no convergence after {MAX_NEWTON_ITER} Newton steps"), gnorm))
    }
}

/// Extra full Newton steps past the tolerance. Near a degenerate point the
/// gradient vanishes to third order, so a small gradient still leaves the
/// location off by about tol^(1/3); Newton keeps contracting linearly there.
fn polish(model: &PotentialModel, mut x: DVector<f64>, mut gnorm: f64) -> Vec<f64> {
    for _ in 0..200 {
        if gnorm == 0.0 {
            break;
        }
        let g = model.gradient(x.as_slice());
        let svd = model.hessian(x.as_slice()).svd(true, true);
        let smax = svd.singular_values.max();
        let Ok(step) = svd.solve(&g, 1e-13 * smax.max(1e-300)) else { break };
        let trial = &x - &step;
        let nt = model.gradient(trial.as_slice()).norm();
        if !(nt <= gnorm) {
            break;
        }
        x = trial;
        gnorm = nt;
        if step.norm() <= 1e-14 * x.norm().max(1.0) {
            break;
        }
    }
    x.iter().copied().collect()
}
