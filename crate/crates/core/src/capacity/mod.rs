//! Numerical capacities on a box around a saddle.
//!
//! In the saddle's eigenbasis, with y₁ the unstable (or soft unstable)
//! direction, the box is `[−δ₁, δ₁] × B_{δ₂} × Π[−δⱼ, δⱼ]`. The upper bound
//! inserts the one-dimensional trial function built from V along y₁ into
//! the Dirichlet form; the lower bound integrates the inverse fiber
//! integrals `1/∫e^{V(t,y⊥)/ε}dt` over the transverse section. Both use the
//! same tensor Gauss-Legendre grid, so the discrete Cauchy-Schwarz
//! inequality keeps `lower ≤ upper` exactly.

mod closed;

use std::f64::consts::PI;

use nalgebra::DVector;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::landscape::StationaryPoint;
use crate::potentials::{Potential, PotentialModel};
use crate::quadrature::{gauss_legendre_composite, integrate, QuadConfig};

pub use closed::{closed_form_capacity, verification_report, ClosedForm, VerificationReport};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxSpec {
    /// Half-width along y₁.
    pub delta1: f64,
    /// Radius of the ball in the soft transverse directions (or half-width
    /// along the first transverse direction when none is soft).
    pub delta2: f64,
    /// Half-widths along the remaining quadratic directions.
    pub deltaj: Vec<f64>,
    pub eps: f64,
}

impl BoxSpec {
    fn validate(&self) -> Result<()> {
        let all = [self.delta1, self.delta2].into_iter().chain(self.deltaj.iter().copied());
        for w in all {
            if !(w > 0.0) || !w.is_finite() {
                return Err(Error::Domain {
                    name: "box half-width",
                    value: w,
                });
            }
        }
        if !(self.eps > 0.0) {
            return Err(Error::Domain {
                name: "eps",
                value: self.eps,
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CapacityMethod {
    ReducedIntegral,
    DirichletUpper,
    FiberLower,
    Exact1d,
}

/// Tensor-grid resolution per axis: `panels` Gauss-Legendre panels of `order` nodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CapacityGrid {
    pub panels: usize,
    pub order: usize,
}

impl Default for CapacityGrid {
    fn default() -> Self {
        Self { panels: 24, order: 8 }
    }
}

impl CapacityGrid {
    pub fn refined(self) -> Self {
        Self {
            panels: 2 * self.panels,
            order: self.order,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CapacityEstimate {
    pub value: f64,
    pub method: CapacityMethod,
    pub eps: f64,
    #[serde(rename = "box")]
    pub box_spec: Option<BoxSpec>,
    pub grid: Option<CapacityGrid>,
    pub caveats: Vec<String>,
    pub warnings: Vec<String>,
}

/// `ε ∫_{B_{δ₂}} e^{−u₂/ε} / ∫_{−δ₁}^{δ₁} e^{−u₁/ε} · Π √(2πε/λⱼ)`.
///
/// `u2` acts on `q − 1 ∈ {0, 1, 2}` coordinates; with `q = 1` the ball
/// integral is taken as 1. Integrals are adaptive; a two-dimensional ball is
/// integrated in polar coordinates.
pub fn reduced_capacity(
    u1: &dyn Fn(f64) -> f64,
    u2: &dyn Fn(&[f64]) -> f64,
    q: usize,
    lambdas: &[f64],
    eps: f64,
    box_spec: &BoxSpec,
) -> Result<CapacityEstimate> {
    box_spec.validate()?;
    if (box_spec.eps - eps).abs() > 1e-15 * eps {
        return Err(invalid("box was built for a different eps"));
    }
    if let Some(l) = lambdas.iter().find(|l| !(**l > 0.0)) {
        return Err(Error::Domain {
            name: "quadratic eigenvalue",
            value: *l,
        });
    }
    let cfg = QuadConfig {
        abs_tol: 0.0,
        rel_tol: 1e-11,
        max_subdivisions: 400,
    };
    let mut warnings = Vec::new();
    let mut check = |name: &str, r: &crate::quadrature::QuadResult| {
        if !r.converged {
            warnings.push(format!(
                "{name} integral stopped at error {:.3e} on value {:.6e}",
                r.abs_error, r.value
            ));
        }
    };
    let d1 = box_spec.delta1;
    let den = integrate(|y| (-u1(y) / eps).exp(), -d1, d1, &cfg);
    check("unstable", &den);
    let d2 = box_spec.delta2;
    let num = match q {
        1 => 1.0,
        2 => {
            let r = integrate(|y| (-u2(&[y]) / eps).exp(), -d2, d2, &cfg);
            check("transverse", &r);
            r.value
        }
        3 => {
            let inner_cfg = QuadConfig {
                rel_tol: 1e-12,
                ..cfg
            };
            let r = integrate(
                |r| {
                    let ring = integrate(
                        |phi| (-u2(&[r * phi.cos(), r * phi.sin()]) / eps).exp(),
                        0.0,
                        2.0 * PI,
                        &inner_cfg,
                    );
                    r * ring.value
                },
                0.0,
                d2,
                &cfg,
            );
            check("transverse", &r);
            r.value
        }
        _ => return Err(invalid(format!("reduced_capacity supports q in 1..=3, got {q}"))),
    };
    let gauss: f64 = lambdas.iter().map(|l| (2.0 * PI * eps / l).sqrt()).product();
    Ok(CapacityEstimate {
        value: eps * num / den.value * gauss,
        method: CapacityMethod::ReducedIntegral,
        eps,
        box_spec: Some(box_spec.clone()),
        grid: None,
        caveats: vec![],
        warnings,
    })
}

/// `ε / ∫_a^b e^{V(t)/ε} dt`, exact in one dimension.
pub fn capacity_1d_exact(v: &dyn Fn(f64) -> f64, a: f64, b: f64, eps: f64) -> Result<CapacityEstimate> {
    if !(a < b) {
        return Err(invalid(format!("need a < b, got [{a}, {b}]")));
    }
    if !(eps > 0.0) {
        return Err(Error::Domain { name: "eps", value: eps });
    }
    // Shift by the sampled maximum so the exponent stays bounded.
    let vmax = (0..=2000)
        .map(|i| v(a + (b - a) * i as f64 / 2000.0))
        .fold(f64::NEG_INFINITY, f64::max);
    let cfg = QuadConfig {
        abs_tol: 0.0,
        rel_tol: 1e-13,
        max_subdivisions: 1000,
    };
    let r = integrate(|t| ((v(t) - vmax) / eps).exp(), a, b, &cfg);
    let mut warnings = Vec::new();
    if !r.converged {
        warnings.push(format!("integral stopped at relative error {:.3e}", r.abs_error / r.value));
    }
    Ok(CapacityEstimate {
        value: eps * (-vmax / eps).exp() / r.value,
        method: CapacityMethod::Exact1d,
        eps,
        box_spec: None,
        grid: None,
        caveats: vec![],
        warnings,
    })
}

/// Orthonormal frame at a saddle: y₁ first, then soft transverse
/// directions, then quadratic ones by increasing eigenvalue.
#[derive(Debug, Clone)]
pub(crate) struct Frame {
    pub origin: Vec<f64>,
    pub value: f64,
    pub axis1: Vec<f64>,
    pub soft: Vec<Vec<f64>>,
    pub quadratic: Vec<(Vec<f64>, f64)>,
}

pub(crate) fn saddle_frame(saddle: &StationaryPoint) -> Result<Frame> {
    let d = saddle.dim();
    if d > 3 {
        return Err(invalid(format!("capacity quadrature is limited to d <= 3, got d = {d}")));
    }
    let neg = saddle.negative_indices();
    let zeros = &saddle.zero_indices;
    let first = match (neg.as_slice(), zeros.as_slice()) {
        ([i], _) => *i,
        ([], [z, ..]) => *z,
        ([], []) => return Err(invalid("point has no unstable or soft direction; not a saddle")),
        _ => return Err(invalid("point has more than one negative eigenvalue; not a saddle")),
    };
    let soft = zeros
        .iter()
        .filter(|&&i| i != first)
        .map(|&i| saddle.eigenvector(i))
        .collect();
    let quadratic = saddle
        .positive_indices()
        .into_iter()
        .map(|i| (saddle.eigenvector(i), saddle.eigenvalues[i]))
        .collect();
    Ok(Frame {
        origin: saddle.location.clone(),
        value: saddle.value,
        axis1: saddle.eigenvector(first),
        soft,
        quadratic,
    })
}

impl Frame {
    fn point(&self, y1: f64, transverse: &[f64], out: &mut [f64]) {
        out.copy_from_slice(&self.origin);
        let dirs = std::iter::once(&self.axis1)
            .chain(self.soft.iter())
            .chain(self.quadratic.iter().map(|(v, _)| v));
        let coords = std::iter::once(&y1).chain(transverse.iter());
        for (dir, c) in dirs.zip(coords) {
            for (o, v) in out.iter_mut().zip(dir) {
                *o += c * v;
            }
        }
    }

    fn transverse_dim(&self) -> usize {
        self.soft.len() + self.quadratic.len()
    }
}

/// Smallest t > 0 with `g(t) ≥ target`, scanning outwards then bisecting.
fn first_crossing(mut g: impl FnMut(f64) -> f64, target: f64, scale: f64) -> Option<f64> {
    let h = 1e-3 * scale;
    let mut lo = 0.0;
    let mut t = h;
    while t <= 50.0 * scale {
        if g(t) >= target {
            let mut hi = t;
            for _ in 0..100 {
                let mid = 0.5 * (lo + hi);
                if g(mid) >= target {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            return Some(hi);
        }
        lo = t;
        t += h;
    }
    None
}

/// Box from the threshold equations: V drops by dε|log ε| at ±δ₁ along y₁
/// and rises by 2dε|log ε| at the edge of every transverse direction.
pub fn default_box(model: &PotentialModel, saddle: &StationaryPoint, eps: f64) -> Result<BoxSpec> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::Domain {
            name: "eps (default box needs 0 < eps < 1)",
            value: eps,
        });
    }
    let frame = saddle_frame(saddle)?;
    let d = model.dim() as f64;
    let level = d * eps * eps.ln().abs();
    let mut buf = vec![0.0; model.dim()];
    let along = |dir: &[f64], t: f64, buf: &mut [f64]| {
        for (b, (o, v)) in buf.iter_mut().zip(frame.origin.iter().zip(dir)) {
            *b = o + t * v;
        }
        model.value(buf) - frame.value
    };
    let solve = |dir: &[f64], sign: f64, target: f64, buf: &mut Vec<f64>| -> Result<f64> {
        let mut widest: f64 = 0.0;
        for s in [1.0, -1.0] {
            let t = first_crossing(|t| sign * along(dir, s * t, buf), target, 1.0).ok_or_else(|| {
                Error::NonConvergence(format!("no box edge where V changes by {target:.4e} along a saddle axis"))
            })?;
            widest = widest.max(t);
        }
        Ok(widest)
    };
    let delta1 = solve(&frame.axis1, -1.0, level, &mut buf)?;
    let mut transverse: Vec<f64> = Vec::new();
    match frame.soft.len() {
        2 => {
            // radius: widest crossing over 16 directions in the soft plane
            let mut r: f64 = 0.0;
            for k in 0..16 {
                let phi = PI * k as f64 / 16.0;
                let dir: Vec<f64> = frame.soft[0]
                    .iter()
                    .zip(&frame.soft[1])
                    .map(|(a, b)| phi.cos() * a + phi.sin() * b)
                    .collect();
                r = r.max(solve(&dir, 1.0, 2.0 * level, &mut buf)?);
            }
            transverse.push(r);
        }
        _ => {
            for dir in &frame.soft {
                transverse.push(solve(dir, 1.0, 2.0 * level, &mut buf)?);
            }
        }
    }
    for (dir, _) in &frame.quadratic {
        transverse.push(solve(dir, 1.0, 2.0 * level, &mut buf)?);
    }
    let delta2 = transverse.first().copied().unwrap_or(delta1);
    Ok(BoxSpec {
        delta1,
        delta2,
        deltaj: transverse.into_iter().skip(1).collect(),
        eps,
    })
}

/// Transverse quadrature nodes (coordinates in the frame, weight).
fn transverse_nodes(frame: &Frame, b: &BoxSpec, grid: &CapacityGrid) -> Result<Vec<(Vec<f64>, f64)>> {
    let m = frame.transverse_dim();
    let mut widths = Vec::with_capacity(m);
    if m > 0 {
        widths.push(b.delta2);
        widths.extend_from_slice(&b.deltaj);
    }
    let disk = frame.soft.len() == 2;
    let expected = if disk { 1 } else { m };
    if (m == 0 && !b.deltaj.is_empty()) || (m > 0 && widths.len() != expected) {
        return Err(invalid(format!(
            "box has {} transverse widths but the saddle has {} transverse directions",
            widths.len(),
            m
        )));
    }
    if m == 0 {
        return Ok(vec![(vec![], 1.0)]);
    }
    if disk {
        let (r, wr) = gauss_legendre_composite(0.0, b.delta2, grid.panels, grid.order);
        let (phi, wphi) = gauss_legendre_composite(0.0, 2.0 * PI, 2 * grid.panels, grid.order);
        let mut out = Vec::with_capacity(r.len() * phi.len());
        for (ri, wri) in r.iter().zip(&wr) {
            for (p, wp) in phi.iter().zip(&wphi) {
                out.push((vec![ri * p.cos(), ri * p.sin()], ri * wri * wp));
            }
        }
        return Ok(out);
    }
    let axes: Vec<(Vec<f64>, Vec<f64>)> = widths
        .iter()
        .map(|&w| gauss_legendre_composite(-w, w, grid.panels, grid.order))
        .collect();
    let mut out: Vec<(Vec<f64>, f64)> = vec![(vec![], 1.0)];
    for (x, w) in &axes {
        let mut next = Vec::with_capacity(out.len() * x.len());
        for (c, wc) in &out {
            for (xi, wi) in x.iter().zip(w) {
                let mut p = c.clone();
                p.push(*xi);
                next.push((p, wc * wi));
            }
        }
        out = next;
    }
    Ok(out)
}

struct Prepared {
    frame: Frame,
    y1: Vec<f64>,
    w1: Vec<f64>,
    nodes: Vec<(Vec<f64>, f64)>,
    warnings: Vec<String>,
}

fn prepare(model: &PotentialModel, saddle: &StationaryPoint, b: &BoxSpec, grid: &CapacityGrid) -> Result<Prepared> {
    b.validate()?;
    if model.dim() != saddle.dim() {
        return Err(invalid("saddle dimension does not match the model"));
    }
    if grid.panels == 0 || grid.order == 0 {
        return Err(invalid("grid needs at least one panel and one node"));
    }
    let frame = saddle_frame(saddle)?;
    let (y1, w1) = gauss_legendre_composite(-b.delta1, b.delta1, grid.panels, grid.order);
    let nodes = transverse_nodes(&frame, b, grid)?;
    let warnings = box_warnings(model, &frame, b);
    Ok(Prepared {
        frame,
        y1,
        w1,
        nodes,
        warnings,
    })
}

fn box_warnings(model: &PotentialModel, frame: &Frame, b: &BoxSpec) -> Vec<String> {
    let mut out = Vec::new();
    let eps = b.eps;
    let level = model.dim() as f64 * eps * eps.ln().abs();
    let mut buf = vec![0.0; model.dim()];
    let zeros = vec![0.0; frame.transverse_dim()];
    for s in [1.0, -1.0] {
        frame.point(s * b.delta1, &zeros, &mut buf);
        let drop = frame.value - model.value(&buf);
        if drop < level * (1.0 - 1e-9) {
            out.push(format!(
                "V drops by only {drop:.4e} at y1 = {:+.4e}, below d eps|log eps| = {level:.4e}",
                s * b.delta1
            ));
        }
    }
    let r = model.smoothness as i32;
    let size = b.delta1 + b.delta2;
    if size.powi(r + 1) > eps * eps.ln().abs() {
        out.push(format!(
            "(delta1 + delta2)^{} = {:.3e} is not small against eps|log eps| = {:.3e}",
            r + 1,
            size.powi(r + 1),
            eps * eps.ln().abs()
        ));
    }
    out
}

/// Dirichlet form of the trial function `f(y₁) ∝ ∫_{y₁}^{δ₁} e^{V(t,0)/ε}dt` on the box.
pub fn dirichlet_upper_bound(
    model: &PotentialModel,
    saddle: &StationaryPoint,
    box_spec: &BoxSpec,
    grid: &CapacityGrid,
) -> Result<CapacityEstimate> {
    let p = prepare(model, saddle, box_spec, grid)?;
    let eps = box_spec.eps;
    let d = model.dim();
    let zeros = vec![0.0; p.frame.transverse_dim()];
    let mut buf = vec![0.0; d];
    // W(y₁, 0) = V − V(z) on the axis
    let axis: Vec<f64> = p
        .y1
        .iter()
        .map(|&y| {
            p.frame.point(y, &zeros, &mut buf);
            model.value(&buf) - p.frame.value
        })
        .collect();
    let norm: f64 = axis.iter().zip(&p.w1).map(|(w, wt)| wt * (w / eps).exp()).sum();
    let per_node: Vec<f64> = p
        .nodes
        .par_iter()
        .map_init(
            || vec![0.0; d],
            |buf, (yt, wt)| {
                let mut s = 0.0;
                for ((y, w1), wa) in p.y1.iter().zip(&p.w1).zip(&axis) {
                    p.frame.point(*y, yt, buf);
                    let wv = model.value(buf) - p.frame.value;
                    s += w1 * ((2.0 * wa - wv) / eps).exp();
                }
                wt * s
            },
        )
        .collect();
    let total: f64 = per_node.iter().sum();
    finish(
        eps * total / (norm * norm) * (-p.frame.value / eps).exp(),
        CapacityMethod::DirichletUpper,
        box_spec,
        grid,
        p.warnings,
        vec!["contribution from outside the box dropped".into()],
    )
}

/// `ε ∫_{C⊥} [∫_{−δ₁}^{δ₁} e^{V(t,y⊥)/ε}dt]^{−1} dy⊥` with boundary values 1 and 0.
pub fn fiber_lower_bound(
    model: &PotentialModel,
    saddle: &StationaryPoint,
    box_spec: &BoxSpec,
    grid: &CapacityGrid,
) -> Result<CapacityEstimate> {
    let p = prepare(model, saddle, box_spec, grid)?;
    let eps = box_spec.eps;
    let d = model.dim();
    let per_node: Vec<f64> = p
        .nodes
        .par_iter()
        .map_init(
            || vec![0.0; d],
            |buf, (yt, wt)| {
                let mut fiber = 0.0;
                for (y, w1) in p.y1.iter().zip(&p.w1) {
                    p.frame.point(*y, yt, buf);
                    fiber += w1 * ((model.value(buf) - p.frame.value) / eps).exp();
                }
                wt / fiber
            },
        )
        .collect();
    let total: f64 = per_node.iter().sum();
    finish(
        eps * total * (-p.frame.value / eps).exp(),
        CapacityMethod::FiberLower,
        box_spec,
        grid,
        p.warnings,
        vec![
            "contribution from outside the box dropped".into(),
            "equilibrium potential fixed at 1 and 0 on the fiber ends; O(eps^(1/2)) corrections dropped".into(),
        ],
    )
}

fn finish(
    value: f64,
    method: CapacityMethod,
    b: &BoxSpec,
    grid: &CapacityGrid,
    warnings: Vec<String>,
    caveats: Vec<String>,
) -> Result<CapacityEstimate> {
    if !(value > 0.0) || !value.is_finite() {
        return Err(Error::NonConvergence(format!("capacity quadrature produced {value}")));
    }
    Ok(CapacityEstimate {
        value,
        method,
        eps: b.eps,
        box_spec: Some(b.clone()),
        grid: Some(*grid),
        caveats,
        warnings,
    })
}

/// Reflect a point through the saddle along y₁ (used by symmetry checks).
pub fn reflect_along_unstable(saddle: &StationaryPoint, x: &[f64]) -> Result<Vec<f64>> {
    let frame = saddle_frame(saddle)?;
    let e = DVector::from_column_slice(&frame.axis1);
    let rel = DVector::from_column_slice(x) - DVector::from_column_slice(&frame.origin);
    let out = DVector::from_column_slice(x) - &e * (2.0 * e.dot(&rel));
    Ok(out.iter().copied().collect())
}
