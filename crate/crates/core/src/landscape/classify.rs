use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::roots::{eval, real_roots};
use super::{zero_indices, StationaryPoint, DEFAULT_ZERO_TOL};
use crate::error::{invalid, Result};
use crate::potentials::{Potential, PotentialModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Tag {
    LocalMinimum,
    NondegenerateSaddle,
    MultipleNegativeNotSaddle,
    Codim1,
    Codim2,
    HigherCodim,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    Saddle,
    NotSaddle,
    Undetermined,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassifyOptions {
    /// Eigenvalues with `|λ| < zero_tol · max(1, spectral radius)` count as zero.
    pub zero_tol: f64,
    /// Normal-form coefficients below this are treated as vanishing.
    /// Raised to at least 1e-4 for finite-difference models.
    pub coef_tol: f64,
    /// When C₃ = C₄ = 0, look for the first non-vanishing higher coefficient.
    pub probe_higher: bool,
}

impl Default for ClassifyOptions {
    fn default() -> Self {
        Self {
            zero_tol: DEFAULT_ZERO_TOL,
            coef_tol: 1e-6,
            probe_higher: false,
        }
    }
}

impl ClassifyOptions {
    fn coef_tol_for(&self, model: &PotentialModel) -> f64 {
        if model.exact_derivatives() {
            self.coef_tol
        } else {
            self.coef_tol.max(1e-4)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HigherOrderProbe {
    /// Order q of the first non-vanishing coefficient C_q of the reduced function.
    pub order: u32,
    pub coefficient: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalFormCodim1 {
    /// Index (in the ascending spectrum) of the zero eigenvalue.
    pub soft_index: usize,
    /// The distinguished non-zero eigenvalue: the negative one if present,
    /// otherwise the smallest positive one. `None` in dimension one.
    pub lambda2: Option<f64>,
    #[serde(rename = "C3")]
    pub c3: f64,
    #[serde(rename = "C4")]
    pub c4: f64,
    pub higher: Option<HigherOrderProbe>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RootAnalysis {
    /// Real roots of the discriminant, counting a root at infinity when the
    /// degree drops.
    pub real_root_count: usize,
    pub all_simple: bool,
    pub positive_definite: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalFormCodim2 {
    /// Orthonormal basis (y₂, y₃) of the null eigenspace.
    pub null_basis: [Vec<f64>; 2],
    /// Coefficients of y₂⁴, y₂³y₃, y₂²y₃², y₂y₃³, y₃⁴ in the normal form.
    pub quartic: [f64; 5],
    /// Coefficients of y₂³, y₂²y₃, y₂y₃², y₃³.
    pub cubic: [f64; 4],
    /// Eigenvalue of the remaining distinguished direction: the negative one if
    /// present, otherwise the smallest positive one. `None` in dimension two.
    pub lambda3: Option<f64>,
    /// Degree of the leading homogeneous part used (3 or 4; 0 if both vanish).
    pub order: u32,
    /// Discriminant coefficients, ascending in t.
    pub delta: Vec<f64>,
    /// Finite real roots of the discriminant.
    pub delta_roots: Vec<f64>,
    pub root_analysis: RootAnalysis,
    #[serde(rename = "Kminus")]
    pub k_minus: f64,
    #[serde(rename = "Kplus")]
    pub k_plus: f64,
}

impl NormalFormCodim2 {
    /// Angular profile `k(φ) = V₄(cos φ, sin φ)`.
    pub fn k(&self, phi: f64) -> f64 {
        quartic_at(&self.quartic, phi.cos(), phi.sin())
    }
}

pub(crate) fn quartic_at(q: &[f64; 5], u: f64, v: f64) -> f64 {
    q[0] * u.powi(4) + q[1] * u.powi(3) * v + q[2] * u * u * v * v + q[3] * u * v.powi(3) + q[4] * v.powi(4)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HigherCodimReport {
    pub null_dim: usize,
    /// Order of the leading homogeneous part sampled (3 or 4; 0 if both vanish).
    pub order: u32,
    pub min_on_sphere: f64,
    pub max_on_sphere: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ClassDetail {
    Codim1(NormalFormCodim1),
    Codim2(NormalFormCodim2),
    Higher(HigherCodimReport),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SaddleClass {
    pub tag: Tag,
    pub verdict: Verdict,
    pub detail: Option<ClassDetail>,
}

/// JSON form of a classified stationary point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassificationReport {
    pub location: Vec<f64>,
    pub value: f64,
    pub eigenvalues: Vec<f64>,
    pub tag: Tag,
    pub verdict: Verdict,
    pub coefficients: Option<ClassDetail>,
}

impl ClassificationReport {
    pub fn new(point: &StationaryPoint, class: &SaddleClass) -> Self {
        Self {
            location: point.location.clone(),
            value: point.value,
            eigenvalues: point.eigenvalues.clone(),
            tag: class.tag,
            verdict: class.verdict,
            coefficients: class.detail.clone(),
        }
    }
}

fn d3(model: &PotentialModel, x: &[f64], a: &[f64], b: &[f64], c: &[f64]) -> f64 {
    model.directional(x, &[a, b, c])
}

fn d4(model: &PotentialModel, x: &[f64], dirs: [&[f64]; 4]) -> f64 {
    model.directional(x, &dirs)
}

/// Distinguished non-zero eigenvalue: the negative one if any, else the
/// smallest positive one.
fn distinguished(point: &StationaryPoint, zeros: &[usize]) -> Option<f64> {
    let nonzero: Vec<f64> = (0..point.dim())
        .filter(|i| !zeros.contains(i))
        .map(|i| point.eigenvalues[i])
        .collect();
    nonzero
        .iter()
        .copied()
        .find(|v| *v < 0.0)
        .or_else(|| nonzero.iter().copied().filter(|v| *v > 0.0).reduce(f64::min))
}

/// Classify a stationary point along the eigenvalue-count tree.
pub fn classify(model: &PotentialModel, point: &StationaryPoint, opts: &ClassifyOptions) -> Result<SaddleClass> {
    if point.dim() != model.dim() {
        return Err(invalid("point dimension does not match the model"));
    }
    let zeros = zero_indices(&point.eigenvalues, opts.zero_tol);
    let negatives = (0..point.dim())
        .filter(|i| !zeros.contains(i) && point.eigenvalues[*i] < 0.0)
        .count();
    let coef_tol = opts.coef_tol_for(model);

    if negatives >= 2 {
        return Ok(SaddleClass {
            tag: Tag::MultipleNegativeNotSaddle,
            verdict: Verdict::NotSaddle,
            detail: None,
        });
    }
    match zeros.len() {
        0 => Ok(if negatives == 0 {
            SaddleClass {
                tag: Tag::LocalMinimum,
                verdict: Verdict::NotSaddle,
                detail: None,
            }
        } else {
            SaddleClass {
                tag: Tag::NondegenerateSaddle,
                verdict: Verdict::Saddle,
                detail: None,
            }
        }),
        1 => {
            let mut nf = codim1_impl(model, point, zeros[0]);
            let verdict = codim1_verdict(&mut nf, model, point, opts, coef_tol);
            Ok(SaddleClass {
                tag: Tag::Codim1,
                verdict,
                detail: Some(ClassDetail::Codim1(nf)),
            })
        }
        2 => {
            let nf = codim2_impl(model, point, [zeros[0], zeros[1]], coef_tol);
            let verdict = codim2_verdict(&nf);
            Ok(SaddleClass {
                tag: Tag::Codim2,
                verdict,
                detail: Some(ClassDetail::Codim2(nf)),
            })
        }
        _ => Ok(SaddleClass {
            tag: Tag::HigherCodim,
            verdict: Verdict::Undetermined,
            detail: Some(ClassDetail::Higher(higher_report(model, point, &zeros, coef_tol))),
        }),
    }
}

/// Normal-form coefficients C₃ = V₁₁₁ and C₄ = V₁₁₁₁ − ½ Σ_{j≥2} V₁₁ⱼ²/λⱼ in
/// the eigenbasis, with Taylor coefficients V_{i…} normalised by the
/// multinomial factorials.
pub fn codim1_coefficients(model: &PotentialModel, point: &StationaryPoint) -> Result<NormalFormCodim1> {
    if point.zero_indices.len() != 1 {
        return Err(invalid(format!(
            "codimension-1 normal form needs exactly one zero eigenvalue, found {}",
            point.zero_indices.len()
        )));
    }
    Ok(codim1_impl(model, point, point.zero_indices[0]))
}

fn codim1_impl(model: &PotentialModel, point: &StationaryPoint, soft: usize) -> NormalFormCodim1 {
    let x = &point.location;
    let e1 = point.eigenvector(soft);
    let c3 = d3(model, x, &e1, &e1, &e1) / 6.0;
    let v1111 = d4(model, x, [&e1, &e1, &e1, &e1]) / 24.0;
    let mut correction = 0.0;
    for j in 0..point.dim() {
        if j == soft {
            continue;
        }
        let vj = point.eigenvector(j);
        let v11j = d3(model, x, &e1, &e1, &vj) / 2.0;
        correction += v11j * v11j / point.eigenvalues[j];
    }
    NormalFormCodim1 {
        soft_index: soft,
        lambda2: distinguished(point, &[soft]),
        c3,
        c4: v1111 - 0.5 * correction,
        higher: None,
    }
}

fn codim1_verdict(
    nf: &mut NormalFormCodim1,
    model: &PotentialModel,
    point: &StationaryPoint,
    opts: &ClassifyOptions,
    coef_tol: f64,
) -> Verdict {
    // In dimension one the zero direction is the only one; it behaves like
    // the λ₂ > 0 case (no other descending direction).
    let unstable_elsewhere = nf.lambda2.map_or(false, |l| l < 0.0);
    let decide = |c: f64| {
        if unstable_elsewhere == (c > 0.0) {
            Verdict::Saddle
        } else {
            Verdict::NotSaddle
        }
    };
    if nf.c3.abs() > coef_tol {
        return Verdict::NotSaddle;
    }
    if nf.c4.abs() > coef_tol {
        return decide(nf.c4);
    }
    if !opts.probe_higher {
        return Verdict::Undetermined;
    }
    match probe_higher(model, point, nf.soft_index, coef_tol) {
        Some(p) => {
            let v = if p.order % 2 == 1 {
                Verdict::NotSaddle
            } else {
                decide(p.coefficient)
            };
            nf.higher = Some(p);
            v
        }
        None => Verdict::Undetermined,
    }
}

/// Reduced one-dimensional function along the soft direction: the other
/// coordinates are chosen to make the transverse gradient vanish. Its
/// Taylor coefficients are fitted for orders 3 through 8.
fn probe_higher(model: &PotentialModel, point: &StationaryPoint, soft: usize, tol: f64) -> Option<HigherOrderProbe> {
    let d = point.dim();
    let z = DVector::from_column_slice(&point.location);
    let e1 = point.eigenvectors.column(soft).into_owned();
    let others: Vec<usize> = (0..d).filter(|&j| j != soft).collect();
    let basis = DMatrix::from_fn(d, others.len(), |r, c| point.eigenvectors[(r, others[c])]);
    let v0 = point.value;
    let smax = 0.25;
    let npts = 12;
    let mut svals = Vec::new();
    let mut gvals = Vec::new();
    for sign in [-1.0, 1.0] {
        let mut w = DVector::zeros(others.len());
        for k in 1..=npts {
            let s = sign * smax * k as f64 / npts as f64;
            for _ in 0..50 {
                let x = &z + &e1 * s + &basis * &w;
                let g = basis.transpose() * model.gradient(x.as_slice());
                if g.norm() < 1e-14 {
                    break;
                }
                let h = basis.transpose() * model.hessian(x.as_slice()) * &basis;
                match h.lu().solve(&g) {
                    Some(step) => w -= step,
                    None => return None,
                }
            }
            let x = &z + &e1 * s + &basis * &w;
            svals.push(s);
            gvals.push(model.value(x.as_slice()) - v0);
        }
    }
    let orders: Vec<i32> = (3..=8).collect();
    let a = DMatrix::from_fn(svals.len(), orders.len(), |r, c| svals[r].powi(orders[c]));
    let b = DVector::from_vec(gvals);
    let coeffs = a.svd(true, true).solve(&b, 1e-14).ok()?;
    orders
        .iter()
        .zip(coeffs.iter())
        .find(|(_, c)| c.abs() > tol.max(1e-7))
        .map(|(&q, &c)| HigherOrderProbe {
            order: q as u32,
            coefficient: c,
        })
}

/// Leading homogeneous part on the null plane and its discriminant.
pub fn codim2_form(model: &PotentialModel, point: &StationaryPoint) -> Result<NormalFormCodim2> {
    if point.zero_indices.len() != 2 {
        return Err(invalid(format!(
            "codimension-2 normal form needs exactly two zero eigenvalues, found {}",
            point.zero_indices.len()
        )));
    }
    let tol = ClassifyOptions::default().coef_tol_for(model);
    let nf = codim2_impl(model, point, [point.zero_indices[0], point.zero_indices[1]], tol);
    if nf.order == 3 {
        return Err(invalid(
            "cubic part on the null eigenspace does not vanish; classify() handles this case",
        ));
    }
    Ok(nf)
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

fn codim2_impl(model: &PotentialModel, point: &StationaryPoint, zeros: [usize; 2], coef_tol: f64) -> NormalFormCodim2 {
    let x = &point.location;
    let u = point.eigenvector(zeros[0]);
    let v = point.eigenvector(zeros[1]);

    let mut cubic = [0.0; 4];
    for (a, c) in cubic.iter_mut().enumerate() {
        let mut dirs: Vec<&[f64]> = vec![&u; 3 - a];
        dirs.extend(std::iter::repeat(v.as_slice()).take(a));
        *c = model.directional(x, &dirs) / (factorial(3 - a) * factorial(a));
    }
    let mut quartic = [0.0; 5];
    for (a, q) in quartic.iter_mut().enumerate() {
        let mut dirs: Vec<&[f64]> = vec![&u; 4 - a];
        dirs.extend(std::iter::repeat(v.as_slice()).take(a));
        *q = model.directional(x, &dirs) / (factorial(4 - a) * factorial(a));
    }
    // Eliminate the couplings y_j·Q_j(y₂,y₃) to the non-degenerate directions.
    for j in 0..point.dim() {
        if zeros.contains(&j) {
            continue;
        }
        let vj = point.eigenvector(j);
        let quu = d3(model, x, &u, &u, &vj) / 2.0;
        let quv = d3(model, x, &u, &v, &vj);
        let qvv = d3(model, x, &v, &v, &vj) / 2.0;
        let lam = point.eigenvalues[j];
        let sq = [
            quu * quu,
            2.0 * quu * quv,
            quv * quv + 2.0 * quu * qvv,
            2.0 * quv * qvv,
            qvv * qvv,
        ];
        for (q, s) in quartic.iter_mut().zip(sq) {
            *q -= s / (2.0 * lam);
        }
    }

    let cubic_max = cubic.iter().fold(0.0f64, |m, c| m.max(c.abs()));
    let quartic_max = quartic.iter().fold(0.0f64, |m, c| m.max(c.abs()));
    let (order, form): (u32, Vec<f64>) = if cubic_max > coef_tol {
        (3, cubic.to_vec())
    } else if quartic_max > coef_tol {
        (4, quartic.to_vec())
    } else {
        (0, vec![])
    };

    let (delta, delta_roots, root_analysis) = if order == 0 {
        (
            vec![],
            vec![],
            RootAnalysis {
                real_root_count: 0,
                all_simple: false,
                positive_definite: false,
            },
        )
    } else {
        discriminant(&form, coef_tol)
    };

    let (k_minus, k_plus) = angular_extrema(&quartic);
    NormalFormCodim2 {
        null_basis: [u, v],
        quartic,
        cubic,
        lambda3: distinguished(point, &zeros),
        order,
        delta,
        delta_roots,
        root_analysis,
        k_minus,
        k_plus,
    }
}

/// `form[a]` is the coefficient of y₂^{p−a} y₃^a. The discriminant is
/// V_p(t, 1) when the pure y₂^p coefficient is non-zero, V_p(1, t) otherwise;
/// in the second case a drop in degree is a root at infinity. Roots are
/// counted in whichever chart has the larger leading coefficient, since a
/// tiny leading term pushes a root out towards infinity.
fn discriminant(form: &[f64], coef_tol: f64) -> (Vec<f64>, Vec<f64>, RootAnalysis) {
    let p = form.len() - 1;
    let scale = form.iter().fold(0.0f64, |m, c| m.max(c.abs()));
    let lead_nonzero = form[0].abs() > coef_tol.max(1e-12 * scale);
    let mut asc = vec![0.0; p + 1];
    if lead_nonzero {
        for (a, &c) in form.iter().enumerate() {
            asc[p - a] = c;
        }
    } else {
        asc.copy_from_slice(form);
        asc[0] = 0.0;
    }
    let (clean, roots, analysis) = chart_roots(&asc, p, coef_tol, scale);
    if lead_nonzero && form[p].abs() > form[0].abs() {
        let (_, flipped, analysis) = chart_roots(form, p, coef_tol, scale);
        let mut roots: Vec<f64> = flipped.iter().filter(|r| **r != 0.0).map(|r| 1.0 / r).collect();
        roots.sort_by(f64::total_cmp);
        return (clean, roots, analysis);
    }
    (clean, roots, analysis)
}

fn chart_roots(asc: &[f64], p: usize, coef_tol: f64, scale: f64) -> (Vec<f64>, Vec<f64>, RootAnalysis) {
    let clean: Vec<f64> = asc
        .iter()
        .map(|&c| if c.abs() <= coef_tol.max(1e-12 * scale) { 0.0 } else { c })
        .collect();
    let degree = clean.iter().rposition(|c| *c != 0.0).unwrap_or(0);
    let at_infinity = p - degree;
    let rr = real_roots(&clean[..=degree]);
    let mut count = rr.roots.len();
    let mut simple = rr.all_simple;
    if at_infinity > 0 {
        count += at_infinity;
        if at_infinity > 1 {
            simple = false;
        }
    }
    let positive_definite = count == 0 && eval(&clean, 0.0) > 0.0;
    (
        clean,
        rr.roots,
        RootAnalysis {
            real_root_count: count,
            all_simple: simple,
            positive_definite,
        },
    )
}

/// Each simple real root of the discriminant is a line through the
/// origin across which V_p changes sign, so the sublevel set near the point
/// has as many sectors as there are real roots. Two or more sectors make a
/// saddle when no other direction descends; with a descending direction,
/// a saddle needs V_p to be positive definite.
fn codim2_verdict(nf: &NormalFormCodim2) -> Verdict {
    if nf.order == 0 {
        return Verdict::Undetermined;
    }
    let ra = &nf.root_analysis;
    if ra.real_root_count > 0 && !ra.all_simple {
        return Verdict::Undetermined;
    }
    let descending = nf.lambda3.map_or(false, |l| l < 0.0);
    if descending {
        if ra.positive_definite {
            Verdict::Saddle
        } else {
            Verdict::NotSaddle
        }
    } else if ra.real_root_count >= 2 {
        Verdict::Saddle
    } else {
        Verdict::NotSaddle
    }
}

const ANGULAR_GRID: usize = 4096;

/// Minimum and maximum of `k(φ)` over a 4096-point grid, each refined by a
/// golden-section search in the neighbouring cells.
fn angular_extrema(q: &[f64; 5]) -> (f64, f64) {
    let k = |phi: f64| quartic_at(q, phi.cos(), phi.sin());
    let h = 2.0 * PI / ANGULAR_GRID as f64;
    let (mut imin, mut imax) = (0, 0);
    let (mut vmin, mut vmax) = (f64::INFINITY, f64::NEG_INFINITY);
    for i in 0..ANGULAR_GRID {
        let v = k(i as f64 * h);
        if v < vmin {
            vmin = v;
            imin = i;
        }
        if v > vmax {
            vmax = v;
            imax = i;
        }
    }
    let centre_min = imin as f64 * h;
    let centre_max = imax as f64 * h;
    let kmin = golden(&k, centre_min - h, centre_min + h).min(vmin);
    let kmax = -golden(&|p| -k(p), centre_max - h, centre_max + h).min(-vmax);
    (kmin, kmax)
}

fn golden(f: &dyn Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..80 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    fc.min(fd)
}

fn higher_report(model: &PotentialModel, point: &StationaryPoint, zeros: &[usize], coef_tol: f64) -> HigherCodimReport {
    let x = &point.location;
    let q = zeros.len();
    let basis: Vec<Vec<f64>> = zeros.iter().map(|&i| point.eigenvector(i)).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let samples: Vec<Vec<f64>> = (0..256)
        .map(|_| {
            let c: Vec<f64> = (0..q).map(|_| rng.gen::<f64>() * 2.0 - 1.0).collect();
            let n = c.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-12);
            let mut dir = vec![0.0; point.dim()];
            for (ci, b) in c.iter().zip(&basis) {
                for (d, bi) in dir.iter_mut().zip(b) {
                    *d += ci / n * bi;
                }
            }
            dir
        })
        .collect();
    let eval_order = |k: usize| -> Vec<f64> {
        samples
            .iter()
            .map(|u| {
                let dirs: Vec<&[f64]> = vec![u.as_slice(); k];
                model.directional(x, &dirs) / factorial(k)
            })
            .collect()
    };
    let cubic = eval_order(3);
    let cubic_max = cubic.iter().fold(0.0f64, |m, c| m.max(c.abs()));
    let (order, vals) = if cubic_max > coef_tol {
        (3, cubic)
    } else {
        let quartic = eval_order(4);
        let qmax = quartic.iter().fold(0.0f64, |m, c| m.max(c.abs()));
        if qmax > coef_tol {
            (4, quartic)
        } else {
            (0, quartic)
        }
    };
    HigherCodimReport {
        null_dim: q,
        order,
        min_on_sphere: vals.iter().copied().fold(f64::INFINITY, f64::min),
        max_on_sphere: vals.iter().copied().fold(f64::NEG_INFINITY, f64::max),
    }
}
