//! Adaptive Gauss-Kronrod (7/15) quadrature on finite and half-infinite intervals,
//! plus composite Gauss-Legendre rules for tensor grids.

use serde::{Deserialize, Serialize};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];

const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadConfig {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_subdivisions: usize,
}

impl Default for QuadConfig {
    fn default() -> Self {
        Self {
            abs_tol: 1e-12,
            rel_tol: 1e-12,
            max_subdivisions: 60,
        }
    }
}

impl QuadConfig {
    pub fn tight() -> Self {
        Self {
            abs_tol: 1e-15,
            rel_tol: 1e-13,
            max_subdivisions: 400,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    pub abs_error: f64,
    pub intervals: usize,
    pub converged: bool,
}

struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for (j, &x) in XGK.iter().take(7).enumerate() {
        let dx = half * x;
        let pair = f(center - dx) + f(center + dx);
        kronrod += WGK[j] * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    let value = kronrod * half;
    let err = ((kronrod - gauss) * half).abs();
    (value, err)
}

/// Adaptive integration of `f` over `[a, b]`, bisecting the segment with the
/// largest error estimate until the tolerance or the subdivision budget is hit.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, cfg: &QuadConfig) -> QuadResult {
    if a == b {
        return QuadResult {
            value: 0.0,
            abs_error: 0.0,
            intervals: 0,
            converged: true,
        };
    }
    if b < a {
        let r = integrate(f, b, a, cfg);
        return QuadResult {
            value: -r.value,
            ..r
        };
    }
    let (v, e) = gk15(&f, a, b);
    let mut segs = vec![Segment {
        a,
        b,
        value: v,
        error: e,
    }];
    let mut total = v;
    let mut total_err = e;
    let mut splits = 0;
    loop {
        let target = cfg.abs_tol.max(cfg.rel_tol * total.abs());
        if total_err <= target {
            return QuadResult {
                value: total,
                abs_error: total_err,
                intervals: segs.len(),
                converged: true,
            };
        }
        if splits >= cfg.max_subdivisions {
            return QuadResult {
                value: total,
                abs_error: total_err,
                intervals: segs.len(),
                converged: false,
            };
        }
        let (idx, _) = segs
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.error.total_cmp(&y.1.error))
            .expect("non-empty segment list");
        let s = segs.swap_remove(idx);
        let mid = 0.5 * (s.a + s.b);
        if mid <= s.a || mid >= s.b {
            // Segment cannot be split further in floating point.
            segs.push(s);
            return QuadResult {
                value: total,
                abs_error: total_err,
                intervals: segs.len(),
                converged: false,
            };
        }
        let (v1, e1) = gk15(&f, s.a, mid);
        let (v2, e2) = gk15(&f, mid, s.b);
        total += v1 + v2 - s.value;
        segs.push(Segment {
            a: s.a,
            b: mid,
            value: v1,
            error: e1,
        });
        segs.push(Segment {
            a: mid,
            b: s.b,
            value: v2,
            error: e2,
        });
        // Re-sum errors to avoid drift from repeated subtraction.
        total_err = segs.iter().map(|s| s.error).sum();
        splits += 1;
    }
}

/// Integrate over consecutive pieces `[p0,p1], [p1,p2], ...`, each adaptively.
pub fn integrate_pieces<F: Fn(f64) -> f64>(f: F, points: &[f64], cfg: &QuadConfig) -> QuadResult {
    let mut out = QuadResult {
        value: 0.0,
        abs_error: 0.0,
        intervals: 0,
        converged: true,
    };
    for w in points.windows(2) {
        let r = integrate(&f, w[0], w[1], cfg);
        out.value += r.value;
        out.abs_error += r.abs_error;
        out.intervals += r.intervals;
        out.converged &= r.converged;
    }
    out
}

/// Integral over `[a, ∞)` through the substitution `x = a + t/(1-t)`.
pub fn integrate_to_infinity<F: Fn(f64) -> f64>(f: F, a: f64, cfg: &QuadConfig) -> QuadResult {
    let g = |t: f64| {
        let s = 1.0 - t;
        let v = f(a + t / s);
        if v == 0.0 {
            0.0
        } else {
            v / (s * s)
        }
    };
    integrate(g, 0.0, 1.0, cfg)
}

/// Composite Gauss-Legendre nodes and weights on `[a, b]` with `panels`
/// equal panels of `order` points each.
pub fn gauss_legendre_composite(a: f64, b: f64, panels: usize, order: usize) -> (Vec<f64>, Vec<f64>) {
    let (x, w) = gauss_legendre(order);
    let h = (b - a) / panels as f64;
    let mut nodes = Vec::with_capacity(panels * order);
    let mut weights = Vec::with_capacity(panels * order);
    for p in 0..panels {
        let lo = a + h * p as f64;
        let c = lo + 0.5 * h;
        for (xi, wi) in x.iter().zip(&w) {
            nodes.push(c + 0.5 * h * xi);
            weights.push(0.5 * h * wi);
        }
    }
    (nodes, weights)
}

/// Gauss-Legendre rule on `[-1, 1]` by Newton iteration on the Legendre
/// polynomial roots.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, z);
        if d != 0.0 {
            dp = d;
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

fn legendre_with_derivative(n: usize, z: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = z;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (z * p1 - p0) / (z * z - 1.0);
    (p1, d)
}
