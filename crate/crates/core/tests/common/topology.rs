use std::f64::consts::PI;

use nalgebra::DMatrix;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use flatsaddle::potentials::{PolynomialPotential, Potential, PotentialModel, Term};

pub fn t(e: &[u32], c: f64) -> Term {
    Term {
        exponents: e.to_vec(),
        coeff: c,
    }
}

pub fn poly(dim: usize, terms: Vec<Term>) -> PolynomialPotential {
    PolynomialPotential::new(dim, terms).unwrap()
}

pub fn rotation2(theta: f64) -> DMatrix<f64> {
    let (s, c) = theta.sin_cos();
    DMatrix::from_row_slice(2, 2, &[c, -s, s, c])
}

/// The twelve families the random polynomials are drawn from, cycled in order.
pub const KINDS: [Kind; 12] = [
    Kind::Quadratic(-1.0, 1.0),
    Kind::Quadratic(1.0, 1.0),
    Kind::Quadratic(-1.0, -1.0),
    Kind::Soft { l2: -1.0, c4: 1.0, cubic: false },
    Kind::Soft { l2: 1.0, c4: -1.0, cubic: false },
    Kind::Soft { l2: -1.0, c4: -1.0, cubic: false },
    Kind::Soft { l2: 1.0, c4: 1.0, cubic: false },
    Kind::Soft { l2: 1.0, c4: 1.0, cubic: true },
    Kind::RealLines(2),
    Kind::RealLines(4),
    Kind::Definite(1.0),
    Kind::Definite(-1.0),
];

/// Definition-level saddle test on a polar grid around the origin: count
/// connected pieces of {V < V(0)} in an annulus, then see whether joining
/// the centre merges any of them.
pub fn topological_saddle(model: &PotentialModel, radius: f64) -> bool {
    let (nr, nphi) = (24usize, 2048usize);
    let v0 = model.value(&[0.0, 0.0]);
    let idx = |i: usize, j: usize| i * nphi + j;
    let low: Vec<bool> = (0..nr * nphi)
        .map(|n| {
            let (i, j) = (n / nphi, n % nphi);
            let r = radius * (0.25 + 0.75 * i as f64 / (nr - 1) as f64);
            let phi = 2.0 * PI * j as f64 / nphi as f64;
            model.value(&[r * phi.cos(), r * phi.sin()]) < v0
        })
        .collect();
    let centre = nr * nphi;
    let mut parent: Vec<usize> = (0..=centre).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    let union = |p: &mut Vec<usize>, a: usize, b: usize| {
        let (ra, rb) = (find(p, a), find(p, b));
        if ra != rb {
            p[ra] = rb;
        }
    };
    for i in 0..nr {
        for j in 0..nphi {
            if !low[idx(i, j)] {
                continue;
            }
            for (di, dj) in [(0i64, 1i64), (1, -1), (1, 0), (1, 1)] {
                let ii = i as i64 + di;
                if ii >= nr as i64 {
                    continue;
                }
                let jj = (j as i64 + dj).rem_euclid(nphi as i64) as usize;
                if low[idx(ii as usize, jj)] {
                    union(&mut parent, idx(i, j), idx(ii as usize, jj));
                }
            }
        }
    }
    let count = |p: &mut Vec<usize>| {
        let mut roots: Vec<usize> = (0..centre).filter(|&n| low[n]).map(|n| find(p, n)).collect();
        roots.sort_unstable();
        roots.dedup();
        roots.len()
    };
    let without = count(&mut parent);
    for j in 0..nphi {
        if low[idx(0, j)] {
            union(&mut parent, centre, idx(0, j));
        }
    }
    let with = count(&mut parent);
    without >= 2 && with < without
}

#[derive(Debug, Clone, Copy)]
pub enum Kind {
    Quadratic(f64, f64),
    Soft { l2: f64, c4: f64, cubic: bool },
    RealLines(usize),
    Definite(f64),
}

pub fn random_polynomial(kind: Kind, rng: &mut ChaCha8Rng) -> PolynomialPotential {
    let mut u = |lo: f64, hi: f64| rng.gen_range(lo..hi);
    let sign = |s: f64, m: f64| s.signum() * m;
    let terms = match kind {
        Kind::Quadratic(s1, s2) => vec![
            t(&[2, 0], sign(s1, u(0.3, 1.0))),
            t(&[0, 2], sign(s2, u(0.3, 1.0))),
            t(&[3, 0], u(-1.0, 1.0)),
            t(&[1, 2], u(-1.0, 1.0)),
            t(&[2, 2], u(-1.0, 1.0)),
        ],
        Kind::Soft { l2, c4, cubic } => {
            let l2 = sign(l2, u(0.5, 2.0));
            let c4 = sign(c4, u(0.3, 1.5));
            let b = u(-1.0, 1.0);
            let mut v = vec![
                t(&[0, 2], l2 / 2.0),
                t(&[4, 0], c4 + b * b / (2.0 * l2)),
                t(&[2, 1], b),
                t(&[1, 2], u(-1.0, 1.0)),
                t(&[0, 3], u(-1.0, 1.0)),
                t(&[0, 4], u(-1.0, 1.0)),
            ];
            if cubic {
                v.push(t(&[3, 0], sign(u(-1.0, 1.0), u(0.5, 1.0))));
            }
            v
        }
        Kind::RealLines(n) => {
            // s · Π (y₁ − tᵢ y₂) · (y₁² + y₂²)^{(4−n)/2} with well-separated tᵢ
            let s = sign(u(-1.0, 1.0), u(0.5, 1.5));
            let roots: Vec<f64> = (0..n).map(|i| -1.5 + 3.0 * i as f64 / (n - 1) as f64 + u(-0.2, 0.2)).collect();
            let mut coeffs = vec![s]; // in powers of y₂, descending in y₁
            for r in &roots {
                let mut next = vec![0.0; coeffs.len() + 1];
                for (k, c) in coeffs.iter().enumerate() {
                    next[k] += c;
                    next[k + 1] -= c * r;
                }
                coeffs = next;
            }
            if n == 2 {
                let mut next = vec![0.0; 5];
                for (k, c) in coeffs.iter().enumerate() {
                    next[k] += c;
                    next[k + 2] += c;
                }
                coeffs = next;
            }
            coeffs
                .iter()
                .enumerate()
                .map(|(k, &c)| t(&[(4 - k) as u32, k as u32], c))
                .collect()
        }
        Kind::Definite(s) => {
            let (p, q) = (u(0.5, 1.5), u(0.5, 1.5));
            // s (y₁² + y₂²)(p y₁² + q y₂²)
            vec![t(&[4, 0], s * p), t(&[2, 2], s * (p + q)), t(&[0, 4], s * q)]
        }
    };
    let theta = u(0.0, 2.0 * PI);
    poly(2, terms).compose_linear(&rotation2(theta)).unwrap()
}

