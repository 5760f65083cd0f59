//! Euler-Maruyama first-hitting times for `dx = −∇V dt + √(2ε) dW`.
//!
//! Replica `i` draws its noise from `ChaCha8Rng::seed_from_u64(seed)` on
//! stream `i`, so a run with more replicas reproduces the first ones exactly.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::kramers::RateResult;
use crate::potentials::{Potential, PotentialModel};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ball {
    pub center: Vec<f64>,
    pub radius: f64,
}

impl Ball {
    pub fn contains(&self, x: &[f64]) -> bool {
        let r2: f64 = x.iter().zip(&self.center).map(|(a, b)| (a - b) * (a - b)).sum();
        r2 <= self.radius * self.radius
    }
}

/// Default target radius 3√ε.
pub fn default_target_radius(eps: f64) -> f64 {
    3.0 * eps.sqrt()
}

/// `min(1e-3, ε/(20·max|λ|))` with the spectral radius of the Hessian sampled at `points`.
pub fn default_dt(model: &PotentialModel, eps: f64, points: &[&[f64]]) -> f64 {
    let lam = points
        .iter()
        .map(|p| model.hessian(p).symmetric_eigenvalues().amax())
        .fold(0.0f64, f64::max);
    if lam > 0.0 {
        1e-3f64.min(eps / (20.0 * lam))
    } else {
        1e-3
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationConfig {
    pub eps: f64,
    pub dt: f64,
    pub max_time: f64,
    pub replicas: usize,
    pub seed: u64,
    pub start: Vec<f64>,
    /// Union of balls.
    pub target: Vec<Ball>,
    /// Replicas leaving this ball around the origin are aborted. Defaults to
    /// 100·(1 + largest norm among start and target centres).
    #[serde(default)]
    pub confinement_radius: Option<f64>,
    /// Keep per-replica outcomes in the estimate.
    #[serde(default)]
    pub keep_times: bool,
}

impl SimulationConfig {
    fn validate(&self, d: usize) -> Result<()> {
        if !(self.eps > 0.0) {
            return Err(Error::Domain { name: "eps", value: self.eps });
        }
        if !(self.dt > 0.0) || !(self.dt <= self.max_time) {
            return Err(invalid(format!("need 0 < dt <= max_time, got dt = {}, max_time = {}", self.dt, self.max_time)));
        }
        if self.replicas == 0 {
            return Err(invalid("replicas must be positive"));
        }
        if self.start.len() != d {
            return Err(invalid(format!("start has dimension {}, model has {d}", self.start.len())));
        }
        if self.target.is_empty() {
            return Err(invalid("target needs at least one ball"));
        }
        for b in &self.target {
            if b.center.len() != d {
                return Err(invalid("target centre dimension does not match the model"));
            }
            if !(b.radius > 0.0) {
                return Err(Error::Domain {
                    name: "target radius",
                    value: b.radius,
                });
            }
        }
        Ok(())
    }

    fn confinement(&self) -> f64 {
        self.confinement_radius.unwrap_or_else(|| {
            let norm = |v: &[f64]| v.iter().map(|a| a * a).sum::<f64>().sqrt();
            let m = self.target.iter().map(|b| norm(&b.center)).fold(norm(&self.start), f64::max);
            100.0 * (1.0 + m)
        })
    }

    fn in_target(&self, x: &[f64]) -> bool {
        self.target.iter().any(|b| b.contains(x))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Hit,
    Censored,
    BlownUp,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicaTime {
    pub replica: usize,
    pub tau: f64,
    pub outcome: Outcome,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HittingTimeEstimate {
    pub eps: f64,
    /// Mean over hits only.
    pub mean: f64,
    pub stderr: f64,
    #[serde(rename = "hits")]
    pub hit_count: usize,
    #[serde(rename = "censored")]
    pub censored_count: usize,
    pub blown_up: usize,
    pub censored_fraction: f64,
    pub ci95: [f64; 2],
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub diagnostics: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub times: Option<Vec<ReplicaTime>>,
}

/// Pairwise summation; the result does not depend on thread scheduling.
pub fn pairwise_sum(v: &[f64]) -> f64 {
    if v.len() <= 16 {
        v.iter().sum()
    } else {
        let (a, b) = v.split_at(v.len() / 2);
        pairwise_sum(a) + pairwise_sum(b)
    }
}

fn run_replica(model: &PotentialModel, cfg: &SimulationConfig, replica: usize, steps: u64, bound: f64) -> ReplicaTime {
    let mut x = cfg.start.clone();
    if cfg.in_target(&x) {
        return ReplicaTime {
            replica,
            tau: 0.0,
            outcome: Outcome::Hit,
        };
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(replica as u64);
    let mut g = vec![0.0; x.len()];
    let noise = (2.0 * cfg.eps * cfg.dt).sqrt();
    let bound2 = bound * bound;
    for step in 1..=steps {
        model.gradient_into(&x, &mut g);
        let mut r2 = 0.0;
        for (xi, gi) in x.iter_mut().zip(&g) {
            let xi_noise: f64 = StandardNormal.sample(&mut rng);
            *xi += -gi * cfg.dt + noise * xi_noise;
            r2 += *xi * *xi;
        }
        if !(r2 <= bound2) {
            return ReplicaTime {
                replica,
                tau: step as f64 * cfg.dt,
                outcome: Outcome::BlownUp,
            };
        }
        if cfg.in_target(&x) {
            return ReplicaTime {
                replica,
                tau: step as f64 * cfg.dt,
                outcome: Outcome::Hit,
            };
        }
    }
    ReplicaTime {
        replica,
        tau: cfg.max_time,
        outcome: Outcome::Censored,
    }
}

/// Run all replicas in parallel and summarise the first-hitting times.
pub fn simulate_first_hitting(model: &PotentialModel, cfg: &SimulationConfig) -> Result<HittingTimeEstimate> {
    cfg.validate(model.dim())?;
    let steps = (cfg.max_time / cfg.dt).ceil() as u64;
    let bound = cfg.confinement();
    let outcomes: Vec<ReplicaTime> = (0..cfg.replicas)
        .into_par_iter()
        .map(|i| run_replica(model, cfg, i, steps, bound))
        .collect();
    summarise(cfg.eps, outcomes, cfg.keep_times, bound)
}

fn summarise(eps: f64, outcomes: Vec<ReplicaTime>, keep: bool, bound: f64) -> Result<HittingTimeEstimate> {
    let hits: Vec<f64> = outcomes.iter().filter(|o| o.outcome == Outcome::Hit).map(|o| o.tau).collect();
    let censored = outcomes.iter().filter(|o| o.outcome == Outcome::Censored).count();
    let blown = outcomes.iter().filter(|o| o.outcome == Outcome::BlownUp).count();
    let n = hits.len();
    let mut diagnostics = Vec::new();
    if blown > 0 {
        diagnostics.push(format!(
            "{blown} replicas left the ball of radius {bound:.3e}; dt may be too large or the model is not confining"
        ));
    }
    let (mean, stderr) = match n {
        0 => (f64::NAN, f64::NAN),
        1 => (hits[0], f64::NAN),
        _ => {
            let mean = pairwise_sum(&hits) / n as f64;
            let dev: Vec<f64> = hits.iter().map(|t| (t - mean) * (t - mean)).collect();
            let var = pairwise_sum(&dev) / (n - 1) as f64;
            (mean, (var / n as f64).sqrt())
        }
    };
    if n == 0 {
        diagnostics.push("no replica reached the target".into());
    }
    let total = outcomes.len();
    Ok(HittingTimeEstimate {
        eps,
        mean,
        stderr,
        hit_count: n,
        censored_count: censored,
        blown_up: blown,
        censored_fraction: (censored + blown) as f64 / total as f64,
        ci95: [mean - 1.96 * stderr, mean + 1.96 * stderr],
        diagnostics,
        times: keep.then_some(outcomes),
    })
}

/// Raw per-replica times as CSV text with header `replica,tau,status`.
pub fn times_csv(times: &[ReplicaTime]) -> String {
    let mut s = String::from("replica,tau,status\n");
    for t in times {
        let status = match t.outcome {
            Outcome::Hit => "hit",
            Outcome::Censored => "censored",
            Outcome::BlownUp => "blown_up",
        };
        s.push_str(&format!("{},{:.17e},{}\n", t.replica, t.tau, status));
    }
    s
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub ratio: f64,
    pub z_score: f64,
    pub tol: f64,
    pub verdict: Verdict,
}

/// Largest censored fraction `validate` accepts.
pub const MAX_CENSORED_FRACTION: f64 = 0.1;

/// Compare a Monte Carlo mean with a predicted expected time. Without an
/// explicit `tol`, uses the prediction's error order at unit constant plus
/// two relative standard errors.
pub fn validate(est: &HittingTimeEstimate, pred: &RateResult, tol: Option<f64>) -> Result<ValidationReport> {
    if (est.eps - pred.eps).abs() > 1e-12 * pred.eps.abs() {
        return Err(invalid(format!("estimate at eps = {} but prediction at eps = {}", est.eps, pred.eps)));
    }
    if est.censored_fraction > MAX_CENSORED_FRACTION {
        return Err(Error::Invariant(format!(
            "censored fraction {:.3} exceeds {MAX_CENSORED_FRACTION}; extend max_time",
            est.censored_fraction
        )));
    }
    if est.hit_count == 0 {
        return Err(Error::Invariant("no hits to compare".into()));
    }
    let rel_se = if est.stderr.is_finite() { est.stderr / est.mean } else { 0.0 };
    let tol = tol.unwrap_or(pred.error_order.unit_value + 2.0 * rel_se);
    let ratio = est.mean / pred.expected_time;
    let z_score = if est.stderr > 0.0 {
        (est.mean - pred.expected_time) / est.stderr
    } else {
        0.0
    };
    Ok(ValidationReport {
        ratio,
        z_score,
        tol,
        verdict: if (ratio - 1.0).abs() <= tol { Verdict::Pass } else { Verdict::Fail },
    })
}
