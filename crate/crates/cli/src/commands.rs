use std::collections::BTreeMap;

use serde::Serialize;

use flatsaddle::capacity::{
    capacity_1d_exact, closed_form_capacity, default_box, dirichlet_upper_bound, fiber_lower_bound,
    verification_report, CapacityGrid, VerificationReport,
};
use flatsaddle::kramers::{
    laplace_numerator, minimum_spec_for, rate_for, saddle_spec_for, sweep_chain3, sweep_chain3_doublezero,
    sweep_longitudinal, sweep_transverse, LongitudinalSpec, MinimumSpec, RateResult, SweepRow, TransverseSpec,
};
use flatsaddle::landscape::{
    classify, find_stationary_points, find_stationary_points_with, ClassificationReport, ClassifyOptions,
    SeedFailure, StationaryPoint,
};
use flatsaddle::potentials::{Potential, PotentialModel};
use flatsaddle::sde::{
    default_dt, default_target_radius, simulate_first_hitting, times_csv, validate, Ball, HittingTimeEstimate,
    SimulationConfig, ValidationReport, MAX_CENSORED_FRACTION,
};
use flatsaddle::special::{tabulate, Crossover, Route};

use crate::error::{usage, CliError, CliResult};
use crate::output::{Outputs, RunManifest};
use crate::parse;
use crate::{Command, Format, Global, RouteArg, Scenario};

struct Ctx<'a> {
    global: &'a Global,
    params: BTreeMap<String, f64>,
    out: Outputs,
    manifest: RunManifest,
}

impl Ctx<'_> {
    fn model(&self) -> CliResult<PotentialModel> {
        parse::potential(self.global.potential.as_deref(), &self.params)
    }

    fn eps_list(&self) -> CliResult<Vec<f64>> {
        if self.global.eps.is_empty() {
            return Err(usage("this command needs --eps"));
        }
        Ok(self.global.eps.clone())
    }

    fn format(&self, default: Format, csv_ok: bool) -> CliResult<Format> {
        let f = self.global.format.unwrap_or(default);
        if f == Format::Csv && !csv_ok {
            return Err(usage("this command only writes JSON"));
        }
        Ok(f)
    }

    fn param(&self, key: &str, default: f64) -> f64 {
        self.params.get(key).copied().unwrap_or(default)
    }

    fn finish(self) -> CliResult<()> {
        self.out.finish(self.manifest)
    }
}

pub fn dispatch(global: &Global, command: &Command, args: Vec<String>) -> CliResult<()> {
    let params = parse::params(&global.params)?;
    let manifest = RunManifest {
        command: command.name().to_string(),
        potential: global.potential.clone(),
        params: params.clone(),
        eps: global.eps.clone(),
        outputs: vec![],
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        seed: global.seed,
        args,
    };
    let mut ctx = Ctx {
        global,
        params,
        out: Outputs::new(global.out.as_deref()),
        manifest,
    };
    let deferred = match command {
        Command::Classify {
            seeds,
            tol,
            zero_tol,
            coef_tol,
            probe_higher,
        } => {
            let opts = ClassifyOptions {
                zero_tol: *zero_tol,
                coef_tol: *coef_tol,
                probe_higher: *probe_higher,
            };
            cmd_classify(&mut ctx, seeds, *tol, &opts)?
        }
        Command::Rate { minimum, saddle, tol } => cmd_rate(&mut ctx, minimum, saddle, *tol)?,
        Command::Sweep { scenario, grid } => cmd_sweep(&mut ctx, *scenario, grid)?,
        Command::Verify {
            saddle,
            panels,
            order,
            tol,
        } => cmd_verify(&mut ctx, saddle, CapacityGrid { panels: *panels, order: *order }, *tol)?,
        Command::Simulate {
            start,
            target,
            target_radius,
            replicas,
            dt,
            max_time,
            minimum,
            saddle,
            tol,
            times_csv,
        } => cmd_simulate(
            &mut ctx,
            SimulateArgs {
                start,
                target,
                target_radius: *target_radius,
                replicas: *replicas,
                dt: *dt,
                max_time: *max_time,
                minimum: minimum.as_deref(),
                saddle: saddle.as_deref(),
                tol: *tol,
                times_csv: *times_csv,
            },
        )?,
        Command::TabulateSpecial { function, alphas, route } => cmd_tabulate(&mut ctx, function, alphas, *route)?,
    };
    ctx.finish()?;
    // Errors found after the outputs were assembled still leave the partial report on disk.
    match deferred {
        Some(e) => Err(e),
        None => Ok(()),
    }
}

type Deferred = Option<CliError>;

fn locate(model: &PotentialModel, raw: &str, tol: f64, what: &str) -> CliResult<Vec<StationaryPoint>> {
    let seeds = parse::points(raw)?;
    if seeds.is_empty() {
        return Err(usage(format!("empty {what} seed")));
    }
    let search = find_stationary_points(model, &seeds, tol);
    if let Some(f) = search.failures.first() {
        return Err(CliError::NonConvergence(format!(
            "{what} seed {:?}: {} (|grad V| = {:.3e})",
            f.seed, f.reason, f.final_gradient_norm
        )));
    }
    Ok(search.points)
}

#[derive(Serialize)]
struct ClassifiedPoint {
    seeds: Vec<usize>,
    #[serde(flatten)]
    report: ClassificationReport,
}

#[derive(Serialize)]
struct ClassifyOutput {
    potential: String,
    dimension: usize,
    points: Vec<ClassifiedPoint>,
    failures: Vec<SeedFailure>,
}

fn cmd_classify(ctx: &mut Ctx, seeds: &str, tol: f64, opts: &ClassifyOptions) -> CliResult<Deferred> {
    ctx.format(Format::Json, false)?;
    let model = ctx.model()?;
    let seeds = parse::points(seeds)?;
    if seeds.is_empty() {
        return Err(usage("classify needs at least one seed (--seeds)"));
    }
    if let Some(s) = seeds.iter().find(|s| s.len() != model.dim()) {
        return Err(usage(format!("seed {s:?} does not have dimension {}", model.dim())));
    }
    let search = find_stationary_points_with(&model, &seeds, tol, opts.zero_tol);
    let mut points = Vec::new();
    for (k, p) in search.points.iter().enumerate() {
        let class = classify(&model, p, opts)?;
        let owners = (0..seeds.len()).filter(|&i| search.seed_to_point[i] == Some(k)).collect();
        points.push(ClassifiedPoint {
            seeds: owners,
            report: ClassificationReport::new(p, &class),
        });
    }
    let deferred = (!search.failures.is_empty()).then(|| {
        CliError::NonConvergence(format!("{} of {} seeds did not converge", search.failures.len(), seeds.len()))
    });
    ctx.out.add_json(
        "classify.json",
        &ClassifyOutput {
            potential: model.name.clone(),
            dimension: model.dim(),
            points,
            failures: search.failures,
        },
    )?;
    Ok(deferred)
}

#[derive(Serialize)]
struct SaddleRate {
    location: Vec<f64>,
    #[serde(flatten)]
    rate: RateResult,
}

#[derive(Serialize)]
struct RateOutput {
    eps: f64,
    minimum: Vec<f64>,
    saddles: Vec<SaddleRate>,
    /// Sum of saddle capacities.
    combined_capacity: f64,
    combined_expected_time: f64,
}

#[derive(Serialize)]
struct RateCsvRow {
    eps: f64,
    saddle: usize,
    barrier: f64,
    prefactor: f64,
    expected_time: f64,
    regime_tag: String,
    error_order: String,
}

struct Prediction {
    minimum: StationaryPoint,
    min_spec: MinimumSpec,
    saddles: Vec<(StationaryPoint, flatsaddle::kramers::SaddleSpec)>,
}

impl Prediction {
    fn new(model: &PotentialModel, minimum: &str, saddle: &str, tol: f64) -> CliResult<Self> {
        let mins = locate(model, minimum, tol, "minimum")?;
        if mins.len() != 1 {
            return Err(usage("give exactly one minimum seed"));
        }
        let min_spec = minimum_spec_for(&mins[0])?;
        let opts = ClassifyOptions::default();
        let saddles = locate(model, saddle, tol, "saddle")?
            .into_iter()
            .map(|p| saddle_spec_for(model, &p, &opts).map(|s| (p, s)))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self {
            minimum: mins.into_iter().next().unwrap(),
            min_spec,
            saddles,
        })
    }

    fn at(&self, d: usize, eps: f64) -> CliResult<RateOutput> {
        let mut saddles = Vec::new();
        for (p, s) in &self.saddles {
            saddles.push(SaddleRate {
                location: p.location.clone(),
                rate: rate_for(&self.min_spec, s, eps)?,
            });
        }
        let cap: f64 = saddles.iter().map(|s| s.rate.capacity).sum();
        Ok(RateOutput {
            eps,
            minimum: self.minimum.location.clone(),
            combined_capacity: cap,
            combined_expected_time: laplace_numerator(&self.min_spec, d, eps) / cap,
            saddles,
        })
    }
}

/// Single RateResult for parallel saddles: capacities add, barrier from the lowest saddle.
fn combined(r: &RateOutput) -> RateResult {
    let lowest = r
        .saddles
        .iter()
        .min_by(|a, b| a.rate.barrier.total_cmp(&b.rate.barrier))
        .expect("at least one saddle");
    let mut out = lowest.rate.clone();
    let mut tags: Vec<&str> = r.saddles.iter().map(|s| s.rate.regime_tag.as_str()).collect();
    tags.dedup();
    out.regime_tag = tags.join("+");
    out.capacity = r.combined_capacity;
    out.expected_time = r.combined_expected_time;
    out.prefactor = r.combined_expected_time * (-out.barrier / r.eps).exp();
    if r.saddles.len() > 1 {
        out.crossover = None;
    }
    out
}

fn cmd_rate(ctx: &mut Ctx, minimum: &str, saddle: &str, tol: f64) -> CliResult<Deferred> {
    let format = ctx.format(Format::Json, true)?;
    let model = ctx.model()?;
    let eps = ctx.eps_list()?;
    let pred = Prediction::new(&model, minimum, saddle, tol)?;
    let rows: Vec<RateOutput> = eps.iter().map(|&e| pred.at(model.dim(), e)).collect::<CliResult<_>>()?;
    match format {
        Format::Json => ctx.out.add_json("rate.json", &rows)?,
        Format::Csv => {
            let flat: Vec<RateCsvRow> = rows
                .iter()
                .flat_map(|r| {
                    r.saddles.iter().enumerate().map(|(i, s)| RateCsvRow {
                        eps: r.eps,
                        saddle: i,
                        barrier: s.rate.barrier,
                        prefactor: s.rate.prefactor,
                        expected_time: s.rate.expected_time,
                        regime_tag: s.rate.regime_tag.clone(),
                        error_order: s.rate.error_order.expr.clone(),
                    })
                })
                .collect();
            ctx.out.add_csv("rate.csv", &flat)?
        }
    }
    Ok(None)
}

fn cmd_sweep(ctx: &mut Ctx, scenario: Scenario, grid: &str) -> CliResult<Deferred> {
    let format = ctx.format(Format::Csv, true)?;
    let eps = ctx.eps_list()?;
    let values = parse::grid(grid)?;
    let stable: Vec<f64> = ctx.params.get("stable").map(|v| vec![*v]).unwrap_or_default();
    let min = MinimumSpec::new(ctx.param("min_value", -1.0), ctx.param("min_det", 1.0))?;
    let rows: Vec<SweepRow> = match scenario {
        Scenario::Transverse => {
            let base = TransverseSpec {
                value: 0.0,
                unstable: ctx.param("unstable", 1.0),
                lambda2: 0.0,
                stable,
                c4: ctx.param("c4", 0.5),
                split: None,
            };
            sweep_transverse(&min, &base, &values, &eps)?
        }
        Scenario::Longitudinal => {
            let base = LongitudinalSpec {
                value: 0.0,
                lambda1: 0.0,
                stable: if stable.is_empty() { vec![1.0] } else { stable },
                c4: ctx.param("c4", 0.5),
                split: None,
            };
            sweep_longitudinal(&min, &base, &values, &eps)?
        }
        Scenario::Doublezero => sweep_chain3_doublezero(&values, &eps)?,
        Scenario::Sombrero => sweep_chain3(&values, &eps)?,
    };
    match format {
        Format::Csv => ctx.out.add_csv("sweep.csv", &rows)?,
        Format::Json => ctx.out.add_json("sweep.json", &rows)?,
    }
    Ok(None)
}

#[derive(Serialize)]
struct Ratios {
    upper: f64,
    lower: f64,
}

#[derive(Serialize)]
struct VerifyRow {
    eps: f64,
    regime_tag: String,
    closed_form: f64,
    upper: VerificationReport,
    lower: VerificationReport,
    /// ε/∫e^{V/ε} along the saddle axis over the same interval (d = 1 only).
    #[serde(skip_serializing_if = "Option::is_none")]
    exact_1d: Option<f64>,
    ratios: Ratios,
}

#[derive(Serialize)]
struct VerifyOutput {
    potential: String,
    saddle: Vec<f64>,
    rows: Vec<VerifyRow>,
}

fn cmd_verify(ctx: &mut Ctx, saddle: &str, grid: CapacityGrid, tol: f64) -> CliResult<Deferred> {
    ctx.format(Format::Json, false)?;
    let model = ctx.model()?;
    if model.dim() > 3 {
        return Err(usage(format!("capacity verification is limited to d <= 3, model has d = {}", model.dim())));
    }
    let eps = ctx.eps_list()?;
    let points = locate(&model, saddle, tol, "saddle")?;
    if points.len() != 1 {
        return Err(usage("give exactly one saddle seed"));
    }
    let z = &points[0];
    let opts = ClassifyOptions::default();
    let mut rows = Vec::new();
    let mut violated = Vec::new();
    for &e in &eps {
        let closed = closed_form_capacity(&model, z, e, &opts)?;
        let b = default_box(&model, z, e)?;
        let up = dirichlet_upper_bound(&model, z, &b, &grid)?;
        let lo = fiber_lower_bound(&model, z, &b, &grid)?;
        if lo.value > up.value * (1.0 + 1e-12) {
            violated.push(e);
        }
        let exact_1d = if model.dim() == 1 {
            let x0 = z.location[0];
            let v = |t: f64| model.value(&[x0 + t]);
            Some(capacity_1d_exact(&v, -b.delta1, b.delta1, e)?.value)
        } else {
            None
        };
        rows.push(VerifyRow {
            eps: e,
            regime_tag: closed.regime_tag,
            closed_form: closed.capacity,
            ratios: Ratios {
                upper: up.value / closed.capacity,
                lower: lo.value / closed.capacity,
            },
            upper: verification_report(&up, closed.capacity),
            lower: verification_report(&lo, closed.capacity),
            exact_1d,
        });
    }
    ctx.out.add_json(
        "verify.json",
        &VerifyOutput {
            potential: model.name.clone(),
            saddle: z.location.clone(),
            rows,
        },
    )?;
    Ok((!violated.is_empty())
        .then(|| CliError::Invariant(format!("lower bound above upper bound at eps = {violated:?}"))))
}

struct SimulateArgs<'a> {
    start: &'a str,
    target: &'a str,
    target_radius: Option<f64>,
    replicas: usize,
    dt: Option<f64>,
    max_time: f64,
    minimum: Option<&'a str>,
    saddle: Option<&'a str>,
    tol: Option<f64>,
    times_csv: bool,
}

#[derive(Serialize)]
struct SimulateOutput {
    config: SimulationConfig,
    estimate: HittingTimeEstimate,
    #[serde(skip_serializing_if = "Option::is_none")]
    prediction: Option<RateResult>,
    #[serde(skip_serializing_if = "Option::is_none")]
    validation: Option<ValidationReport>,
}

fn cmd_simulate(ctx: &mut Ctx, a: SimulateArgs) -> CliResult<Deferred> {
    ctx.format(Format::Json, false)?;
    let model = ctx.model()?;
    let eps = match ctx.eps_list()?.as_slice() {
        [e] => *e,
        _ => return Err(usage("simulate takes a single --eps value")),
    };
    if a.replicas == 0 {
        return Err(usage("--replicas must be positive"));
    }
    let start = match parse::points(a.start)?.as_slice() {
        [p] => p.clone(),
        _ => return Err(usage("--start takes exactly one point")),
    };
    let centres = parse::points(a.target)?;
    if centres.is_empty() {
        return Err(usage("--target needs at least one centre"));
    }
    let radius = a.target_radius.unwrap_or_else(|| default_target_radius(eps));
    let dt = a.dt.unwrap_or_else(|| {
        let mut pts: Vec<&[f64]> = vec![&start];
        pts.extend(centres.iter().map(|c| c.as_slice()));
        default_dt(&model, eps, &pts)
    });
    let cfg = SimulationConfig {
        eps,
        dt,
        max_time: a.max_time,
        replicas: a.replicas,
        seed: ctx.global.seed,
        start,
        target: centres.into_iter().map(|center| Ball { center, radius }).collect(),
        confinement_radius: None,
        keep_times: a.times_csv,
    };
    let prediction = match (a.minimum, a.saddle) {
        (Some(m), Some(s)) => {
            let p = Prediction::new(&model, m, s, 1e-10)?;
            Some(combined(&p.at(model.dim(), eps)?))
        }
        (None, None) => None,
        _ => return Err(usage("--minimum and --saddle go together")),
    };
    let mut est = simulate_first_hitting(&model, &cfg)?;
    let times = est.times.take();
    let censored = est.censored_fraction > MAX_CENSORED_FRACTION;
    let validation = match (&prediction, censored) {
        (Some(p), false) => Some(validate(&est, p, a.tol)?),
        _ => None,
    };
    ctx.out.add_json(
        "simulate.json",
        &SimulateOutput {
            config: cfg,
            estimate: est.clone(),
            prediction,
            validation,
        },
    )?;
    if let Some(t) = times {
        ctx.out.add("times.csv", times_csv(&t));
    }
    Ok(censored.then(|| {
        CliError::Invariant(format!(
            "censored fraction {:.3} exceeds {MAX_CENSORED_FRACTION}; report is partial",
            est.censored_fraction
        ))
    }))
}

#[derive(Serialize)]
struct TabulateRow {
    function: &'static str,
    alpha: f64,
    value: f64,
    route: Route,
}

fn cmd_tabulate(ctx: &mut Ctx, function: &str, alphas: &str, route: RouteArg) -> CliResult<Deferred> {
    let format = ctx.format(Format::Csv, true)?;
    let f = Crossover::parse(function).ok_or_else(|| {
        usage(format!("unknown function '{function}'; use psi_plus, psi_minus, theta_plus, theta_minus or chi"))
    })?;
    let route = match route {
        RouteArg::Auto => Route::Auto,
        RouteArg::Closed => Route::ClosedForm,
        RouteArg::Quadrature => Route::Quadrature,
    };
    let rows: Vec<TabulateRow> = tabulate(f, &parse::grid(alphas)?, route)?
        .into_iter()
        .map(|e| TabulateRow {
            function: f.name(),
            alpha: e.alpha,
            value: e.value,
            route: e.route,
        })
        .collect();
    match format {
        Format::Csv => ctx.out.add_csv("tabulate.csv", &rows)?,
        Format::Json => ctx.out.add_json("tabulate.json", &rows)?,
    }
    Ok(None)
}
