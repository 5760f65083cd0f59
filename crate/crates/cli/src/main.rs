mod commands;
mod error;
mod output;
mod parse;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use error::{usage, CliResult};
use output::RunManifest;

#[derive(Debug, Parser)]
#[command(name = "flatsaddle", version, about = "Transition times through degenerate saddles")]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,

    /// Re-run the command recorded in a manifest.
    #[arg(long)]
    pub manifest: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Option<Command>,
}

#[derive(Debug, Clone, Args)]
pub struct Global {
    /// Potential file (JSON) or built-in name: chain, rotated2, double-well.
    #[arg(long, global = true)]
    pub potential: Option<String>,

    /// Parameters as k=v, comma separated or repeated.
    #[arg(long, global = true, value_delimiter = ',')]
    pub params: Vec<String>,

    /// Noise strengths, comma separated.
    #[arg(long, global = true, value_delimiter = ',')]
    pub eps: Vec<f64>,

    /// Output directory [default: flatsaddle-out].
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,

    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Scenario {
    Transverse,
    Longitudinal,
    Doublezero,
    Sombrero,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RouteArg {
    Auto,
    Closed,
    Quadrature,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Locate stationary points from seeds and classify them.
    Classify {
        /// Seed points: coordinates separated by ',', points by ';'.
        #[arg(long, allow_hyphen_values = true, default_value = "")]
        seeds: String,
        /// Gradient-norm tolerance for the Newton search.
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        #[arg(long, default_value_t = 1e-6)]
        zero_tol: f64,
        #[arg(long, default_value_t = 1e-6)]
        coef_tol: f64,
        /// Look for the first non-vanishing higher coefficient when C3 = C4 = 0.
        #[arg(long)]
        probe_higher: bool,
    },
    /// Expected transition time from a minimum over one or more saddles.
    Rate {
        #[arg(long, allow_hyphen_values = true)]
        minimum: String,
        /// Saddle seeds separated by ';'; several saddles act in parallel.
        #[arg(long, allow_hyphen_values = true)]
        saddle: String,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
    },
    /// Prefactor and expected time across a bifurcation parameter.
    Sweep {
        #[arg(long, value_enum)]
        scenario: Scenario,
        /// start:stop:count or a comma list.
        #[arg(long, allow_hyphen_values = true)]
        grid: String,
    },
    /// Compare closed-form, upper and lower capacities at a saddle.
    Verify {
        #[arg(long, allow_hyphen_values = true)]
        saddle: String,
        #[arg(long, default_value_t = 24)]
        panels: usize,
        #[arg(long, default_value_t = 8)]
        order: usize,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
    },
    /// Euler-Maruyama first-hitting times, optionally validated against a prediction.
    Simulate {
        #[arg(long, allow_hyphen_values = true)]
        start: String,
        /// Target ball centres separated by ';'.
        #[arg(long, allow_hyphen_values = true)]
        target: String,
        /// Target radius [default: 3 sqrt(eps)].
        #[arg(long)]
        target_radius: Option<f64>,
        #[arg(long, default_value_t = 1000)]
        replicas: usize,
        /// Time step [default: min(1e-3, eps/(20 max|lambda|))].
        #[arg(long)]
        dt: Option<f64>,
        #[arg(long, default_value_t = 1000.0)]
        max_time: f64,
        /// Minimum seed for the prediction (needs --saddle).
        #[arg(long, allow_hyphen_values = true)]
        minimum: Option<String>,
        #[arg(long, allow_hyphen_values = true)]
        saddle: Option<String>,
        /// Validation tolerance [default: error order at unit constant + 2 stderr/mean].
        #[arg(long)]
        tol: Option<f64>,
        /// Also write per-replica times to times.csv.
        #[arg(long)]
        times_csv: bool,
    },
    /// Tabulate a crossover function.
    TabulateSpecial {
        /// psi_plus, psi_minus, theta_plus, theta_minus or chi.
        #[arg(long)]
        function: String,
        /// start:stop:count or a comma list.
        #[arg(long, allow_hyphen_values = true)]
        alphas: String,
        #[arg(long, value_enum, default_value_t = RouteArg::Auto)]
        route: RouteArg,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Classify { .. } => "classify",
            Command::Rate { .. } => "rate",
            Command::Sweep { .. } => "sweep",
            Command::Verify { .. } => "verify",
            Command::Simulate { .. } => "simulate",
            Command::TabulateSpecial { .. } => "tabulate-special",
        }
    }
}

/// Drop `--out <dir>` / `--out=<dir>` so a manifest can be replayed elsewhere.
fn strip_out(args: &[String]) -> Vec<String> {
    let mut out = Vec::new();
    let mut skip = false;
    for a in args {
        if skip {
            skip = false;
            continue;
        }
        if a == "--out" {
            skip = true;
            continue;
        }
        if a.starts_with("--out=") {
            continue;
        }
        out.push(a.clone());
    }
    out
}

fn run(argv: Vec<String>) -> CliResult<()> {
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return Ok(());
            }
            let msg = e.to_string();
            return Err(usage(msg.trim_start_matches("error: ").trim_end()));
        }
    };
    if let Some(path) = &cli.manifest {
        if cli.command.is_some() {
            return Err(usage("--manifest replays a recorded command; do not give a subcommand"));
        }
        let manifest = RunManifest::read(path)?;
        let out_dir = match &cli.global.out {
            Some(d) => d.clone(),
            None => path.parent().map(PathBuf::from).unwrap_or_else(|| PathBuf::from(".")),
        };
        let mut replay = vec![argv[0].clone()];
        replay.extend(manifest.args.iter().cloned());
        replay.push("--out".into());
        replay.push(out_dir.to_string_lossy().into_owned());
        return run(replay);
    }
    let command = cli
        .command
        .ok_or_else(|| usage("missing subcommand; see --help"))?;
    let args = strip_out(&argv[1..]);
    commands::dispatch(&cli.global, &command, args)
}

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().collect();
    match run(argv) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
