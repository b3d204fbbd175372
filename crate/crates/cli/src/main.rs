//! `monorun`: monotone block statistics of random permutations.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use monorun::convergence::{self, TrajectoryConfig};
use monorun::error::Error;
use monorun::exact::{DEFAULT_ENUMERATION_CAP, MAX_ENUMERATION_CAP};
use monorun::montecarlo::TrialConfig;
use monorun::scan::Statistic;
use monorun::theory::{FactorialMode, Schedule};

use crate::commands::WindowArgs;
use crate::output::Format;

/// Seed used when `--seed` is not given.
pub const DEFAULT_SEED: u64 = 1729;

const ENUM_CAP_VAR: &str = "MONORUN_ENUM_CAP";

#[derive(Debug, Parser)]
#[command(
    name = "monorun",
    version,
    about = "Consecutive monotone blocks in random permutations"
)]
struct Cli {
    /// Output format.
    #[arg(long, value_enum, default_value = "json", global = true)]
    format: Format,

    /// Write output to FILE instead of stdout.
    #[arg(long, value_name = "FILE", global = true)]
    out: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Runs, block counts and strict blocks of one permutation.
    Scan {
        /// Permutation of 1..n; separate values by spaces, commas or slashes.
        #[arg(required = true, num_args = 1..)]
        values: Vec<String>,
        /// Window length (repeatable); defaults to every k in 2..n-1.
        #[arg(long)]
        k: Vec<usize>,
    },
    /// Exact law of L, M or M_strict by enumerating all n! permutations.
    Exact {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        k: Option<usize>,
        /// L, M or M_strict.
        #[arg(long, default_value = "M")]
        statistic: String,
    },
    /// Poisson parameter, error bounds and the distributional window.
    Bounds {
        #[arg(long)]
        n: u64,
        #[arg(long, required = true)]
        k: Vec<usize>,
        /// Window half-width for |L - t(n)| <= x.
        #[arg(long, allow_hyphen_values = true)]
        x: Option<f64>,
        /// gamma or round.
        #[arg(long, default_value = "gamma")]
        gamma_mode: String,
        /// Divergence schedule for the lower window end (ln_ln or sqrt_ln).
        #[arg(long, default_value = "ln_ln")]
        delta: String,
        /// Divergence schedule for the upper window end (ln_ln or sqrt_ln).
        #[arg(long, default_value = "ln_ln")]
        theta: String,
    },
    /// Monte Carlo laws of L, M and M_strict.
    Simulate {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        k: Vec<usize>,
        #[arg(long, default_value_t = 100_000)]
        trials: u64,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        /// Worker threads; never changes the output.
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Ratio and window diagnostics along the grid n = ceil(e^m).
    Converge {
        #[arg(long, default_value_t = 16)]
        grid_min: u64,
        #[arg(long, default_value_t = 1_000_000)]
        grid_max: u64,
        /// Fixed trials per grid point (overrides the budget schedule).
        #[arg(long)]
        trials: Option<u64>,
        /// Permutation entries simulated per grid point.
        #[arg(long)]
        budget: Option<u64>,
        #[arg(long)]
        min_trials: Option<u64>,
        #[arg(long)]
        max_trials: Option<u64>,
        #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
        x: f64,
        #[arg(long, default_value = "gamma")]
        gamma_mode: String,
        #[arg(long, default_value = "ln_ln")]
        delta: String,
        #[arg(long, default_value = "ln_ln")]
        theta: String,
        /// Also simulate fair-coin longest head runs.
        #[arg(long)]
        coin: bool,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        #[arg(long)]
        workers: Option<usize>,
    },
}

#[derive(Debug)]
enum Failure {
    Lib(Error),
    Io(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

impl Failure {
    fn exit_code(&self) -> u8 {
        match self {
            Failure::Lib(Error::EmptyInput | Error::InvalidPermutation { .. }) => 2,
            Failure::Lib(
                Error::WindowExceedsSample { .. }
                | Error::WindowTooShort { .. }
                | Error::TargetUndefined { .. }
                | Error::InvalidProbability(_)
                | Error::InvalidParameter(_)
                | Error::ZeroTrials
                | Error::EmptyGrid { .. },
            ) => 3,
            Failure::Lib(Error::EnumerationCapExceeded { .. }) => 4,
            Failure::Lib(Error::InvariantViolation { .. }) => 5,
            Failure::Io(_) => 6,
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Lib(e) => write!(f, "{e}"),
            Failure::Io(e) => write!(f, "{e}"),
        }
    }
}

fn enumeration_cap() -> Result<usize, Failure> {
    match std::env::var(ENUM_CAP_VAR) {
        Ok(raw) => {
            let cap: usize = raw.trim().parse().map_err(|_| {
                Error::InvalidParameter(format!("{ENUM_CAP_VAR}='{raw}' is not an integer"))
            })?;
            eprintln!(
                "warning: {ENUM_CAP_VAR}={cap} overrides the default enumeration cap of {DEFAULT_ENUMERATION_CAP} \
                 (hard limit {MAX_ENUMERATION_CAP}); n! grows quickly"
            );
            Ok(cap)
        }
        Err(_) => Ok(DEFAULT_ENUMERATION_CAP),
    }
}

fn default_workers() -> usize {
    std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1)
}

fn window_args(x: f64, gamma_mode: &str, delta: &str, theta: &str) -> Result<WindowArgs, Error> {
    Ok(WindowArgs {
        x,
        mode: gamma_mode.parse::<FactorialMode>()?,
        delta: delta.parse::<Schedule>()?,
        theta: theta.parse::<Schedule>()?,
    })
}

fn run(cli: Cli) -> Result<Vec<u8>, Failure> {
    let (record, table) = match cli.command {
        Command::Scan { values, k } => {
            let sample = commands::parse_permutation(&values)?;
            commands::scan(&sample, &k, DEFAULT_SEED)?
        }
        Command::Exact { n, k, statistic } => {
            let statistic: Statistic = statistic.parse()?;
            if statistic == Statistic::HeadRun {
                return Err(
                    Error::InvalidParameter("exact laws cover L, M and M_strict".into()).into(),
                );
            }
            commands::exact(n, k, statistic, enumeration_cap()?, DEFAULT_SEED)?
        }
        Command::Bounds {
            n,
            k,
            x,
            gamma_mode,
            delta,
            theta,
        } => {
            let window = x
                .map(|x| window_args(x, &gamma_mode, &delta, &theta))
                .transpose()?;
            commands::bounds(n, &k, window, DEFAULT_SEED)?
        }
        Command::Simulate {
            n,
            k,
            trials,
            seed,
            workers,
        } => commands::simulate(&TrialConfig {
            n,
            ks: k,
            trials,
            seed,
            workers: workers.unwrap_or_else(default_workers),
        })?,
        Command::Converge {
            grid_min,
            grid_max,
            trials,
            budget,
            min_trials,
            max_trials,
            x,
            gamma_mode,
            delta,
            theta,
            coin,
            seed,
            workers,
        } => {
            let w = window_args(x, &gamma_mode, &delta, &theta)?;
            let mut config =
                TrajectoryConfig::new(convergence::exp_grid(grid_min, grid_max)?, seed);
            config.schedule = commands::schedule(trials, budget, min_trials, max_trials);
            config.workers = workers.unwrap_or_else(default_workers);
            config.x = w.x;
            config.mode = w.mode;
            config.delta_fn = w.delta;
            config.theta_fn = w.theta;
            config.coin = coin;
            commands::converge(&config)?
        }
    };
    output::render(&record, &table, cli.format).map_err(|e| Failure::Io(e.to_string()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let out_path = cli.out.clone();
    let bytes = match run(cli) {
        Ok(b) => b,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(e.exit_code());
        }
    };
    let written = match &out_path {
        Some(path) => std::fs::write(path, &bytes).map_err(|e| format!("{}: {e}", path.display())),
        None => {
            use std::io::Write;
            std::io::stdout()
                .write_all(&bytes)
                .map_err(|e| e.to_string())
        }
    };
    match written {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let failure = Failure::Io(e);
            eprintln!("error: {failure}");
            ExitCode::from(failure.exit_code())
        }
    }
}
