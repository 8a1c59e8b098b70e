mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use flexbid_core::tuner::PenaltyBasis;

use crate::commands::Failure;

#[derive(Parser, Debug)]
#[command(name = "flexbid", version, about = "Reserve-capacity bidding for an EV portfolio")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone, Default)]
pub struct Common {
    /// JSON run configuration; flags override its fields.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory (overrides `output_dir`).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Baseline CSV to read (default `<out>/baseline.csv`).
    #[arg(long, global = true)]
    pub baseline: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, Default)]
pub struct SampleArgs {
    /// Number of bootstrap samples |I|.
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub sample_seed: Option<u64>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Simulate the fleet baseline and write `baseline.csv` plus its config.
    Simulate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        n_days: Option<usize>,
        #[arg(long)]
        n_vehicles: Option<usize>,
        #[arg(long)]
        drift: Option<f64>,
    },
    /// Solve the bidding problem, one schedule per theta.
    Bid {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        sampling: SampleArgs,
        #[arg(long)]
        epsilon: Option<f64>,
        /// Comma-separated radii, e.g. `0.01,0.1,0.35`.
        #[arg(long, value_delimiter = ',')]
        theta: Option<Vec<f64>>,
        #[arg(long)]
        big_m: Option<f64>,
        #[arg(long)]
        bid_upper: Option<f64>,
    },
    /// Audit schedules on the in-sample draws and the out-of-sample days.
    Evaluate {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        sampling: SampleArgs,
        /// Schedule JSON files (default: the configured thetas in the output directory).
        #[arg(long)]
        schedule: Vec<PathBuf>,
        #[arg(long)]
        epsilon_check: Option<f64>,
        #[arg(long, value_delimiter = ',')]
        theta: Option<Vec<f64>>,
    },
    /// Grid-search (epsilon, theta) and write the objective surface.
    Tune {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        sampling: SampleArgs,
        #[arg(long, value_delimiter = ',')]
        epsilon_grid: Option<Vec<f64>>,
        #[arg(long, value_delimiter = ',')]
        theta_grid: Option<Vec<f64>>,
        /// Worker threads for the grid (0 = all cores).
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        /// Score the penalty on the out-of-sample days instead of the samples.
        #[arg(long)]
        holdout: bool,
    },
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Simulate { common, seed, n_days, n_vehicles, drift } => {
            let mut cfg = commands::load_config(&common)?;
            if let Some(s) = seed {
                cfg.fleet.rng_seed = s;
            }
            if let Some(n) = n_days {
                cfg.fleet.n_days = n;
            }
            if let Some(n) = n_vehicles {
                cfg.fleet.n_vehicles = n;
            }
            if let Some(d) = drift {
                cfg.fleet.drift_coefficient = d;
            }
            commands::simulate(&cfg, &common)
        }
        Command::Bid { common, sampling, epsilon, theta, big_m, bid_upper } => {
            let mut cfg = commands::load_config(&common)?;
            commands::apply_sampling(&mut cfg, &sampling);
            if let Some(e) = epsilon {
                cfg.bidding.epsilon = e;
            }
            if let Some(t) = theta {
                cfg.bidding.thetas = t;
            }
            if big_m.is_some() {
                cfg.bidding.big_m = big_m;
            }
            if bid_upper.is_some() {
                cfg.bidding.bid_upper = bid_upper;
            }
            commands::bid(&cfg, &common)
        }
        Command::Evaluate { common, sampling, schedule, epsilon_check, theta } => {
            let mut cfg = commands::load_config(&common)?;
            commands::apply_sampling(&mut cfg, &sampling);
            if epsilon_check.is_some() {
                cfg.evaluation.epsilon_check = epsilon_check;
            }
            if let Some(t) = theta {
                cfg.bidding.thetas = t;
            }
            commands::evaluate(&cfg, &common, &schedule)
        }
        Command::Tune { common, sampling, epsilon_grid, theta_grid, jobs, holdout } => {
            let mut cfg = commands::load_config(&common)?;
            commands::apply_sampling(&mut cfg, &sampling);
            if let Some(g) = epsilon_grid {
                cfg.tuning.epsilon_grid = g;
            }
            if let Some(g) = theta_grid {
                cfg.tuning.theta_grid = g;
            }
            if holdout {
                cfg.tuning.basis = PenaltyBasis::Holdout;
            }
            commands::tune(&cfg, &common, jobs)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {f}");
            ExitCode::from(f.code())
        }
    }
}
