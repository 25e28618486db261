use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use ucb_ncs::commands::{cmd_bounds, cmd_coverage, cmd_riccati, cmd_simulate, cmd_sweep, ControllerChoice};
use ucb_ncs::experiments::DeviationWindow;
use ucb_ncs::{ExperimentConfig, Result};
use ucb_ncs_core::plant::ControllerTag;
use ucb_ncs_core::CandidateTheta;

#[derive(Parser)]
#[command(name = "ucb-ncs", version, about = "Learning-based control over a lossy channel")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML config; unset keys take their defaults.
    #[arg(long, short)]
    config: Option<PathBuf>,
    /// Overrides `seed` from the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides `out_path` from the config.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Common {
    fn load(&self) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::load(path)?,
            None => ExperimentConfig::default(),
        };
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(out) = &self.out {
            cfg.out_path = out.clone();
        }
        Ok(cfg)
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ControllerArg {
    Ucb,
    Oracle,
    Both,
}

#[derive(Clone, Copy, ValueEnum)]
enum SingleController {
    Ucb,
    Oracle,
}

#[derive(Subcommand)]
enum Command {
    /// One seeded run; writes trajectories, estimator trace and episodes.
    Simulate {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value = "both")]
        controller: ControllerArg,
    },
    /// Median regret over seeds for several horizons.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Comma-separated, strictly ascending.
        #[arg(long, value_delimiter = ',', default_value = "2000,8000,32000")]
        horizons: Vec<u64>,
        /// Overrides `n_runs` from the config.
        #[arg(long)]
        n_runs: Option<usize>,
    },
    /// Prints the analysis constants as JSON.
    Bounds {
        #[command(flatten)]
        common: Common,
    },
    /// Monte Carlo frequencies of the confidence, noise and channel failure events.
    Coverage {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value = "oracle")]
        controller: SingleController,
        #[arg(long)]
        n_runs: Option<usize>,
        /// Start of the channel deviation window.
        #[arg(long, default_value_t = 1)]
        t1: usize,
        /// End of the channel deviation window.
        #[arg(long, default_value_t = 401)]
        t2: usize,
        /// Also check every window of length at least `L` (quadratic in `T`).
        #[arg(long)]
        all_windows: bool,
    },
    /// Solves the coupled Riccati recursion for one parameter triple.
    Riccati {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        a: f64,
        #[arg(long)]
        b: f64,
        #[arg(long)]
        p: f64,
    },
}

fn print_json<T: Serialize>(value: &T) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate { common, controller } => {
            let cfg = common.load()?;
            let choice = match controller {
                ControllerArg::Ucb => ControllerChoice::Ucb,
                ControllerArg::Oracle => ControllerChoice::Oracle,
                ControllerArg::Both => ControllerChoice::Both,
            };
            for path in cmd_simulate(&cfg, choice, &cfg.out_path)? {
                println!("{}", path.display());
            }
        }
        Command::Sweep { common, horizons, n_runs } => {
            let cfg = common.load()?;
            let res = cmd_sweep(&cfg, &horizons, n_runs.unwrap_or(cfg.n_runs), &cfg.out_path)?;
            print_json(&res)?;
        }
        Command::Bounds { common } => print_json(&cmd_bounds(&common.load()?)?)?,
        Command::Coverage { common, controller, n_runs, t1, t2, all_windows } => {
            let mut cfg = common.load()?;
            if let Some(n) = n_runs {
                cfg.n_runs = n;
            }
            let tag = match controller {
                SingleController::Ucb => ControllerTag::Ucb,
                SingleController::Oracle => ControllerTag::Oracle,
            };
            print_json(&cmd_coverage(&cfg, tag, DeviationWindow { t1, t2 }, all_windows)?)?;
        }
        Command::Riccati { common, a, b, p } => {
            let cfg = common.load()?;
            let theta = CandidateTheta::new(a, b, p)?;
            print_json(&cmd_riccati(&cfg, theta)?)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
