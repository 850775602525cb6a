//! `qfames`: experiment driver.

mod commands;
mod config;
mod output;
mod pipeline;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use qfames::QfamesError;

use crate::config::ExperimentConfig;

/// Worker count for the thread pool; defaults to all cores.
const WORKERS_ENV: &str = "QFAMES_WORKERS";

const AFTER_HELP: &str = "\
Output files (written all at once into output_dir; nothing is written on failure):
  dods.json                  per seed: clusters {theta_star, theta_star_physical, multiplicity,
                             singular_values, block}, discarded candidates, config
  landscape.csv              seed, theta, theta_physical, frobenius_norm
  singular_values.csv        seed, candidate, theta_star, theta_star_physical, index,
                             singular_value, above_tau; rows with seed=mean average the
                             lowest candidate over seeds
  observable.json            per seed and cluster: eigenvalues, residual_imag, range
  sweep.csv                  seed, method, T, T_max, T_total, N, error, multiplicities
  reconstruction_report.json per pair: max_error, mean_error, max_error_halved, ratio, error
  manifest.json              config, seeds, norm_scale, workers, wall_time_s, default_params

Energies are normalized (spectrum inside [-0.9pi, 0.9pi]); *_physical columns divide by norm_scale.

Environment:
  QFAMES_WORKERS             number of worker threads (results do not depend on it)

Exit status: 0 success, 1 invalid input, 2 numerical failure.";

#[derive(Parser)]
#[command(name = "qfames", version, about = "Dominant eigenvalues, multiplicities and observables from multi-state signals", after_help = AFTER_HELP)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the estimator for every seed of a config.
    Run { config: PathBuf },
    /// Error against the oracle for QFAMES and the single-entry baseline over a list of T.
    #[command(name = "sweep-T")]
    SweepT {
        config: PathBuf,
        /// Comma-separated filter widths.
        #[arg(long = "T", value_delimiter = ',', num_args = 0..)]
        t: Vec<f64>,
    },
    /// Compare ancilla-free reconstruction with the exact signal.
    AncillaCheck {
        config: PathBuf,
        #[arg(long, default_value_t = 0.01)]
        h: f64,
        #[arg(long, default_value_t = 0.01)]
        dt: f64,
    },
    /// Run (or print) a built-in experiment.
    Preset {
        #[arg(value_parser = commands::PRESETS)]
        name: String,
        /// Output directory; defaults to qfames-<name>.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Print the config instead of running it.
        #[arg(long)]
        print: bool,
    },
}

/// A failure with its exit status.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn validation(message: impl Into<String>) -> Self {
        Self {
            code: 1,
            message: message.into(),
        }
    }

    pub fn numerical(message: impl Into<String>) -> Self {
        Self {
            code: 2,
            message: message.into(),
        }
    }
}

impl From<QfamesError> for Failure {
    fn from(e: QfamesError) -> Self {
        use QfamesError::*;
        let code = match e {
            InvalidArgument(_)
            | DimensionMismatch(_)
            | UnsupportedSize(_)
            | TooLarge { .. }
            | BackendMismatch(_)
            | NotNormalized(_)
            | NonUnitaryObservable
            | Format(_) => 1,
            DegenerateOverlap(_)
            | InvalidAmplitude(_)
            | ZeroCrossing { .. }
            | NonFinite(_)
            | Numerical(_)
            | Refused(_)
            | Io(_) => 2,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

fn init_workers() -> Result<(), Failure> {
    let Ok(v) = std::env::var(WORKERS_ENV) else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Failure::validation(format!("{WORKERS_ENV} must be a positive integer, got {v:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Failure::validation(format!("{WORKERS_ENV}: {e}")))
}

fn dispatch(cli: Cli) -> Result<(), Failure> {
    init_workers()?;
    let dir = match cli.command {
        Command::Run { config } => commands::run(&ExperimentConfig::load(&config)?)?,
        Command::SweepT { config, t } => commands::sweep(&ExperimentConfig::load(&config)?, &t)?,
        Command::AncillaCheck { config, h, dt } => commands::ancilla_check(&ExperimentConfig::load(&config)?, h, dt)?,
        Command::Preset { name, out, print } => {
            let cfg = commands::preset(&name, out)?;
            if print {
                let text = serde_json::to_string_pretty(&cfg).map_err(|e| Failure::numerical(e.to_string()))?;
                println!("{text}");
                return Ok(());
            }
            commands::run(&cfg)?
        }
    };
    println!("{}", dir.display());
    Ok(())
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("qfames: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
