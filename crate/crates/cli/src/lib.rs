//! Command-line front end: loads a run configuration, runs analyses and
//! simulations, and writes CSV series and JSON reports.
//!
//! Exit codes: 0 success, 2 config error, 3 numerical divergence, 4 I/O
//! error.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use nlpid_core::RunConfigFile;
use serde::Serialize;

mod analysis;
mod error;
mod runs;

pub use error::CliError;

#[derive(Debug, Parser)]
#[command(name = "nlpid", version, about = "nl-PID stability, disturbance-rejection and simulation toolkit")]
pub struct Cli {
    /// Run configuration (JSON).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory for CSV/JSON artifacts.
    #[arg(long, global = true, default_value = ".")]
    pub out: PathBuf,
    /// Worker threads for sweeps (default: number of processors).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Overrides the config's rng_seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Routh–Hurwitz and circle-criterion verdicts for the configured gains.
    Stability,
    /// |S(jω)| for Ω ∈ {1c, 2c, 3c, 4c} plus per-Ω peaks.
    Freq {
        /// One wide CSV instead of one file per Ω.
        #[arg(long)]
        wide: bool,
    },
    /// Closed-form unit-step-disturbance transients for several Ω.
    Step {
        #[arg(long)]
        lambda1: f64,
        /// Ω values; defaults to {0.5c, 1c, 2c} from the config.
        #[arg(long, value_delimiter = ',')]
        omegas: Vec<f64>,
        #[arg(long, default_value_t = nlpid_core::freq::TRANSIENT_DT)]
        dt: f64,
    },
    /// Closed-loop simulation, optionally sweeping d or e.
    Simulate {
        #[arg(long, value_enum)]
        sweep: Option<Sweep>,
    },
    /// PD vs PID vs nl-PID with the configured gains and actuator.
    Benchmark,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Sweep {
    /// d ∈ {0, 1, 2, 3} with e = −10.
    D,
    /// d = 0 baseline plus e ∈ {−10, −100, −1000} with d = 2.
    E,
}

/// Files written and a one-line summary per command.
#[derive(Debug, Default)]
pub struct Outcome {
    pub files: Vec<PathBuf>,
    pub stdout: String,
}

pub(crate) struct Context {
    pub out: PathBuf,
    pub config: Option<RunConfigFile>,
    pub pool: rayon::ThreadPool,
}

impl Context {
    pub fn config(&self) -> Result<&RunConfigFile, CliError> {
        self.config
            .as_ref()
            .ok_or_else(|| CliError::Config("this command needs --config".into()))
    }

    pub fn write(&self, outcome: &mut Outcome, name: &str, contents: &str) -> Result<(), CliError> {
        let path = self.out.join(name);
        fs::write(&path, contents).map_err(|e| CliError::io(&path, e))?;
        outcome.files.push(path);
        Ok(())
    }

    pub fn write_json<T: Serialize>(&self, outcome: &mut Outcome, name: &str, value: &T) -> Result<String, CliError> {
        let mut text = serde_json::to_string_pretty(value).expect("report serializes");
        text.push('\n');
        self.write(outcome, name, &text)?;
        Ok(text)
    }
}

fn load_config(path: &Path, seed: Option<u64>) -> Result<RunConfigFile, CliError> {
    let mut cfg = RunConfigFile::from_path(path)?;
    if let Some(seed) = seed {
        cfg.simulation.rng_seed = seed;
    }
    Ok(cfg)
}

/// Executes a parsed command line.
pub fn run(cli: &Cli) -> Result<Outcome, CliError> {
    let config = cli
        .config
        .as_deref()
        .map(|p| load_config(p, cli.seed))
        .transpose()?;
    fs::create_dir_all(&cli.out).map_err(|e| CliError::io(&cli.out, e))?;
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            return Err(CliError::Config("--jobs must be >= 1".into()));
        }
        pool = pool.num_threads(jobs);
    }
    let ctx = Context {
        out: cli.out.clone(),
        config,
        pool: pool.build().map_err(|e| CliError::Config(e.to_string()))?,
    };
    match &cli.command {
        Command::Stability => analysis::stability(&ctx),
        Command::Freq { wide } => analysis::freq(&ctx, *wide),
        Command::Step { lambda1, omegas, dt } => analysis::step(&ctx, *lambda1, omegas, *dt),
        Command::Simulate { sweep } => runs::simulate(&ctx, *sweep),
        Command::Benchmark => runs::benchmark(&ctx),
    }
}
