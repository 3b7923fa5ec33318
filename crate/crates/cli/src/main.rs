//! `cyclone-sde`: learn, tune, calibrate, simulate and analyse the
//! cyclone intensity SDE from the command line.

mod commands;
mod config;
mod provenance;

use std::ffi::OsString;
use std::fmt;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{ArgMatches, CommandFactory, FromArgMatches, Parser, Subcommand};

use crate::config::ConfigFile;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data(String),
    Numerical(String),
}

impl CliError {
    pub fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }

    pub fn data_io(path: &Path, e: std::io::Error) -> Self {
        CliError::Data(format!("{}: {e}", path.display()))
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Data(m) => write!(f, "data error: {m}"),
            CliError::Numerical(m) => write!(f, "numerical failure: {m}"),
        }
    }
}

impl From<cyclone_sde::Error> for CliError {
    fn from(e: cyclone_sde::Error) -> Self {
        use cyclone_sde::Error as E;
        match e {
            E::Numerical(_) => CliError::Numerical(e.to_string()),
            E::InvalidArgument(_) => CliError::Usage(e.to_string()),
            _ => CliError::Data(e.to_string()),
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "cyclone-sde", version, about = "Sparse stochastic model of tropical-cyclone intensity")]
pub struct Cli {
    /// TOML file with defaults; flags given on the command line win.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Master random seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads (0 = all cores).
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// More log output (repeatable).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Write a synthetic track corpus generated by the built-in model.
    Generate(commands::GenerateArgs),
    /// Assemble the integral regression system and fit the full library.
    Fit(commands::FitArgs),
    /// Cross-validated sparse support selection.
    Select(commands::SelectArgs),
    /// Ensemble Kalman fine-tuning of a model's coefficients.
    Tune(commands::TuneArgs),
    /// Fit the intensity-dependent noise amplitude.
    Calibrate(commands::CalibrateArgs),
    /// Simulate intensity ensembles along tracks.
    Simulate(commands::SimulateArgs),
    /// Fixed points and a one-parameter bifurcation scan.
    Bifurcate(commands::BifurcateArgs),
    /// Hazard statistics from simulated or observed trajectories.
    Hazard(commands::HazardArgs),
    /// Print a model or export the built-in one.
    Model(commands::ModelArgs),
}

/// Seed and worker count after merging flags and configuration.
#[derive(Debug, Clone, Copy)]
pub struct Globals {
    pub seed: u64,
    pub workers: usize,
}

fn global_value<T: serde::de::DeserializeOwned>(
    flag: Option<T>,
    file: &toml::Table,
    key: &str,
) -> Result<Option<T>, CliError> {
    if flag.is_some() {
        return Ok(flag);
    }
    match file.get(key) {
        None => Ok(None),
        Some(v) => v
            .clone()
            .try_into()
            .map(Some)
            .map_err(|e| CliError::Usage(format!("config key '{key}': {e}"))),
    }
}

fn run(args: Vec<OsString>) -> Result<(), CliError> {
    let matches = Cli::command()
        .try_get_matches_from(args)
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let cli = Cli::from_arg_matches(&matches).map_err(|e| CliError::Usage(e.to_string()))?;
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .try_init();
    let file = match &cli.config {
        Some(p) => ConfigFile::load(p)?,
        None => ConfigFile::default(),
    };
    let globals = file.globals();
    for k in globals.keys() {
        if k != "seed" && k != "workers" {
            return Err(CliError::Usage(format!("unknown top-level config key '{k}'")));
        }
    }
    let g = Globals {
        seed: global_value(cli.seed, &globals, "seed")?.unwrap_or(0),
        workers: global_value(cli.workers, &globals, "workers")?.unwrap_or(0),
    };
    let (name, sub): (&str, &ArgMatches) = matches.subcommand().expect("subcommand required");
    let section = file.section(name)?;
    cyclone_sde::par::with_workers(g.workers, || commands::dispatch(name, sub, &section, g))
}

fn main() -> ExitCode {
    let args: Vec<OsString> = std::env::args_os().collect();
    // --help and --version are successful exits
    if let Err(e) = Cli::command().try_get_matches_from(args.clone()) {
        use clap::error::ErrorKind;
        if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
    }
    match run(args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.code())
        }
    }
}
