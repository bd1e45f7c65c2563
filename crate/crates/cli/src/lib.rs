//! Command-line front end: configuration, experiment dispatch and output.

pub mod config;
pub mod run;

use std::hash::{BuildHasher, Hasher};
use std::path::PathBuf;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};

use config::{load_config, Experiment, RunConfig};

#[derive(Debug, Parser)]
#[command(
    name = "memkin",
    version,
    about = "Kinetic simulator for interface-type BiFeO3 memristors"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Single I-V sweep of one device.
    Sweep(RunArgs),
    /// Consecutive sweeps of one device.
    C2c(RunArgs),
    /// One sweep each on several devices.
    D2d(RunArgs),
    /// Sweeps over a temperature series, with and without friction.
    Temperature(RunArgs),
    /// Sweeps of fresh devices at several amplitudes.
    Amplitude(RunArgs),
    /// Program a state, then relax and read repeatedly.
    Retention(RunArgs),
    /// Print the effective configuration as TOML.
    Config(RunArgs),
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// TOML configuration file; omitted keys take their defaults.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory (default `memkin-out/<experiment>`).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Set a configuration key, e.g. `device.lambda_u=0.01`. Repeatable.
    #[arg(long = "override", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
}

impl Command {
    fn parts(&self) -> (Option<Experiment>, &RunArgs) {
        match self {
            Command::Sweep(a) => (Some(Experiment::Sweep), a),
            Command::C2c(a) => (Some(Experiment::C2c), a),
            Command::D2d(a) => (Some(Experiment::D2d), a),
            Command::Temperature(a) => (Some(Experiment::Temperature), a),
            Command::Amplitude(a) => (Some(Experiment::Amplitude), a),
            Command::Retention(a) => (Some(Experiment::Retention), a),
            Command::Config(a) => (None, a),
        }
    }
}

/// A fresh 63-bit seed from the standard library's hasher entropy.
fn fresh_seed() -> u64 {
    let mut h = std::collections::hash_map::RandomState::new().build_hasher();
    h.write_u64(std::process::id() as u64);
    h.finish() >> 1
}

/// Loads the configuration and resolves the seed, experiment and output directory.
pub fn resolve(command: &Command) -> Result<RunConfig> {
    let (experiment, args) = command.parts();
    let mut config = load_config(args.config.as_deref(), &args.overrides)?;
    if let Some(e) = experiment {
        config.experiment = Some(e);
    }
    if let Some(s) = args.seed {
        config.seed = Some(s);
    }
    if config.seed.is_none() {
        config.seed = Some(fresh_seed());
    }
    if let Some(out) = &args.out {
        config.output_dir = Some(out.clone());
    }
    Ok(config)
}

pub fn run(cli: &Cli) -> Result<()> {
    let config = resolve(&cli.command)?;
    let Some(experiment) = config.experiment.filter(|_| !matches!(cli.command, Command::Config(_))) else {
        print!("{}", config.to_toml()?);
        return Ok(());
    };
    let out = config
        .output_dir
        .clone()
        .unwrap_or_else(|| PathBuf::from("memkin-out").join(experiment.name()));
    let artifacts = run::execute(&config, experiment)?;
    run::write_artifacts(&artifacts, &out, config.output.max_trace_rows)?;
    eprintln!(
        "{}: wrote {} trace file(s) and summary.json to {} (seed {})",
        experiment.name(),
        artifacts.traces.len(),
        out.display(),
        config.seed.unwrap_or_default()
    );
    Ok(())
}

/// Machine-readable category of a failure.
pub fn error_category(err: &anyhow::Error) -> &'static str {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<memkin_core::Error>() {
            return e.category();
        }
        if cause.is::<toml::de::Error>() || cause.is::<toml::ser::Error>() {
            return "config";
        }
        if cause.is::<std::io::Error>() || cause.is::<tempfile::PersistError>() {
            return "io";
        }
    }
    "internal"
}

/// Process exit code of a failure category.
pub fn exit_code(category: &str) -> u8 {
    match category {
        "config" => 2,
        "io" => 3,
        "solver" => 4,
        "domain" | "state" => 5,
        _ => 1,
    }
}
