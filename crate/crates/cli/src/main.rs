use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, ValueEnum};
use serde::Serialize;

mod commands;
mod config;
mod error;
mod report;

use config::{load_raw, parse, JsaConfig, PovmConfig, SfgConfig, TeleportConfig};
use error::CliError;
use report::{Format, RunReport};

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Command {
    /// Build a joint spectral amplitude and its Schmidt decomposition.
    Jsa,
    /// Detection elements of a mode family: Gram matrix, purities, completeness.
    Povm,
    /// Teleportation fidelity: closed form, numerical check, or surfaces.
    Teleport,
    /// Upconvert a two-photon input and compare detection probabilities.
    Sfg,
}

/// Two-photon POVM toolkit runner.
#[derive(Debug, Parser)]
#[command(name = "biphoton-povm", version)]
struct Cli {
    #[arg(value_enum)]
    command: Command,

    /// JSON config file; defaults are used for missing keys.
    #[arg(long)]
    config: Option<PathBuf>,

    /// Override a config key, e.g. `--set grid.points=64`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,

    /// Output path. With CSV, additional tables go next to it.
    #[arg(long)]
    out: PathBuf,

    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

fn run_with<T: Serialize + for<'de> serde::Deserialize<'de>>(
    name: &'static str,
    raw: serde_json::Value,
    run: fn(&T, &mut RunReport) -> Result<(), CliError>,
) -> Result<RunReport, CliError> {
    let cfg: T = parse(raw)?;
    let mut report = RunReport::new(name, serde_json::to_value(&cfg)?);
    run(&cfg, &mut report)?;
    Ok(report)
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let start = Instant::now();
    let raw = load_raw(cli.config.as_deref(), &cli.set)?;
    let mut report = match cli.command {
        Command::Jsa => run_with::<JsaConfig>("jsa", raw, commands::run_jsa)?,
        Command::Povm => run_with::<PovmConfig>("povm", raw, commands::run_povm)?,
        Command::Teleport => run_with::<TeleportConfig>("teleport", raw, commands::run_teleport)?,
        Command::Sfg => run_with::<SfgConfig>("sfg", raw, commands::run_sfg)?,
    };
    report.wall_time_s = start.elapsed().as_secs_f64();
    let paths = report.write(&cli.out, cli.format)?;
    println!("{}", serde_json::to_string_pretty(&report.summary(&paths))?);
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
