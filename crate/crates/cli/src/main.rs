//! `rymet`: runs the studies from a flat JSON config and writes CSV or JSON tables.

mod commands;
mod config;
mod error;
mod table;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::config::Config;
use crate::error::CliError;
use crate::table::Table;

/// Default output directory when `--output` is not given.
const OUTPUT_DIR_ENV: &str = "RYMET_OUTPUT_DIR";

#[derive(Parser)]
#[command(name = "rymet", version, about = "Rydberg spin-wave metrology studies")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Two-excitation toy model: Fisher information with and without error prevention.
    ToyFi(RunArgs),
    /// Read-out decay against delay, with single-exponential fits.
    DecayScan(RunArgs),
    /// Mean photon numbers of both modes against the rotation angle.
    SuperRabi(RunArgs),
    /// Fisher information of the photon-count statistics.
    FiScan(RunArgs),
    /// Synthetic maximum-likelihood experiment with bootstrap errors.
    MlExperiment(RunArgs),
    /// Field precision and sensitivity at the optimal angle.
    Sensitivity(RunArgs),
    /// Excluded-volume integral and interaction-induced decay rate.
    Dipolar(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// JSON object with the run parameters.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override a parameter, `key=value`; the value is read as JSON if possible.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Output file; defaults to `$RYMET_OUTPUT_DIR/<command>.<ext>` or stdout.
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

impl Format {
    fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

fn load_config(args: &RunArgs) -> Result<(Config, Option<PathBuf>, Format), CliError> {
    let mut config = match &args.config {
        Some(path) => Config::from_file(path)?,
        None => Config::default(),
    };
    for assignment in &args.set {
        config.set(assignment)?;
    }
    if let Some(seed) = args.seed {
        config.set(&format!("seed={seed}"))?;
    }
    let file_output = match config.remove("output") {
        None => None,
        Some(serde_json::Value::String(s)) => Some(PathBuf::from(s)),
        Some(v) => return Err(CliError::Config(format!("output must be a path, got {v}"))),
    };
    let file_format = match config.remove("format") {
        None => None,
        Some(serde_json::Value::String(s)) => Some(match s.as_str() {
            "csv" => Format::Csv,
            "json" => Format::Json,
            _ => return Err(CliError::Config(format!("format {s} is not one of csv, json"))),
        }),
        Some(v) => return Err(CliError::Config(format!("format must be a string, got {v}"))),
    };
    let output = args.output.clone().or(file_output);
    let format = args.format.or(file_format).unwrap_or(Format::Csv);
    Ok((config, output, format))
}

fn run(cli: Cli) -> Result<(), CliError> {
    let (name, args, command): (&str, &RunArgs, fn(&Config) -> Result<Table, CliError>) =
        match &cli.command {
            Command::ToyFi(a) => ("toy-fi", a, commands::toy_fi),
            Command::DecayScan(a) => ("decay-scan", a, commands::decay_scan),
            Command::SuperRabi(a) => ("super-rabi", a, commands::super_rabi),
            Command::FiScan(a) => ("fi-scan", a, commands::fi_scan),
            Command::MlExperiment(a) => ("ml-experiment", a, commands::ml_experiment),
            Command::Sensitivity(a) => ("sensitivity", a, commands::sensitivity),
            Command::Dipolar(a) => ("dipolar", a, commands::dipolar),
        };
    let (config, output, format) = load_config(args)?;
    let table = command(&config)?;
    let text = match format {
        Format::Csv => table.to_csv(),
        Format::Json => table.to_json(),
    };
    let output = output.or_else(|| {
        std::env::var_os(OUTPUT_DIR_ENV)
            .map(|dir| PathBuf::from(dir).join(format!("{name}.{}", format.extension())))
    });
    match output {
        Some(path) => {
            if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
                std::fs::create_dir_all(parent)?;
            }
            std::fs::write(&path, text)?;
        }
        None => std::io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("rymet: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
