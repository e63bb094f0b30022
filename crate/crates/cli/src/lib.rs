//! Configuration loading, experiment running and data export for `qwalk`.
//!
//! The binary is a thin wrapper around [`run_cli`]. Exit codes: 0 success,
//! 1 usage or configuration error, 2 runtime error.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

pub mod config;
pub mod diagnostics;
pub mod experiment;
pub mod report;

use config::{load_config, Format, LoadedConfig};
use diagnostics::Severity;
use experiment::Command;
use report::Report;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("field `{field}`: {message}")]
    Field { field: String, message: String },
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn config(msg: impl Into<String>) -> Self {
        CliError::Config(msg.into())
    }

    pub fn field(field: &str, message: impl Into<String>) -> Self {
        CliError::Field {
            field: field.to_string(),
            message: message.into(),
        }
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) | CliError::Field { .. } => 1,
            CliError::Runtime(_) => 2,
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "qwalk",
    version,
    about = "Time-multiplexed quantum walk simulator"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Sub,
}

#[derive(Debug, Args)]
pub struct Common {
    /// JSON run configuration.
    #[arg(long, value_name = "PATH")]
    pub config: PathBuf,
    /// Write one file per table into DIR instead of printing.
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Overrides the configuration's output format.
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Overrides the configuration's seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Overrides the configuration's step count.
    #[arg(long)]
    pub steps: Option<u32>,
}

#[derive(Debug, Subcommand)]
pub enum Sub {
    /// Evolve a walk (unrestricted, finite, prep or transfer).
    Simulate(Common),
    /// Photon numbers, multi-photon probabilities and optimal outcoupling.
    Budget(Common),
    /// Attainable step number over loss and detector dynamic range.
    Sweep(Common),
    /// Enumerate reflection schedules that transfer a state.
    TransferSearch(Common),
    /// Simulated polarization tomography at one site of a walk.
    Tomography(Common),
    /// Monte Carlo error bars under parameter perturbations.
    Montecarlo(Common),
    /// Check a configuration against the hardware constraints.
    Validate(Common),
}

fn load(common: &Common) -> Result<LoadedConfig, CliError> {
    let mut loaded = load_config(&common.config)?;
    let c = &mut loaded.config;
    if let Some(f) = common.format {
        c.format = f;
    }
    if let Some(s) = common.seed {
        c.seed = s;
    }
    if let Some(n) = common.steps {
        c.steps = Some(n);
    }
    Ok(loaded)
}

fn io_error(path: &Path, e: std::io::Error) -> CliError {
    CliError::Runtime(format!("cannot write {}: {e}", path.display()))
}

/// Writes the report to `out` or to `stdout`.
pub fn emit(
    report: &Report,
    format: Format,
    out: Option<&Path>,
    stdout: &mut dyn Write,
) -> Result<(), CliError> {
    match out {
        None => {
            let text = match format {
                Format::Csv => report.to_csv(),
                Format::Json => report.to_json(),
            };
            stdout
                .write_all(text.as_bytes())
                .map_err(|e| CliError::Runtime(format!("cannot write output: {e}")))
        }
        Some(dir) => {
            std::fs::create_dir_all(dir).map_err(|e| io_error(dir, e))?;
            match format {
                Format::Csv => {
                    for t in &report.tables {
                        let path = dir.join(format!("{}.csv", t.name));
                        std::fs::write(&path, report.table_csv(t))
                            .map_err(|e| io_error(&path, e))?;
                    }
                }
                Format::Json => {
                    let path = dir.join(format!("{}.json", report.metadata.experiment));
                    std::fs::write(&path, report.to_json()).map_err(|e| io_error(&path, e))?;
                }
            }
            Ok(())
        }
    }
}

/// Runs one parsed command line. Diagnostics go to `stderr`, data to
/// `stdout` unless `--out` is given.
pub fn run_cli(cli: Cli, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<(), CliError> {
    let (command, common) = match &cli.command {
        Sub::Simulate(c) => (Some(Command::Simulate), c),
        Sub::Budget(c) => (Some(Command::Budget), c),
        Sub::Sweep(c) => (Some(Command::Sweep), c),
        Sub::TransferSearch(c) => (Some(Command::TransferSearch), c),
        Sub::Tomography(c) => (Some(Command::Tomography), c),
        Sub::Montecarlo(c) => (Some(Command::Montecarlo), c),
        Sub::Validate(c) => (None, c),
    };
    let loaded = load(common)?;
    let diags = diagnostics::validate(&loaded.config, &loaded.base_dir);

    let Some(command) = command else {
        match loaded.config.format {
            Format::Json => {
                let text = serde_json::to_string_pretty(&diags).expect("diagnostics serialize");
                let _ = writeln!(stdout, "{text}");
            }
            Format::Csv => {
                for d in &diags {
                    let _ = writeln!(stdout, "{d}");
                }
                if diags.is_empty() {
                    let _ = writeln!(stdout, "ok: no diagnostics");
                }
            }
        }
        let errors = diags
            .iter()
            .filter(|d| d.severity == Severity::Error)
            .count();
        return if errors == 0 {
            Ok(())
        } else {
            Err(CliError::config(format!(
                "validation found {errors} error(s)"
            )))
        };
    };

    // hardware limits do not stop a numerical run; configuration errors
    // surface from `run` itself with their field
    let report = experiment::run(command, &loaded.config, &loaded.base_dir)?;
    for d in &diags {
        let _ = writeln!(stderr, "{d}");
    }
    emit(&report, loaded.config.format, common.out.as_deref(), stdout)
}
