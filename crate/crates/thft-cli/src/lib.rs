//! Batch front end for the `thft` library: JSON experiment configs in, deterministic JSON
//! reports (and CSV ladder points) out.

pub mod commands;
pub mod config;
pub mod report;

use std::path::Path;

pub use config::{ExperimentConfig, Preset};
pub use report::{Report, ResolvedConfig};

/// Exit status 2 for configuration problems, 3 for numerical failures, 1 for I/O.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Io(_) => 1,
        }
    }
}

impl From<thft::ThftError> for CliError {
    fn from(e: thft::ThftError) -> Self {
        match e {
            thft::ThftError::QuadratureNotConverged { .. } => CliError::Numerical(e.to_string()),
            other => CliError::Config(other.to_string()),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Vanish,
    Weight,
    Anomaly,
    Regulator,
    Moments,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Vanish => "vanish",
            Command::Weight => "weight",
            Command::Anomaly => "anomaly",
            Command::Regulator => "regulator",
            Command::Moments => "moments",
        }
    }
}

pub fn run(command: Command, cfg: &ExperimentConfig) -> Result<Report, CliError> {
    cfg.validate()?;
    match command {
        Command::Vanish => commands::cmd_vanish(cfg),
        Command::Weight => commands::cmd_weight(cfg),
        Command::Anomaly => commands::cmd_anomaly(cfg),
        Command::Regulator => commands::cmd_regulator(cfg),
        Command::Moments => commands::cmd_moments(cfg),
    }
}

/// Renders the report in `format`. With an output directory the JSON report is always written
/// as `<command>.json`, plus `<command>.csv` when CSV is requested; nothing is returned for stdout
/// in that case.
pub fn emit(report: &Report, format: Format, out: Option<&Path>) -> Result<Option<String>, CliError> {
    let io = |e: std::io::Error| CliError::Io(e.to_string());
    match out {
        Some(dir) => {
            std::fs::create_dir_all(dir).map_err(io)?;
            std::fs::write(dir.join(format!("{}.json", report.command)), report.to_json()).map_err(io)?;
            if format == Format::Csv {
                std::fs::write(dir.join(format!("{}.csv", report.command)), report.to_csv()?).map_err(io)?;
            }
            Ok(None)
        }
        None => Ok(Some(match format {
            Format::Json => report.to_json(),
            Format::Csv => report.to_csv()?,
        })),
    }
}
