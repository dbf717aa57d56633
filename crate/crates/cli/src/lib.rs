//! Command-line front end for the photon-number filter cascade.

pub mod commands;
pub mod config;
pub mod output;

use std::ffi::OsString;
use std::io::{self, Write};
use std::path::PathBuf;

use clap::{Parser, Subcommand};
use serde::Serialize;

use config::{Experiment, ExperimentConfig, Extras, OutputFormat, Settings};
use output::Table;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),
    #[error("numerical tolerance exceeded: {0}")]
    Numerical(String),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Validation(_) => 1,
            Self::Numerical(_) => 2,
            Self::Io { .. } => 3,
        }
    }
}

impl From<fwm_cascade::error::Error> for CliError {
    fn from(e: fwm_cascade::error::Error) -> Self {
        match e {
            fwm_cascade::error::Error::IntegrationTolerance { .. } => Self::Numerical(e.to_string()),
            other => Self::Validation(other.to_string()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "fwm-cascade", version, about = "Photon-number filtering by cascaded four-wave mixing")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Tabulate |ξ_j⁽ⁿ⁾| and arg ξ_j⁽ⁿ⁾ after one stage.
    Coeffs {
        #[command(flatten)]
        settings: Settings,
        /// Largest photon number to tabulate.
        #[arg(long)]
        max_n: Option<usize>,
    },
    /// Ω₁ photon-number distribution after each stage.
    Filter {
        #[command(flatten)]
        settings: Settings,
    },
    /// Detector-record probabilities and single-photon discrimination.
    Detect {
        #[command(flatten)]
        settings: Settings,
        /// Also sample this many trajectories with the given seed.
        #[arg(long)]
        trials: Option<u64>,
    },
    /// Stage lengths that return an n-photon input fully to Ω₁.
    Tune {
        #[command(flatten)]
        settings: Settings,
        /// Photon number to tune for; repeatable.
        #[arg(long = "sector", value_name = "N")]
        sectors: Vec<usize>,
        /// Required 1 − R.
        #[arg(long)]
        tolerance: Option<f64>,
    },
    /// Compare the sector solution against the full Fock-space oracles.
    OracleCheck {
        #[command(flatten)]
        settings: Settings,
    },
}

impl Command {
    pub fn into_parts(self) -> (Experiment, Settings, Extras) {
        match self {
            Self::Coeffs { settings, max_n } => (
                Experiment::Coeffs,
                settings,
                Extras {
                    max_n,
                    ..Extras::default()
                },
            ),
            Self::Filter { settings } => (Experiment::Filter, settings, Extras::default()),
            Self::Detect { settings, trials } => (
                Experiment::Detect,
                settings,
                Extras {
                    trials,
                    ..Extras::default()
                },
            ),
            Self::Tune {
                settings,
                sectors,
                tolerance,
            } => (
                Experiment::Tune,
                settings,
                Extras {
                    sectors,
                    tolerance,
                    ..Extras::default()
                },
            ),
            Self::OracleCheck { settings } => (Experiment::OracleCheck, settings, Extras::default()),
        }
    }
}

fn render<R: Serialize + Table>(cfg: &ExperimentConfig, result: &R) -> Result<String, CliError> {
    match cfg.output_format {
        OutputFormat::Csv => output::to_csv(result),
        OutputFormat::Json => output::to_json(cfg, result),
    }
}

/// Runs the experiment and returns the rendered output plus whether every
/// numerical check passed.
pub fn execute(cfg: &ExperimentConfig) -> Result<(String, bool), CliError> {
    Ok(match cfg.experiment {
        Experiment::Coeffs => (render(cfg, &commands::cmd_coeffs(cfg)?)?, true),
        Experiment::Filter => (render(cfg, &commands::cmd_filter(cfg)?)?, true),
        Experiment::Detect => (render(cfg, &commands::cmd_detect(cfg)?)?, true),
        Experiment::Tune => (render(cfg, &commands::cmd_tune(cfg)?)?, true),
        Experiment::OracleCheck => {
            let res = commands::cmd_oracle_check(cfg)?;
            (render(cfg, &res)?, res.passed)
        }
    })
}

fn emit(cfg: &ExperimentConfig, text: &str, stdout: &mut dyn Write) -> Result<(), CliError> {
    match &cfg.output_path {
        Some(path) => std::fs::write(path, text).map_err(|source| CliError::Io {
            path: path.clone(),
            source,
        }),
        None => stdout.write_all(text.as_bytes()).map_err(|source| CliError::Io {
            path: PathBuf::from("<stdout>"),
            source,
        }),
    }
}

fn run_parsed(cli: Cli, stdout: &mut dyn Write) -> Result<(), CliError> {
    let (experiment, settings, extras) = cli.command.into_parts();
    let cfg = ExperimentConfig::resolve(experiment, settings, extras)?;
    let (text, passed) = execute(&cfg)?;
    emit(&cfg, &text, stdout)?;
    if passed {
        Ok(())
    } else {
        Err(CliError::Numerical("one or more oracle checks failed".into()))
    }
}

/// Entry point shared by the binary and the tests; returns the exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let text = e.render().to_string();
            let sink: &mut dyn Write = if e.use_stderr() { stderr } else { stdout };
            let _ = sink.write_all(text.as_bytes());
            return code;
        }
    };
    match run_parsed(cli, stdout) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}
