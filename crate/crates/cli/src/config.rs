//! Experiment configuration: flat `key = value` files overlaid by flags.

use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use fwm_cascade::cascade::DetectorModel;
use fwm_cascade::fock::{default_truncation, InputSpec, DEFAULT_TAIL_TOLERANCE};
use fwm_cascade::oracle::MAX_TRUNCATION;
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    Coeffs,
    Filter,
    Detect,
    Tune,
    OracleCheck,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

/// Options shared by every subcommand. Unset values fall back to the
/// config file, then to built-in defaults.
#[derive(Debug, Clone, Default, Args)]
pub struct Settings {
    /// Flat `key = value` file; flags given on the command line win.
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Number of cascade stages.
    #[arg(long)]
    pub stages: Option<usize>,
    /// Stage length as `θ = κ|Ω₂|cτ` in radians; accepts forms like `pi`,
    /// `2pi`, `pi/2`. Give once for all stages or once per stage.
    #[arg(long, value_name = "RAD")]
    pub theta: Vec<String>,
    /// `fock:N` or `coherent:MEAN`.
    #[arg(long, value_name = "SPEC")]
    pub input: Option<String>,
    /// Photon-number cutoff: coherent inputs, or the full-space oracle.
    #[arg(long)]
    pub truncation: Option<usize>,
    /// Detector efficiency in (0, 1].
    #[arg(long)]
    pub efficiency: Option<f64>,
    /// Detectors report photon number instead of click/no-click.
    #[arg(long)]
    pub resolving: bool,
    /// Phase of the classical drive Ω₂.
    #[arg(long, value_name = "RAD")]
    pub phase: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_enum)]
    pub format: Option<OutputFormat>,
    /// Write results here instead of standard output.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

/// Subcommand-specific knobs, also settable from the config file.
#[derive(Debug, Clone, Default)]
pub struct Extras {
    pub max_n: Option<usize>,
    pub sectors: Vec<usize>,
    pub tolerance: Option<f64>,
    pub trials: Option<u64>,
}

/// Fully resolved and validated experiment description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub input: InputSpec,
    pub stages: usize,
    pub theta_per_stage: Vec<f64>,
    pub detector: DetectorModel,
    pub drive_phase: f64,
    pub seed: u64,
    pub output_format: OutputFormat,
    pub output_path: Option<PathBuf>,
    /// Largest photon number tabulated by `coeffs`.
    pub max_n: usize,
    /// Photon numbers tuned by `tune`.
    pub sectors: Vec<usize>,
    /// Return-probability tolerance for `tune`.
    pub tolerance: f64,
    /// Monte Carlo trials for `detect`; exact enumeration only when absent.
    pub trials: Option<u64>,
    /// Per-mode cutoff of the full Fock space for `oracle-check`.
    pub oracle_truncation: usize,
}

fn invalid(msg: impl Into<String>) -> CliError {
    CliError::Validation(msg.into())
}

/// Parses `1.5`, `pi`, `2pi`, `2*pi`, `-pi/4`, `3pi/2`.
pub fn parse_angle(text: &str) -> Result<f64, CliError> {
    let s = text.trim().to_ascii_lowercase().replace(' ', "");
    let bad = || invalid(format!("cannot parse angle '{text}'"));
    let (num, den) = match s.split_once('/') {
        Some((n, d)) => (n, d.parse::<f64>().map_err(|_| bad())?),
        None => (s.as_str(), 1.0),
    };
    let value = if let Some(coef) = num.strip_suffix("pi") {
        let coef = coef.strip_suffix('*').unwrap_or(coef);
        let c = match coef {
            "" | "+" => 1.0,
            "-" => -1.0,
            c => c.parse::<f64>().map_err(|_| bad())?,
        };
        c * PI
    } else {
        num.parse::<f64>().map_err(|_| bad())?
    };
    let value = value / den;
    if !value.is_finite() {
        return Err(bad());
    }
    Ok(value)
}

/// Parses `fock:N` or `coherent:MEAN`; the truncation is filled in later.
fn parse_input(text: &str) -> Result<InputKind, CliError> {
    let bad = || invalid(format!("input must be fock:N or coherent:MEAN, got '{text}'"));
    let (kind, value) = text.trim().split_once(':').ok_or_else(bad)?;
    match kind.to_ascii_lowercase().as_str() {
        "fock" => Ok(InputKind::Fock(value.parse().map_err(|_| bad())?)),
        "coherent" => {
            let mean: f64 = value.parse().map_err(|_| bad())?;
            if !(mean.is_finite() && mean >= 0.0) {
                return Err(bad());
            }
            Ok(InputKind::Coherent(mean))
        }
        _ => Err(bad()),
    }
}

enum InputKind {
    Fock(usize),
    Coherent(f64),
}

fn parse_value<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, CliError> {
    value
        .trim()
        .parse()
        .map_err(|_| invalid(format!("bad value '{value}' for '{key}'")))
}

fn parse_list<T: std::str::FromStr>(key: &str, value: &str) -> Result<Vec<T>, CliError> {
    value
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| parse_value(key, s))
        .collect()
}

/// Reads a config file into settings, `#` starting a comment.
pub fn read_config_file(path: &Path) -> Result<(Settings, Extras), CliError> {
    let text = fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_config(&text)
}

pub fn parse_config(text: &str) -> Result<(Settings, Extras), CliError> {
    let mut s = Settings::default();
    let mut x = Extras::default();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| invalid(format!("config line {}: expected key = value", lineno + 1)))?;
        let key = key.trim().replace('-', "_");
        let value = value.trim();
        match key.as_str() {
            "stages" => s.stages = Some(parse_value(&key, value)?),
            "theta" => s.theta = value.split(',').map(|t| t.trim().to_string()).collect(),
            "input" => s.input = Some(value.to_string()),
            "truncation" => s.truncation = Some(parse_value(&key, value)?),
            "efficiency" => s.efficiency = Some(parse_value(&key, value)?),
            "resolving" => s.resolving = parse_value(&key, value)?,
            "phase" => s.phase = Some(value.to_string()),
            "seed" => s.seed = Some(parse_value(&key, value)?),
            "format" => {
                s.format = Some(
                    OutputFormat::from_str(value, true).map_err(|_| invalid(format!("unknown format '{value}'")))?,
                )
            }
            "out" => s.out = Some(PathBuf::from(value)),
            "max_n" => x.max_n = Some(parse_value(&key, value)?),
            "sector" | "sectors" => x.sectors = parse_list(&key, value)?,
            "tolerance" => x.tolerance = Some(parse_value(&key, value)?),
            "trials" => x.trials = Some(parse_value(&key, value)?),
            _ => {
                return Err(invalid(format!(
                    "config line {}: unknown key '{key}'",
                    lineno + 1
                )))
            }
        }
    }
    Ok((s, x))
}

impl Settings {
    /// `self` wins wherever it is set.
    fn over(self, base: Settings) -> Settings {
        Settings {
            config: None,
            stages: self.stages.or(base.stages),
            theta: if self.theta.is_empty() { base.theta } else { self.theta },
            input: self.input.or(base.input),
            truncation: self.truncation.or(base.truncation),
            efficiency: self.efficiency.or(base.efficiency),
            resolving: self.resolving || base.resolving,
            phase: self.phase.or(base.phase),
            seed: self.seed.or(base.seed),
            format: self.format.or(base.format),
            out: self.out.or(base.out),
        }
    }
}

impl Extras {
    fn over(self, base: Extras) -> Extras {
        Extras {
            max_n: self.max_n.or(base.max_n),
            sectors: if self.sectors.is_empty() { base.sectors } else { self.sectors },
            tolerance: self.tolerance.or(base.tolerance),
            trials: self.trials.or(base.trials),
        }
    }
}

pub const DEFAULT_STAGES: usize = 4;
pub const DEFAULT_MAX_N: usize = 4;
pub const DEFAULT_TUNE_TOLERANCE: f64 = 1e-12;
pub const DEFAULT_ORACLE_TRUNCATION: usize = 4;

impl ExperimentConfig {
    /// Merges flags over the optional config file and applies defaults.
    pub fn resolve(experiment: Experiment, flags: Settings, extras: Extras) -> Result<Self, CliError> {
        let (settings, extras) = match &flags.config {
            Some(path) => {
                let (file, file_extras) = read_config_file(path)?;
                (flags.over(file), extras.over(file_extras))
            }
            None => (flags, extras),
        };

        let stages = settings.stages.unwrap_or(DEFAULT_STAGES);
        let theta_per_stage = if settings.theta.is_empty() {
            vec![PI]
        } else {
            settings
                .theta
                .iter()
                .map(|t| parse_angle(t))
                .collect::<Result<_, _>>()?
        };
        let oracle = experiment == Experiment::OracleCheck;
        let input = match parse_input(settings.input.as_deref().unwrap_or("fock:2"))? {
            InputKind::Fock(n) => InputSpec::Fock { n },
            InputKind::Coherent(mean_n) => {
                let truncation = match settings.truncation {
                    Some(t) if !oracle => t,
                    _ => default_truncation(mean_n, DEFAULT_TAIL_TOLERANCE)?,
                };
                InputSpec::Coherent { mean_n, truncation }
            }
        };
        let oracle_truncation = if oracle {
            settings.truncation.unwrap_or(DEFAULT_ORACLE_TRUNCATION)
        } else {
            DEFAULT_ORACLE_TRUNCATION
        };
        let drive_phase = match &settings.phase {
            Some(p) => parse_angle(p)?,
            None => 0.0,
        };

        let config = ExperimentConfig {
            experiment,
            input,
            stages,
            theta_per_stage,
            detector: DetectorModel {
                efficiency: settings.efficiency.unwrap_or(1.0),
                number_resolving: settings.resolving,
            },
            drive_phase,
            seed: settings.seed.unwrap_or(0),
            output_format: settings.format.unwrap_or_default(),
            output_path: settings.out,
            max_n: extras.max_n.unwrap_or(DEFAULT_MAX_N),
            sectors: if extras.sectors.is_empty() { vec![1, 2, 3] } else { extras.sectors },
            tolerance: extras.tolerance.unwrap_or(DEFAULT_TUNE_TOLERANCE),
            trials: extras.trials,
            oracle_truncation,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let n_theta = self.theta_per_stage.len();
        if n_theta != 1 && n_theta != self.stages {
            return Err(invalid(format!(
                "{n_theta} theta values given for {} stages; give one or one per stage",
                self.stages
            )));
        }
        if let Some(t) = self.theta_per_stage.iter().find(|t| !(t.is_finite() && **t >= 0.0)) {
            return Err(invalid(format!("theta must be finite and non-negative, got {t}")));
        }
        if !self.drive_phase.is_finite() {
            return Err(invalid("drive phase must be finite"));
        }
        self.detector.validate()?;
        if let InputSpec::Coherent { mean_n, .. } = self.input {
            if !(mean_n.is_finite() && mean_n >= 0.0) {
                return Err(invalid(format!("coherent mean must be non-negative, got {mean_n}")));
            }
        }
        if self.sectors.is_empty() || self.sectors.contains(&0) {
            return Err(invalid("tuned photon numbers must be at least 1"));
        }
        if !(self.tolerance > 0.0 && self.tolerance < 1.0) {
            return Err(invalid(format!("tolerance must lie in (0, 1), got {}", self.tolerance)));
        }
        if self.trials == Some(0) {
            return Err(invalid("trials must be positive"));
        }
        if !(1..=MAX_TRUNCATION).contains(&self.oracle_truncation) {
            return Err(invalid(format!(
                "oracle truncation must lie in 1..={MAX_TRUNCATION}, got {}",
                self.oracle_truncation
            )));
        }
        Ok(())
    }

    /// Stage length of each stage, expanding a single value.
    pub fn thetas(&self) -> Vec<f64> {
        if self.theta_per_stage.len() == 1 {
            vec![self.theta_per_stage[0]; self.stages]
        } else {
            self.theta_per_stage.clone()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn angles() {
        assert_eq!(parse_angle("pi").unwrap(), PI);
        assert_eq!(parse_angle("2pi").unwrap(), 2.0 * PI);
        assert_eq!(parse_angle("2 * pi").unwrap(), 2.0 * PI);
        assert_eq!(parse_angle("-pi/4").unwrap(), -PI / 4.0);
        assert_eq!(parse_angle("3pi/2").unwrap(), 1.5 * PI);
        assert_eq!(parse_angle("0.25").unwrap(), 0.25);
        assert!(parse_angle("pie").is_err());
        assert!(parse_angle("1/0").is_err());
    }

    #[test]
    fn config_file_and_flag_precedence() {
        let (file, extras) = parse_config(
            "# filter run\nstages = 8\ntheta = 2pi\ninput = coherent:2.25\nseed=7\nmax-n = 3\n",
        )
        .unwrap();
        let flags = Settings {
            stages: Some(2),
            ..Settings::default()
        };
        let merged = flags.over(file);
        assert_eq!(merged.stages, Some(2));
        assert_eq!(merged.seed, Some(7));
        assert_eq!(merged.theta, vec!["2pi"]);
        assert_eq!(extras.max_n, Some(3));
        assert!(parse_config("colour = blue").is_err());
        assert!(parse_config("stages").is_err());
    }

    #[test]
    fn defaults_and_validation() {
        let cfg = ExperimentConfig::resolve(Experiment::Detect, Settings::default(), Extras::default()).unwrap();
        assert_eq!(cfg.input, InputSpec::Fock { n: 2 });
        assert_eq!(cfg.thetas(), vec![PI; 4]);

        let two_thetas = Settings {
            theta: vec!["pi".into(), "2pi".into()],
            ..Settings::default()
        };
        assert!(ExperimentConfig::resolve(Experiment::Filter, two_thetas, Extras::default()).is_err());

        let coherent = Settings {
            input: Some("coherent:2.25".into()),
            ..Settings::default()
        };
        let cfg = ExperimentConfig::resolve(Experiment::Filter, coherent, Extras::default()).unwrap();
        assert!(matches!(cfg.input, InputSpec::Coherent { truncation, .. } if truncation > 10));

        for bad in ["fock:-1", "coherent:-2", "squeezed:1", "fock"] {
            let s = Settings {
                input: Some(bad.into()),
                ..Settings::default()
            };
            assert!(ExperimentConfig::resolve(Experiment::Filter, s, Extras::default()).is_err(), "{bad}");
        }
    }
}
