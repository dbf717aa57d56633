//! CSV and JSON rendering. CSV holds one row per stage, record, sector or
//! check with floats at 12 significant digits; JSON wraps the full result
//! together with the configuration that produced it.

use serde::{Deserialize, Serialize};

use crate::commands::{CoeffsResult, DetectResult, FilterResult, OracleResult, TuneResult};
use crate::config::ExperimentConfig;
use crate::CliError;

/// Twelve significant digits in scientific notation.
pub fn fmt_float(x: f64) -> String {
    // folds −0 into 0
    let x = x + 0.0;
    format!("{x:.11e}")
}

fn fmt_opt<T: ToString>(x: Option<T>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

/// JSON document written by every subcommand.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report<R> {
    pub config: ExperimentConfig,
    pub result: R,
}

pub trait Table {
    fn header(&self) -> Vec<String>;
    fn rows(&self) -> Vec<Vec<String>>;
}

fn owned(cols: &[&str]) -> Vec<String> {
    cols.iter().map(|s| s.to_string()).collect()
}

impl Table for CoeffsResult {
    fn header(&self) -> Vec<String> {
        owned(&["theta", "n", "j", "magnitude", "phase"])
    }

    fn rows(&self) -> Vec<Vec<String>> {
        self.rows
            .iter()
            .map(|r| {
                vec![
                    fmt_float(self.theta),
                    r.n.to_string(),
                    r.j.to_string(),
                    fmt_float(r.magnitude),
                    fmt_float(r.phase),
                ]
            })
            .collect()
    }
}

impl Table for FilterResult {
    fn header(&self) -> Vec<String> {
        let width = self.rows.first().map_or(0, |r| r.probs.len());
        let mut h = vec!["stage".to_string()];
        h.extend((0..width).map(|k| format!("p{k}")));
        h.push("p_ge2".into());
        h
    }

    fn rows(&self) -> Vec<Vec<String>> {
        self.rows
            .iter()
            .map(|r| {
                let mut row = vec![r.stage.to_string()];
                row.extend(r.probs.iter().map(|p| fmt_float(*p)));
                row.push(fmt_float(r.p_ge2));
                row
            })
            .collect()
    }
}

impl Table for DetectResult {
    fn header(&self) -> Vec<String> {
        owned(&["kind", "label", "probability", "sampled_frequency"])
    }

    fn rows(&self) -> Vec<Vec<String>> {
        let mut rows: Vec<Vec<String>> = self
            .records
            .iter()
            .map(|r| {
                vec![
                    "record".into(),
                    r.label.clone(),
                    fmt_float(r.probability),
                    fmt_opt(r.sampled_frequency.map(fmt_float)),
                ]
            })
            .collect();
        let summary = |label: &str, value: f64| vec!["summary".into(), label.into(), fmt_float(value), String::new()];
        rows.push(summary("only_final", self.p_only_final));
        rows.push(summary("no_stage_click", self.p_no_stage_click));
        rows.push(summary("silent", self.p_silent));
        for (k, p) in self.p_stage_fired.iter().enumerate() {
            rows.push(summary(&format!("stage_fired_{}", k + 1), *p));
        }
        rows.push(summary("accuracy", self.accuracy));
        rows
    }
}

impl Table for TuneResult {
    fn header(&self) -> Vec<String> {
        owned(&["n", "theta", "theta_over_pi", "return_probability", "one_minus_return", "exact"])
    }

    fn rows(&self) -> Vec<Vec<String>> {
        self.lengths
            .iter()
            .map(|t| {
                vec![
                    t.n.to_string(),
                    fmt_float(t.theta),
                    fmt_float(t.theta / std::f64::consts::PI),
                    fmt_float(t.return_probability),
                    fmt_float(1.0 - t.return_probability),
                    t.exact.to_string(),
                ]
            })
            .collect()
    }
}

impl Table for OracleResult {
    fn header(&self) -> Vec<String> {
        owned(&["check", "max_deviation", "tolerance", "passed"])
    }

    fn rows(&self) -> Vec<Vec<String>> {
        self.checks
            .iter()
            .map(|c| {
                vec![
                    c.name.clone(),
                    fmt_float(c.max_deviation),
                    fmt_float(c.tolerance),
                    c.passed.to_string(),
                ]
            })
            .collect()
    }
}

pub fn to_csv(table: &impl Table) -> Result<String, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| CliError::Validation(format!("CSV encoding failed: {e}"));
    w.write_record(table.header()).map_err(csv_err)?;
    for row in table.rows() {
        w.write_record(row).map_err(csv_err)?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| CliError::Validation(format!("CSV encoding failed: {e}")))?;
    Ok(String::from_utf8(bytes).expect("CSV output is UTF-8"))
}

#[derive(Serialize)]
struct ReportRef<'a, R> {
    config: &'a ExperimentConfig,
    result: &'a R,
}

pub fn to_json<R: Serialize>(config: &ExperimentConfig, result: &R) -> Result<String, CliError> {
    let report = ReportRef { config, result };
    let mut text = serde_json::to_string_pretty(&report)
        .map_err(|e| CliError::Validation(format!("JSON encoding failed: {e}")))?;
    text.push('\n');
    Ok(text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn twelve_significant_digits() {
        assert_eq!(fmt_float(0.17058), "1.70580000000e-1");
        assert_eq!(fmt_float(1.0), "1.00000000000e0");
        assert_eq!(fmt_float(0.0), "0.00000000000e0");
        assert_eq!(fmt_float(-0.0), "0.00000000000e0");
    }
}
