//! The five experiments. Each returns a serializable result that the
//! output layer renders as CSV or JSON.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use fwm_cascade::analysis::{filter_metrics, stages_to_purity, tune_length_for_sector, TuneOptions, TunedLength};
use fwm_cascade::cascade::{run_cascade, sample_cascade, CascadeOptions};
use fwm_cascade::dynamics::{closed_form_n1, MediumParams, SectorPropagator, StageGeometry};
use fwm_cascade::fock::{InputSpec, Occupation};
use fwm_cascade::oracle::{
    build_full_hamiltonian, check_constants_of_motion, compare_pure_vs_mixture, compare_sector,
    integrate_schrodinger, FullFockState, FullPropagator,
};
use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::CliError;

/// Multi-photon probability below which the filter counts as converged.
pub const PURITY_THRESHOLD: f64 = 0.01;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoeffRow {
    pub n: usize,
    pub j: usize,
    pub magnitude: f64,
    pub phase: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoeffsResult {
    pub theta: f64,
    pub rows: Vec<CoeffRow>,
    /// `Σ_j |ξ_j⁽ⁿ⁾|² − 1` for each `n`, starting at `n = 1`.
    pub norm_defects: Vec<f64>,
}

/// `arg z` in `(−π, π]`, zero for negligible `z`.
fn phase_of(z: num_complex::Complex64) -> f64 {
    if z.norm() < 1e-14 {
        return 0.0;
    }
    let a = z.arg();
    if a <= -PI + 1e-12 {
        a + 2.0 * PI
    } else {
        a
    }
}

pub fn cmd_coeffs(cfg: &ExperimentConfig) -> Result<CoeffsResult, CliError> {
    let theta = cfg.theta_per_stage[0];
    let mut rows = Vec::new();
    let mut norm_defects = Vec::new();
    for n in 1..=cfg.max_n.max(1) {
        let xi = SectorPropagator::new(n, cfg.drive_phase).transfer_coefficients(theta);
        norm_defects.push(xi.iter().map(|x| x.norm_sqr()).sum::<f64>() - 1.0);
        rows.extend(xi.iter().enumerate().map(|(j, x)| CoeffRow {
            n,
            j,
            magnitude: x.norm(),
            phase: phase_of(*x),
        }));
    }
    Ok(CoeffsResult {
        theta,
        rows,
        norm_defects,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterRow {
    /// 0 is the input, `k` the state after stage `k`.
    pub stage: usize,
    pub probs: Vec<f64>,
    pub p0: f64,
    pub p1: f64,
    pub p_ge2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterResult {
    pub rows: Vec<FilterRow>,
    /// First stage with `p_ge2` below [`PURITY_THRESHOLD`].
    pub stages_to_purity: Option<usize>,
    pub pruned_weight: f64,
}

fn geometries(cfg: &ExperimentConfig) -> Result<Vec<StageGeometry>, CliError> {
    cfg.thetas()
        .into_iter()
        .map(|t| StageGeometry::new(t).map_err(CliError::from))
        .collect()
}

fn cascade_setup(cfg: &ExperimentConfig) -> Result<(Vec<StageGeometry>, MediumParams, CascadeOptions), CliError> {
    let params = MediumParams::default().with_phase(cfg.drive_phase);
    Ok((geometries(cfg)?, params, CascadeOptions::with_detector(cfg.detector)))
}

pub fn cmd_filter(cfg: &ExperimentConfig) -> Result<FilterResult, CliError> {
    let (stages, params, opts) = cascade_setup(cfg)?;
    let run = run_cascade(&cfg.input, &stages, &params, &opts)?;
    let metrics = filter_metrics(&run.stage_distributions)?;
    let width = cfg.input.max_photons() + 1;
    let rows = run
        .stage_distributions
        .iter()
        .zip(&metrics)
        .enumerate()
        .map(|(stage, (dist, m))| FilterRow {
            stage,
            probs: (0..width).map(|k| dist.p(k)).collect(),
            p0: m.p0,
            p1: m.p1,
            p_ge2: m.p_ge2,
        })
        .collect();
    Ok(FilterResult {
        rows,
        stages_to_purity: stages_to_purity(&metrics, PURITY_THRESHOLD),
        pruned_weight: run.pruned_weight,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordRow {
    pub label: String,
    pub stage_readings: Vec<u32>,
    pub final_reading: Option<u32>,
    pub probability: f64,
    pub sampled_frequency: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectResult {
    pub records: Vec<RecordRow>,
    /// Only `D^∞` fires: the single-photon signature.
    pub p_only_final: f64,
    pub p_no_stage_click: f64,
    /// No detector fires at all.
    pub p_silent: f64,
    /// `P(Dᵏ fires)` for `k = 1..stages`.
    pub p_stage_fired: Vec<f64>,
    /// Probability that "only `D^∞` fired" correctly tells a single photon
    /// from any other photon number, averaged over the input's sectors.
    pub accuracy: f64,
    pub trials: Option<u64>,
}

pub fn cmd_detect(cfg: &ExperimentConfig) -> Result<DetectResult, CliError> {
    let (stages, params, opts) = cascade_setup(cfg)?;
    let run = run_cascade(&cfg.input, &stages, &params, &opts)?;

    let sampled = match cfg.trials {
        Some(trials) => Some(sample_cascade(&cfg.input, &stages, &params, &opts, trials, cfg.seed)?),
        None => None,
    };
    let mut records: BTreeMap<_, RecordRow> = BTreeMap::new();
    for (record, p) in &run.records {
        records.insert(
            record.clone(),
            RecordRow {
                label: record.to_string(),
                stage_readings: record.stage_readings().to_vec(),
                final_reading: record.final_reading(),
                probability: *p,
                sampled_frequency: sampled.as_ref().map(|_| 0.0),
            },
        );
    }
    if let Some(s) = &sampled {
        for (record, count) in &s.records {
            let freq = *count as f64 / s.trials as f64;
            records
                .entry(record.clone())
                .or_insert_with(|| RecordRow {
                    label: record.to_string(),
                    stage_readings: record.stage_readings().to_vec(),
                    final_reading: record.final_reading(),
                    probability: 0.0,
                    sampled_frequency: None,
                })
                .sampled_frequency = Some(freq);
        }
    }

    let mut accuracy = 0.0;
    for (n, w) in cfg.input.sector_weights(opts.tail_tolerance)?.into_iter().enumerate() {
        if w == 0.0 {
            continue;
        }
        let p = run_cascade(&InputSpec::fock(n), &stages, &params, &opts)?.p_only_final();
        accuracy += w * if n == 1 { p } else { 1.0 - p };
    }

    Ok(DetectResult {
        records: records.into_values().collect(),
        p_only_final: run.p_only_final(),
        p_no_stage_click: run.p_no_stage_click(),
        p_silent: run.p_silent(),
        p_stage_fired: (1..=stages.len()).map(|k| run.p_stage_fired(k)).collect(),
        accuracy,
        trials: cfg.trials,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuneResult {
    pub lengths: Vec<TunedLength>,
}

pub fn cmd_tune(cfg: &ExperimentConfig) -> Result<TuneResult, CliError> {
    let opts = TuneOptions::default();
    let lengths = cfg
        .sectors
        .iter()
        .map(|&n| tune_length_for_sector(n, cfg.tolerance, &opts))
        .collect::<Result<_, _>>()?;
    Ok(TuneResult { lengths })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleCheck {
    pub name: String,
    pub max_deviation: f64,
    pub tolerance: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleResult {
    pub truncation: usize,
    pub checks: Vec<OracleCheck>,
    pub passed: bool,
}

/// Stage lengths spread over `(0, 4π)` by the golden-ratio sequence.
pub fn probe_thetas(count: usize) -> Vec<f64> {
    let golden = (5f64.sqrt() - 1.0) / 2.0;
    (1..=count).map(|k| 4.0 * PI * (k as f64 * golden).fract()).collect()
}

fn check(name: impl Into<String>, max_deviation: f64, tolerance: f64) -> OracleCheck {
    OracleCheck {
        name: name.into(),
        max_deviation,
        tolerance,
        passed: max_deviation <= tolerance,
    }
}

pub fn cmd_oracle_check(cfg: &ExperimentConfig) -> Result<OracleResult, CliError> {
    let t = cfg.oracle_truncation;
    let phase = cfg.drive_phase;
    let h = build_full_hamiltonian(t, phase)?;
    let propagator = FullPropagator::new(&h);
    let thetas = probe_thetas(20);
    let mut checks = vec![
        check("hermiticity", h.hermiticity_defect(), 1e-12),
        check("charge-leakage", h.charge_leakage(), 0.0),
        check("kernel", h.kernel_defect(), 0.0),
    ];

    if t >= 2 {
        let cons = check_constants_of_motion(t, phase)?;
        checks.push(check("photon-number-invariant", cons.photon_number, 1e-10));
        checks.push(check("correlation-invariant", cons.correlation, 1e-10));
        checks.push(check("trilinear-invariant", cons.trilinear, 1e-10));
    }

    for n in 1..=t {
        let worst = thetas.iter().try_fold(0.0f64, |acc, &theta| {
            let c = compare_sector(&propagator, n, theta, phase)?;
            Ok::<_, CliError>(acc.max(c.max_deviation).max(c.leakage))
        })?;
        checks.push(check(format!("sector-vs-full-n{n}"), worst, 1e-8));
    }

    let single = thetas.iter().try_fold(0.0f64, |acc, &theta| {
        let out = propagator.propagate(&FullFockState::basis(t, Occupation::new(1, 0, 0))?, theta);
        let [c0, c1] = closed_form_n1(theta, phase);
        let d0 = (out.amp(Occupation::new(1, 0, 0)) - c0).norm();
        let d1 = (out.amp(Occupation::new(0, 1, 1)) - c1).norm();
        Ok::<_, CliError>(acc.max(d0).max(d1))
    })?;
    checks.push(check("single-photon-closed-form", single, 1e-12));

    let theta = cfg.theta_per_stage[0];
    let steps = ((theta * 250.0).ceil() as usize).max(100);
    for n in 1..=t.min(4) {
        let start = FullFockState::basis(t, Occupation::new(n, 0, 0))?;
        let exact = propagator.propagate(&start, theta);
        let rk = integrate_schrodinger(&start, theta, steps, &h)?;
        let dev = (rk.state.amps() - exact.amps()).camax();
        checks.push(check(format!("eigen-vs-integrator-n{n}"), dev, 1e-7));
        checks.push(check(format!("integrator-norm-drift-n{n}"), rk.norm_drift, 1e-8));
    }

    let mean = match cfg.input {
        InputSpec::Coherent { mean_n, .. } => mean_n,
        InputSpec::Fock { .. } => 0.5,
    };
    let params = MediumParams::default().with_phase(phase);
    let mix = compare_pure_vs_mixture(mean, t, &geometries(cfg)?, &params)?;
    checks.push(check("pure-vs-mixture", mix.max_deviation(), 1e-10));

    let passed = checks.iter().all(|c| c.passed);
    Ok(OracleResult {
        truncation: t,
        checks,
        passed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{Experiment, Extras, Settings};

    fn config(experiment: Experiment, settings: Settings) -> ExperimentConfig {
        ExperimentConfig::resolve(experiment, settings, Extras::default()).unwrap()
    }

    #[test]
    fn single_photon_coefficient_phase() {
        let cfg = config(Experiment::Coeffs, Settings::default());
        let res = cmd_coeffs(&cfg).unwrap();
        let first = &res.rows[0];
        assert_eq!((first.n, first.j), (1, 0));
        assert!((first.magnitude - 1.0).abs() < 1e-12);
        assert!((first.phase - PI).abs() < 1e-10);
        assert!(res.norm_defects.iter().all(|d| d.abs() < 1e-12));
    }

    #[test]
    fn vacuum_never_fires() {
        let cfg = config(
            Experiment::Detect,
            Settings {
                input: Some("fock:0".into()),
                ..Settings::default()
            },
        );
        let res = cmd_detect(&cfg).unwrap();
        assert_eq!(res.p_silent, 1.0);
        assert_eq!(res.accuracy, 1.0);
    }

    #[test]
    fn filter_keeps_single_photon() {
        let cfg = config(
            Experiment::Filter,
            Settings {
                input: Some("fock:1".into()),
                ..Settings::default()
            },
        );
        let res = cmd_filter(&cfg).unwrap();
        assert!(res.rows.iter().all(|r| (r.p1 - 1.0).abs() < 1e-12));
    }

    #[test]
    fn smallest_oracle_passes() {
        let cfg = config(
            Experiment::OracleCheck,
            Settings {
                truncation: Some(1),
                stages: Some(2),
                ..Settings::default()
            },
        );
        let res = cmd_oracle_check(&cfg).unwrap();
        assert!(res.passed, "{res:?}");
    }
}
