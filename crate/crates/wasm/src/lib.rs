//! Browser bindings for three interactive views: transfer coefficients as a
//! function of stage length, the filtered photon-number distribution, and
//! detector statistics for a Fock input.
//!
//! Every export returns a flat `Float64Array`; layouts are documented per
//! function.

use fwm_cascade::analysis::filter_metrics;
use fwm_cascade::cascade::{run_cascade, uniform_stages, CascadeOptions, DetectorModel};
use fwm_cascade::dynamics::{MediumParams, SectorPropagator};
use fwm_cascade::fock::InputSpec;
use wasm_bindgen::prelude::*;

const MAX_SECTOR: usize = 40;
const MAX_POINTS: usize = 20_000;
const MAX_STAGES: usize = 16;

/// `|ξ_j⁽ⁿ⁾(θ)|²` for `θ` on `points` evenly spaced values in `[0, theta_max]`,
/// laid out point-major: `out[p·(n+1) + j]`.
pub fn coefficient_curves(n: usize, theta_max: f64, points: usize) -> Result<Vec<f64>, String> {
    if n == 0 || n > MAX_SECTOR {
        return Err(format!("photon number must lie in 1..={MAX_SECTOR}"));
    }
    if !(2..=MAX_POINTS).contains(&points) {
        return Err(format!("points must lie in 2..={MAX_POINTS}"));
    }
    if !(theta_max.is_finite() && theta_max > 0.0) {
        return Err("theta_max must be positive".into());
    }
    let prop = SectorPropagator::new(n, 0.0);
    let mut out = Vec::with_capacity(points * (n + 1));
    for p in 0..points {
        let theta = theta_max * p as f64 / (points - 1) as f64;
        out.extend(prop.transfer_coefficients(theta).iter().map(|x| x.norm_sqr()));
    }
    Ok(out)
}

fn input_from(kind: &str, value: f64) -> Result<InputSpec, String> {
    match kind {
        "fock" if value >= 0.0 && value.fract() == 0.0 && value <= MAX_SECTOR as f64 => {
            Ok(InputSpec::fock(value as usize))
        }
        "coherent" if (0.0..=10.0).contains(&value) => InputSpec::coherent(value).map_err(|e| e.to_string()),
        _ => Err(format!("unsupported input {kind}:{value}")),
    }
}

fn check_stages(stages: usize) -> Result<(), String> {
    if stages == 0 || stages > MAX_STAGES {
        return Err(format!("stages must lie in 1..={MAX_STAGES}"));
    }
    Ok(())
}

/// `(P(0), P(1), P(≥2))` of Ω₁ before the first stage and after each stage:
/// `out[3·k + i]` for `k = 0..=stages`.
pub fn filter_history(kind: &str, value: f64, theta: f64, stages: usize) -> Result<Vec<f64>, String> {
    check_stages(stages)?;
    let input = input_from(kind, value)?;
    let geoms = uniform_stages(theta, stages).map_err(|e| e.to_string())?;
    let run = run_cascade(&input, &geoms, &MediumParams::default(), &CascadeOptions::default())
        .map_err(|e| e.to_string())?;
    let metrics = filter_metrics(&run.stage_distributions).map_err(|e| e.to_string())?;
    Ok(metrics.iter().flat_map(|m| [m.p0, m.p1, m.p_ge2]).collect())
}

/// `[P(only D^∞), P(no detector fires), P(D¹), …, P(Dᵏ)]` for a Fock input.
pub fn detector_statistics(n: usize, theta: f64, stages: usize, efficiency: f64) -> Result<Vec<f64>, String> {
    check_stages(stages)?;
    if n > MAX_SECTOR {
        return Err(format!("photon number must be at most {MAX_SECTOR}"));
    }
    let detector = DetectorModel::new(efficiency, false).map_err(|e| e.to_string())?;
    let geoms = uniform_stages(theta, stages).map_err(|e| e.to_string())?;
    let run = run_cascade(
        &InputSpec::fock(n),
        &geoms,
        &MediumParams::default(),
        &CascadeOptions::with_detector(detector),
    )
    .map_err(|e| e.to_string())?;
    let mut out = vec![run.p_only_final(), run.p_silent()];
    out.extend((1..=stages).map(|k| run.p_stage_fired(k)));
    Ok(out)
}

#[wasm_bindgen(js_name = coefficientCurves)]
pub fn coefficient_curves_js(n: usize, theta_max: f64, points: usize) -> Result<Vec<f64>, JsError> {
    coefficient_curves(n, theta_max, points).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = filterHistory)]
pub fn filter_history_js(kind: &str, value: f64, theta: f64, stages: usize) -> Result<Vec<f64>, JsError> {
    filter_history(kind, value, theta, stages).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = detectorStatistics)]
pub fn detector_statistics_js(n: usize, theta: f64, stages: usize, efficiency: f64) -> Result<Vec<f64>, JsError> {
    detector_statistics(n, theta, stages, efficiency).map_err(|e| JsError::new(&e))
}
