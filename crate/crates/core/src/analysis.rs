//! Figures of merit derived from the cascade: detector statistics for
//! two-photon inputs, filter convergence, and stage lengths tuned so that a
//! chosen photon number returns fully to Ω₁.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dynamics::{closed_form_n2, SectorPropagator};
use crate::error::{Error, Result};
use crate::fock::NumberDistribution;

/// `|ξ₀⁽²⁾(θ)|²`, the chance a two-photon input leaves a stage untouched.
pub fn two_photon_survival(theta: f64) -> f64 {
    closed_form_n2(theta, 0.0)[0].norm_sqr()
}

/// `P(Dⁱ) = |ξ₀|^{2i−2}(1 − |ξ₀|²)` for a two-photon input; `stage` is 1-based.
pub fn detector_firing_probability(stage: usize, theta: f64) -> Result<f64> {
    if stage == 0 {
        return Err(Error::InvalidParameter("stage detectors are numbered from 1".into()));
    }
    let survive = two_photon_survival(theta);
    Ok(survive.powi(stage as i32 - 1) * (1.0 - survive))
}

/// `Σ_{i≤k} P(Dⁱ) = 1 − |ξ₀|^{2k}`.
pub fn cumulative_firing_probability(stages: usize, theta: f64) -> f64 {
    1.0 - two_photon_survival(theta).powi(stages as i32)
}

/// Probability `|ξ₀⁽²⁾|^{2·stages}` that a two-photon input mimics a single
/// photon by firing only `D^∞`.
pub fn misidentification_probability(stages: usize, theta: f64) -> Result<f64> {
    if stages == 0 {
        return Err(Error::InvalidParameter("need at least one stage".into()));
    }
    Ok(two_photon_survival(theta).powi(stages as i32))
}

/// `1 − misidentification_probability`.
pub fn discrimination_accuracy(stages: usize, theta: f64) -> Result<f64> {
    Ok(1.0 - misidentification_probability(stages, theta)?)
}

/// Vacuum, single-photon and multi-photon content of Ω₁ at one stage.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FilterMetrics {
    pub p0: f64,
    pub p1: f64,
    pub p_ge2: f64,
}

pub fn filter_metrics(history: &[NumberDistribution]) -> Result<Vec<FilterMetrics>> {
    if history.is_empty() {
        return Err(Error::InvalidParameter("empty stage history".into()));
    }
    Ok(history
        .iter()
        .map(|d| FilterMetrics {
            p0: d.p(0),
            p1: d.p(1),
            p_ge2: d.p_at_least(2),
        })
        .collect())
}

/// First stage index whose multi-photon probability drops below `threshold`.
pub fn stages_to_purity(metrics: &[FilterMetrics], threshold: f64) -> Option<usize> {
    metrics.iter().position(|m| m.p_ge2 < threshold)
}

/// Search window for [`tune_length_for_sector`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TuneOptions {
    pub theta_max: f64,
    pub grid_step: f64,
}

impl Default for TuneOptions {
    fn default() -> Self {
        Self {
            theta_max: 40.0 * PI,
            grid_step: PI / 200.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TunedLength {
    pub n: usize,
    pub theta: f64,
    pub return_probability: f64,
    /// `false` when no `θ` in the window met the tolerance and the best
    /// candidate was returned instead.
    pub exact: bool,
}

/// `R(θ) = |Σ_k w_k e^{−iω_kθ}|²` with `w_k = ⟨0|k⟩²`, plus its first two
/// derivatives.
struct ReturnCurve {
    weights: Vec<f64>,
    freqs: Vec<f64>,
}

impl ReturnCurve {
    fn new(n: usize) -> Self {
        let p = SectorPropagator::new(n, 0.0);
        let weights = (0..=n).map(|k| p.mode(0, k).powi(2)).collect();
        Self {
            weights,
            freqs: p.frequencies().to_vec(),
        }
    }

    fn moments(&self, theta: f64) -> [Complex64; 3] {
        let mut out = [Complex64::new(0.0, 0.0); 3];
        for (w, f) in self.weights.iter().zip(&self.freqs) {
            let e = Complex64::from_polar(*w, -f * theta);
            let d = Complex64::new(0.0, -f);
            out[0] += e;
            out[1] += d * e;
            out[2] += d * d * e;
        }
        out
    }

    fn value(&self, theta: f64) -> f64 {
        self.moments(theta)[0].norm_sqr()
    }

    /// `(R', R'')`
    fn slope_curvature(&self, theta: f64) -> (f64, f64) {
        let [a, d1, d2] = self.moments(theta);
        let slope = 2.0 * (a.conj() * d1).re;
        let curvature = 2.0 * (d1.norm_sqr() + (a.conj() * d2).re);
        (slope, curvature)
    }

    /// Golden-section search for the maximum in `[lo, hi]`, then Newton steps
    /// on `R' = 0` to pin the argument below the `√ε` limit of bracketing.
    fn refine(&self, lo: f64, hi: f64) -> f64 {
        let ratio = (5f64.sqrt() - 1.0) / 2.0;
        let (mut a, mut b) = (lo, hi);
        let mut c = b - ratio * (b - a);
        let mut d = a + ratio * (b - a);
        let (mut fc, mut fd) = (self.value(c), self.value(d));
        while b - a > 1e-10 * (1.0 + a.abs()) {
            if fc >= fd {
                b = d;
                d = c;
                fd = fc;
                c = b - ratio * (b - a);
                fc = self.value(c);
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + ratio * (b - a);
                fd = self.value(d);
            }
        }
        let mut theta = 0.5 * (a + b);
        for _ in 0..20 {
            let (slope, curvature) = self.slope_curvature(theta);
            if curvature >= 0.0 {
                break;
            }
            let next = theta - slope / curvature;
            if !(next >= lo && next <= hi) || self.value(next) < self.value(theta) {
                break;
            }
            let done = (next - theta).abs() < 1e-15 * (1.0 + theta.abs());
            theta = next;
            if done {
                break;
            }
        }
        theta
    }
}

/// Return probability `|⟨n,0,0|U_n(θ)|n,0,0⟩|²`.
pub fn return_probability(n: usize, theta: f64) -> f64 {
    SectorPropagator::new(n, 0.0).return_probability(theta)
}

/// Smallest stage phase at which the `n`-photon component returns to
/// `|n,0,0⟩` with `1 − R < tolerance`.
///
/// Scans a grid over `(0, theta_max]`, refines every local maximum in order
/// of increasing `θ`, and stops at the first that meets the tolerance. If none
/// does, the best refined maximum is returned with `exact = false`.
pub fn tune_length_for_sector(n: usize, tolerance: f64, opts: &TuneOptions) -> Result<TunedLength> {
    if n == 0 {
        return Err(Error::InvalidParameter("tuning needs at least one photon".into()));
    }
    if !(opts.grid_step > 0.0 && opts.theta_max > opts.grid_step) {
        return Err(Error::InvalidParameter(format!(
            "invalid search window: step {}, max {}",
            opts.grid_step, opts.theta_max
        )));
    }
    if tolerance.is_nan() || tolerance <= 0.0 {
        return Err(Error::InvalidParameter(format!("tolerance must be positive, got {tolerance}")));
    }
    let curve = ReturnCurve::new(n);
    let points = (opts.theta_max / opts.grid_step).floor() as usize;
    let grid: Vec<f64> = (0..=points + 1)
        .map(|i| curve.value(i as f64 * opts.grid_step))
        .collect();

    let mut best: Option<TunedLength> = None;
    for i in 1..=points {
        if !(grid[i] >= grid[i - 1] && grid[i] >= grid[i + 1]) {
            continue;
        }
        let lo = (i - 1) as f64 * opts.grid_step;
        let hi = (i + 1) as f64 * opts.grid_step;
        let theta = curve.refine(lo.max(f64::MIN_POSITIVE), hi);
        let r = curve.value(theta);
        if 1.0 - r < tolerance {
            return Ok(TunedLength {
                n,
                theta,
                return_probability: r,
                exact: true,
            });
        }
        if best.is_none_or(|b| r > b.return_probability) {
            best = Some(TunedLength {
                n,
                theta,
                return_probability: r,
                exact: false,
            });
        }
    }
    best.ok_or_else(|| Error::InvalidParameter("search window contains no local maximum".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn firing_probabilities_at_one_cycle() {
        assert_abs_diff_eq!(detector_firing_probability(1, PI).unwrap(), 0.8294, epsilon = 1e-4);
        assert_abs_diff_eq!(detector_firing_probability(2, PI).unwrap(), 0.1415, epsilon = 1e-4);
        assert!(detector_firing_probability(0, PI).is_err());
        // ξ₀ = 1 at √(3/2)θ = 2π
        let full = 2.0 * PI / 1.5f64.sqrt();
        for i in 1..5 {
            assert_abs_diff_eq!(detector_firing_probability(i, full).unwrap(), 0.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn misidentification_values() {
        let x0 = (2.0 + (1.5f64.sqrt() * PI).cos()) / 3.0;
        assert_abs_diff_eq!(misidentification_probability(4, PI).unwrap(), x0.powi(8), epsilon = 1e-15);
        assert_abs_diff_eq!(misidentification_probability(4, PI).unwrap(), 8.47e-4, epsilon = 5e-6);
        assert_abs_diff_eq!(misidentification_probability(1, PI).unwrap(), 0.1706, epsilon = 1e-4);
        assert_abs_diff_eq!(misidentification_probability(3, 1e-9).unwrap(), 1.0, epsilon = 1e-12);
        assert!(misidentification_probability(0, PI).is_err());
        assert!(discrimination_accuracy(4, PI).unwrap() > 0.999);
    }

    #[test]
    fn firing_telescopes() {
        for &theta in &[PI, 2.0 * PI, 1.234] {
            let mut partial = 0.0;
            for k in 1..=10 {
                partial += detector_firing_probability(k, theta).unwrap();
                assert_abs_diff_eq!(partial, cumulative_firing_probability(k, theta), epsilon = 1e-12);
                let next = detector_firing_probability(k + 1, theta).unwrap();
                let misid = misidentification_probability(k, theta).unwrap();
                assert_abs_diff_eq!(misid * (1.0 - two_photon_survival(theta)), next, epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn metrics_split_distribution() {
        let d = NumberDistribution::new(vec![0.2, 0.3, 0.4, 0.1]).unwrap();
        let m = filter_metrics(&[d]).unwrap();
        assert_abs_diff_eq!(m[0].p0, 0.2);
        assert_abs_diff_eq!(m[0].p1, 0.3);
        assert_abs_diff_eq!(m[0].p_ge2, 0.5);
        assert!(filter_metrics(&[]).is_err());
        assert_eq!(stages_to_purity(&m, 0.6), Some(0));
        assert_eq!(stages_to_purity(&m, 0.1), None);
    }

    #[test]
    fn tuned_single_and_two_photon_returns() {
        let opts = TuneOptions::default();
        let one = tune_length_for_sector(1, 1e-12, &opts).unwrap();
        assert!(one.exact);
        assert_abs_diff_eq!(one.theta, PI, epsilon = 1e-9);
        let two = tune_length_for_sector(2, 1e-12, &opts).unwrap();
        assert!(two.exact);
        assert_abs_diff_eq!(two.theta, 2.0 * PI / 1.5f64.sqrt(), epsilon = 1e-9);
        assert!(1.0 - two.return_probability < 1e-12);
    }

    #[test]
    fn three_photon_return_is_approximate() {
        let t = tune_length_for_sector(3, 1e-12, &TuneOptions::default()).unwrap();
        assert!(!t.exact);
        assert!(t.return_probability < 1.0 && t.return_probability > 0.9);
        assert_abs_diff_eq!(return_probability(3, t.theta), t.return_probability, epsilon = 1e-15);
    }

    #[test]
    fn tuning_rejects_bad_requests() {
        assert!(tune_length_for_sector(0, 1e-9, &TuneOptions::default()).is_err());
        let bad = TuneOptions { theta_max: 1.0, grid_step: 0.0 };
        assert!(tune_length_for_sector(2, 1e-9, &bad).is_err());
    }
}
