//! Repeated medium → beamsplitter → avalanche-detector stages.
//!
//! After each beamsplitter the generated fields are in vacuum again, so the
//! state of a branch is fully described by amplitudes over the Ω₁ photon
//! number. A stage maps `|n,0,0⟩ → Σ_j ξ_j⁽ⁿ⁾ |n−j, j, j⟩`; the `2j` photons
//! diverted to the stage detector are absorbed and the pair count `j` is
//! treated as measured. Outcomes with different `j` therefore become
//! separate, classically weighted branches, while every branch keeps its
//! coherence across Ω₁ photon numbers.
//!
//! [`run_cascade`] enumerates the branches exactly. [`sample_cascade`] is an
//! independent Monte Carlo estimate of the same statistics.

use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{MediumParams, SectorPropagator, StageGeometry};
use crate::error::{Error, Result};
use crate::fock::{InputSpec, NumberDistribution, DEFAULT_TAIL_TOLERANCE};

/// Detector readings for each stage detector `D¹..Dᴺ` and the terminal `D^∞`.
///
/// A reading of 0 means no click. Non-resolving detectors read 1 on any
/// click; number-resolving ones read the number of registered photons.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct DetectorRecord {
    stage_readings: Vec<u32>,
    final_reading: Option<u32>,
}

impl DetectorRecord {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_readings(stage_readings: Vec<u32>, final_reading: Option<u32>) -> Self {
        Self {
            stage_readings,
            final_reading,
        }
    }

    pub fn with_stage(&self, reading: u32) -> Self {
        let mut stage_readings = self.stage_readings.clone();
        stage_readings.push(reading);
        Self {
            stage_readings,
            final_reading: self.final_reading,
        }
    }

    pub fn with_final(&self, reading: u32) -> Self {
        Self {
            stage_readings: self.stage_readings.clone(),
            final_reading: Some(reading),
        }
    }

    pub fn stages(&self) -> usize {
        self.stage_readings.len()
    }

    pub fn stage_readings(&self) -> &[u32] {
        &self.stage_readings
    }

    pub fn stage_clicks(&self) -> Vec<bool> {
        self.stage_readings.iter().map(|&r| r > 0).collect()
    }

    pub fn final_reading(&self) -> Option<u32> {
        self.final_reading
    }

    /// Whether `D^∞` fired; `None` until the terminal detector is read.
    pub fn final_click(&self) -> Option<bool> {
        self.final_reading.map(|r| r > 0)
    }

    /// 1-based indices of the stage detectors that fired.
    pub fn fired_stages(&self) -> Vec<usize> {
        self.stage_readings
            .iter()
            .enumerate()
            .filter(|(_, &r)| r > 0)
            .map(|(i, _)| i + 1)
            .collect()
    }

    pub fn stage_fired(&self, stage: usize) -> bool {
        stage >= 1 && self.stage_readings.get(stage - 1).is_some_and(|&r| r > 0)
    }

    pub fn any_stage_click(&self) -> bool {
        self.stage_readings.iter().any(|&r| r > 0)
    }

    /// The single-photon signature: no stage detector fired and `D^∞` did.
    pub fn only_final(&self) -> bool {
        !self.any_stage_click() && self.final_click() == Some(true)
    }
}

/// `D0` when nothing fired, otherwise e.g. `D1+D3+Dinf`; multi-photon
/// readings of resolving detectors are shown as `D2[3]`.
impl fmt::Display for DetectorRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts = Vec::new();
        let mut push = |name: String, reading: u32| match reading {
            0 => {}
            1 => parts.push(name),
            r => parts.push(format!("{name}[{r}]")),
        };
        for (i, &r) in self.stage_readings.iter().enumerate() {
            push(format!("D{}", i + 1), r);
        }
        if let Some(r) = self.final_reading {
            push("Dinf".to_string(), r);
        }
        if parts.is_empty() {
            f.write_str("D0")
        } else {
            f.write_str(&parts.join("+"))
        }
    }
}

/// Avalanche detector response.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectorModel {
    /// Per-photon detection efficiency `η ∈ (0, 1]`.
    pub efficiency: f64,
    pub number_resolving: bool,
}

impl Default for DetectorModel {
    fn default() -> Self {
        Self {
            efficiency: 1.0,
            number_resolving: false,
        }
    }
}

impl DetectorModel {
    pub fn new(efficiency: f64, number_resolving: bool) -> Result<Self> {
        let model = Self {
            efficiency,
            number_resolving,
        };
        model.validate()?;
        Ok(model)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.efficiency > 0.0 && self.efficiency <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "detector efficiency must lie in (0, 1], got {}",
                self.efficiency
            )));
        }
        Ok(())
    }

    /// Probability of no click when `photons` photons arrive.
    pub fn miss_probability(&self, photons: usize) -> f64 {
        (1.0 - self.efficiency).powi(photons as i32)
    }

    /// Possible readings and their probabilities for `photons` incident photons.
    pub fn readings(&self, photons: usize) -> Vec<(u32, f64)> {
        if photons == 0 {
            return vec![(0, 1.0)];
        }
        if self.number_resolving {
            let eta = self.efficiency;
            let mut binom = 1.0;
            (0..=photons)
                .map(|k| {
                    if k > 0 {
                        binom *= (photons - k + 1) as f64 / k as f64;
                    }
                    let p = binom * eta.powi(k as i32) * (1.0 - eta).powi((photons - k) as i32);
                    (k as u32, p)
                })
                .filter(|&(_, p)| p > 0.0)
                .collect()
        } else {
            let miss = self.miss_probability(photons);
            [(0, miss), (1, 1.0 - miss)]
                .into_iter()
                .filter(|&(_, p)| p > 0.0)
                .collect()
        }
    }
}

/// One member of the cascade ensemble.
#[derive(Debug, Clone, PartialEq)]
pub struct CascadeBranch {
    pub record: DetectorRecord,
    /// Unnormalized amplitudes indexed by Ω₁ photon number; the squared norm
    /// is the branch probability.
    pub amps: Vec<Complex64>,
}

impl CascadeBranch {
    /// `√weight·|n,0,0⟩` with an empty record.
    pub fn fock(n: usize, weight: f64) -> Self {
        let mut amps = vec![Complex64::new(0.0, 0.0); n + 1];
        amps[n] = Complex64::new(weight.sqrt(), 0.0);
        Self {
            record: DetectorRecord::new(),
            amps,
        }
    }

    pub fn superposition(amps: Vec<Complex64>) -> Self {
        Self {
            record: DetectorRecord::new(),
            amps,
        }
    }

    pub fn weight(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    /// The Ω₁ photon number, when the branch is a number state.
    pub fn remaining_n(&self) -> Option<usize> {
        let mut support = self
            .amps
            .iter()
            .enumerate()
            .filter(|(_, a)| a.norm_sqr() > 0.0)
            .map(|(n, _)| n);
        match (support.next(), support.next()) {
            (Some(n), None) => Some(n),
            _ => None,
        }
    }

    pub fn max_photons(&self) -> usize {
        self.amps.len().saturating_sub(1)
    }
}

/// Knobs for the cascade beyond the medium and stage geometry.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CascadeOptions {
    pub detector: DetectorModel,
    /// Phase picked up per reflected photon at the beamsplitter, in radians.
    pub reflection_phase: f64,
    pub max_branches: usize,
    /// Branches lighter than this are dropped; the dropped mass is reported.
    pub prune_below: f64,
    /// Poisson tail bound for coherent inputs.
    pub tail_tolerance: f64,
}

impl Default for CascadeOptions {
    fn default() -> Self {
        Self {
            detector: DetectorModel::default(),
            reflection_phase: std::f64::consts::FRAC_PI_2,
            max_branches: 1 << 20,
            prune_below: 1e-30,
            tail_tolerance: DEFAULT_TAIL_TOLERANCE,
        }
    }
}

impl CascadeOptions {
    pub fn with_detector(detector: DetectorModel) -> Self {
        Self {
            detector,
            ..Self::default()
        }
    }
}

/// `count` identical stages of phase `theta`.
pub fn uniform_stages(theta: f64, count: usize) -> Result<Vec<StageGeometry>> {
    let geom = StageGeometry::new(theta)?;
    Ok(vec![geom; count])
}

/// Transfer coefficients `ξ_j⁽ⁿ⁾` of one stage for every `n ≤ n_max`.
#[derive(Debug, Clone)]
pub struct StageKernel {
    xi: Vec<Vec<Complex64>>,
}

impl StageKernel {
    pub fn new(geom: StageGeometry, params: &MediumParams, n_max: usize) -> Self {
        let propagators: Vec<_> = (0..=n_max)
            .map(|n| SectorPropagator::new(n, params.drive_phase))
            .collect();
        Self::from_propagators(&propagators, geom)
    }

    fn from_propagators(propagators: &[SectorPropagator], geom: StageGeometry) -> Self {
        let xi = propagators
            .iter()
            .map(|p| p.transfer_coefficients(geom.theta()))
            .collect();
        Self { xi }
    }

    pub fn n_max(&self) -> usize {
        self.xi.len() - 1
    }

    pub fn coefficients(&self, n: usize) -> &[Complex64] {
        &self.xi[n]
    }
}

pub fn apply_stage(
    branch: &CascadeBranch,
    geom: StageGeometry,
    params: &MediumParams,
    opts: &CascadeOptions,
) -> Vec<CascadeBranch> {
    let kernel = StageKernel::new(geom, params, branch.max_photons());
    apply_stage_with(branch, &kernel, opts)
}

/// One stage on a branch: medium, beamsplitter, stage detector.
pub fn apply_stage_with(
    branch: &CascadeBranch,
    kernel: &StageKernel,
    opts: &CascadeOptions,
) -> Vec<CascadeBranch> {
    let n_max = branch.max_photons();
    assert!(kernel.n_max() >= n_max, "stage kernel too small for branch");
    let mut out = Vec::new();
    for pairs in 0..=n_max {
        let reflect = Complex64::from_polar(1.0, opts.reflection_phase * (2 * pairs) as f64);
        let survivors: Vec<Complex64> = (pairs..=n_max)
            .map(|n| branch.amps[n] * kernel.coefficients(n)[pairs] * reflect)
            .collect();
        if survivors.iter().all(|a| a.norm_sqr() == 0.0) {
            continue;
        }
        for (reading, p) in opts.detector.readings(2 * pairs) {
            let scale = p.sqrt();
            out.push(CascadeBranch {
                record: branch.record.with_stage(reading),
                amps: survivors.iter().map(|a| a * scale).collect(),
            });
        }
    }
    out
}

/// Exact outcome of a cascade run.
#[derive(Debug, Clone)]
pub struct CascadeRun {
    /// Branches after the last stage, before the terminal detector.
    pub branches: Vec<CascadeBranch>,
    /// Ω₁ photon-number distribution at the input (index 0) and after each stage.
    pub stage_distributions: Vec<NumberDistribution>,
    /// Full record distribution including `D^∞`, sorted by record.
    pub records: Vec<(DetectorRecord, f64)>,
    /// Probability mass removed by pruning.
    pub pruned_weight: f64,
}

impl CascadeRun {
    pub fn stages(&self) -> usize {
        self.stage_distributions.len() - 1
    }

    pub fn probability(&self, pred: impl Fn(&DetectorRecord) -> bool) -> f64 {
        self.records
            .iter()
            .filter(|(r, _)| pred(r))
            .fold(0.0, |acc, (_, p)| acc + p)
    }

    /// `P(only D^∞ fires)`, the single-photon signature.
    pub fn p_only_final(&self) -> f64 {
        self.probability(DetectorRecord::only_final)
    }

    pub fn p_no_stage_click(&self) -> f64 {
        self.probability(|r| !r.any_stage_click())
    }

    pub fn p_silent(&self) -> f64 {
        self.probability(|r| !r.any_stage_click() && r.final_click() == Some(false))
    }

    /// `P(Dᵏ fires)`, `k` 1-based.
    pub fn p_stage_fired(&self, stage: usize) -> f64 {
        self.probability(|r| r.stage_fired(stage))
    }

    pub fn total_weight(&self) -> f64 {
        self.records.iter().map(|(_, p)| p).sum()
    }
}

fn distribution(branches: &[CascadeBranch], n_max: usize) -> NumberDistribution {
    let mut probs = vec![0.0; n_max + 1];
    for b in branches {
        for (n, a) in b.amps.iter().enumerate() {
            probs[n] += a.norm_sqr();
        }
    }
    NumberDistribution::from_unchecked(probs)
}

/// Combines number-state branches sharing a record and photon number. Their
/// reduced states coincide, so only the summed weight matters.
fn merge_branches(branches: Vec<CascadeBranch>) -> Vec<CascadeBranch> {
    let mut fock: BTreeMap<(DetectorRecord, usize), (Complex64, f64, usize)> = BTreeMap::new();
    let mut rest = Vec::new();
    for b in branches {
        match b.remaining_n() {
            Some(n) => {
                let amp = b.amps[n];
                let len = b.amps.len();
                fock.entry((b.record, n))
                    .and_modify(|(_, w, l)| {
                        *w += amp.norm_sqr();
                        *l = (*l).max(len);
                    })
                    .or_insert((amp / amp.norm(), amp.norm_sqr(), len));
            }
            None => rest.push(b),
        }
    }
    let mut merged: Vec<CascadeBranch> = fock
        .into_iter()
        .map(|((record, n), (phase, weight, len))| {
            let mut amps = vec![Complex64::new(0.0, 0.0); len];
            amps[n] = phase * weight.sqrt();
            CascadeBranch { record, amps }
        })
        .collect();
    merged.extend(rest);
    merged.sort_by(|a, b| {
        a.record
            .cmp(&b.record)
            .then_with(|| support_key(a).cmp(&support_key(b)))
    });
    merged
}

fn support_key(b: &CascadeBranch) -> Vec<usize> {
    b.amps
        .iter()
        .enumerate()
        .filter(|(_, a)| a.norm_sqr() > 0.0)
        .map(|(n, _)| n)
        .collect()
}

/// Exact enumeration of a cascade for a photon-number-mixture input.
pub fn run_cascade(
    input: &InputSpec,
    stages: &[StageGeometry],
    params: &MediumParams,
    opts: &CascadeOptions,
) -> Result<CascadeRun> {
    let weights = input.sector_weights(opts.tail_tolerance)?;
    let branches = weights
        .iter()
        .enumerate()
        .filter(|(_, &w)| w > 0.0)
        .map(|(n, &w)| CascadeBranch::fock(n, w))
        .collect();
    run_cascade_from(branches, stages, params, opts)
}

/// Exact enumeration starting from arbitrary branches, e.g. a coherent
/// superposition across photon numbers.
pub fn run_cascade_from(
    initial: Vec<CascadeBranch>,
    stages: &[StageGeometry],
    params: &MediumParams,
    opts: &CascadeOptions,
) -> Result<CascadeRun> {
    params.validate()?;
    opts.detector.validate()?;
    if stages.is_empty() {
        return Err(Error::InvalidParameter("a cascade needs at least one stage".into()));
    }
    let n_max = initial.iter().map(CascadeBranch::max_photons).max().unwrap_or(0);
    let propagators: Vec<_> = (0..=n_max)
        .map(|n| SectorPropagator::new(n, params.drive_phase))
        .collect();

    let mut pruned_weight = 0.0;
    let mut branches = initial;
    let mut stage_distributions = vec![distribution(&branches, n_max)];
    for geom in stages {
        let kernel = StageKernel::from_propagators(&propagators, *geom);
        let mut next = Vec::with_capacity(branches.len() * 2);
        for b in &branches {
            for child in apply_stage_with(b, &kernel, opts) {
                let w = child.weight();
                if w < opts.prune_below {
                    pruned_weight += w;
                } else {
                    next.push(child);
                }
            }
        }
        branches = merge_branches(next);
        if branches.len() > opts.max_branches {
            return Err(Error::BranchOverflow {
                count: branches.len(),
                cap: opts.max_branches,
            });
        }
        stage_distributions.push(distribution(&branches, n_max));
    }

    let mut records: BTreeMap<DetectorRecord, f64> = BTreeMap::new();
    for b in &branches {
        for (n, a) in b.amps.iter().enumerate() {
            let p = a.norm_sqr();
            if p == 0.0 {
                continue;
            }
            for (reading, pr) in opts.detector.readings(n) {
                *records.entry(b.record.with_final(reading)).or_default() += p * pr;
            }
        }
    }

    Ok(CascadeRun {
        branches,
        stage_distributions,
        records: records.into_iter().collect(),
        pruned_weight,
    })
}

/// Monte Carlo tallies from [`sample_cascade`].
#[derive(Debug, Clone, PartialEq)]
pub struct SampledCascade {
    pub trials: u64,
    pub records: BTreeMap<DetectorRecord, u64>,
    /// `stage_counts[s][n]`: trials holding `n` Ω₁ photons after stage `s`
    /// (stage 0 is the input).
    pub stage_counts: Vec<Vec<u64>>,
}

impl SampledCascade {
    pub fn frequency(&self, pred: impl Fn(&DetectorRecord) -> bool) -> f64 {
        let hits: u64 = self
            .records
            .iter()
            .filter(|(r, _)| pred(r))
            .map(|(_, c)| c)
            .sum();
        hits as f64 / self.trials as f64
    }

    pub fn stage_frequencies(&self, stage: usize) -> Vec<f64> {
        self.stage_counts[stage]
            .iter()
            .map(|&c| c as f64 / self.trials as f64)
            .collect()
    }

    fn empty(stages: usize, n_max: usize) -> Self {
        Self {
            trials: 0,
            records: BTreeMap::new(),
            stage_counts: vec![vec![0; n_max + 1]; stages + 1],
        }
    }

    fn merge(mut self, other: Self) -> Self {
        self.trials += other.trials;
        for (r, c) in other.records {
            *self.records.entry(r).or_default() += c;
        }
        for (mine, theirs) in self.stage_counts.iter_mut().zip(other.stage_counts) {
            for (a, b) in mine.iter_mut().zip(theirs) {
                *a += b;
            }
        }
        self
    }
}

fn pick<T: Copy>(rng: &mut impl Rng, options: impl IntoIterator<Item = (T, f64)>) -> T {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    let mut last = None;
    for (value, p) in options {
        acc += p;
        last = Some(value);
        if u < acc {
            return value;
        }
    }
    last.expect("no outcomes to sample from")
}

/// Samples `trials` independent trajectories through the cascade.
///
/// Trial `k` draws from ChaCha8 stream `k` of `seed`, so results do not
/// depend on thread scheduling.
pub fn sample_cascade(
    input: &InputSpec,
    stages: &[StageGeometry],
    params: &MediumParams,
    opts: &CascadeOptions,
    trials: u64,
    seed: u64,
) -> Result<SampledCascade> {
    params.validate()?;
    opts.detector.validate()?;
    if trials == 0 {
        return Err(Error::InvalidParameter("need at least one trial".into()));
    }
    let weights = input.sector_weights(opts.tail_tolerance)?;
    let n_max = weights.len() - 1;
    let kernels: Vec<StageKernel> = stages
        .iter()
        .map(|g| StageKernel::new(*g, params, n_max))
        .collect();
    let pair_probs: Vec<Vec<Vec<f64>>> = kernels
        .iter()
        .map(|k| {
            (0..=n_max)
                .map(|n| k.coefficients(n).iter().map(|x| x.norm_sqr()).collect())
                .collect()
        })
        .collect();

    let run_trial = |acc: &mut SampledCascade, trial: u64| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(trial);
        let mut n = pick(&mut rng, weights.iter().copied().enumerate());
        acc.stage_counts[0][n] += 1;
        let mut record = DetectorRecord::new();
        for (s, probs) in pair_probs.iter().enumerate() {
            let pairs = pick(&mut rng, probs[n].iter().copied().enumerate());
            let reading = pick(&mut rng, opts.detector.readings(2 * pairs));
            record = record.with_stage(reading);
            n -= pairs;
            acc.stage_counts[s + 1][n] += 1;
        }
        let reading = pick(&mut rng, opts.detector.readings(n));
        *acc.records.entry(record.with_final(reading)).or_default() += 1;
        acc.trials += 1;
    };

    Ok((0..trials)
        .into_par_iter()
        .fold(
            || SampledCascade::empty(stages.len(), n_max),
            |mut acc, trial| {
                run_trial(&mut acc, trial);
                acc
            },
        )
        .reduce(|| SampledCascade::empty(stages.len(), n_max), SampledCascade::merge))
}
