//! Photon-number sectors, sector states and input photon statistics.
//!
//! The interaction conserves the Ω₁+E₁ photon number and keeps the E₁ and E₂
//! occupations equal, so an input of `n` photons in Ω₁ only ever explores the
//! `n + 1` states `|n−j, j, j⟩`. Everything downstream works in that basis.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance used for normalization checks on sector states and distributions.
pub const NORM_TOLERANCE: f64 = 1e-12;

/// Default bound on the Poisson tail discarded by a coherent-input truncation.
pub const DEFAULT_TAIL_TOLERANCE: f64 = 1e-8;

/// Occupation `(Ω₁, E₁, E₂)` of a single basis state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Occupation {
    pub pump: usize,
    pub e1: usize,
    pub e2: usize,
}

impl Occupation {
    pub fn new(pump: usize, e1: usize, e2: usize) -> Self {
        Self { pump, e1, e2 }
    }

    pub fn as_tuple(self) -> (usize, usize, usize) {
        (self.pump, self.e1, self.e2)
    }
}

/// Ordered basis `|n−j, j, j⟩`, `j = 0..=n`, of the `n`-photon sector.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SectorBasis {
    n: usize,
    states: Vec<Occupation>,
}

impl SectorBasis {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn states(&self) -> &[Occupation] {
        &self.states
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// Position of `occ` in the basis, if it belongs to this sector.
    pub fn index_of(&self, occ: Occupation) -> Option<usize> {
        (occ.pump + occ.e1 == self.n && occ.e1 == occ.e2).then_some(occ.e1)
    }
}

pub fn sector_basis(n: usize) -> SectorBasis {
    let states = (0..=n).map(|j| Occupation::new(n - j, j, j)).collect();
    SectorBasis { n, states }
}

/// Amplitudes over the `n`-photon sector basis; `amps[j]` multiplies `|n−j, j, j⟩`.
#[derive(Debug, Clone, PartialEq)]
pub struct SectorState {
    n: usize,
    amps: Vec<Complex64>,
    sub_normalized: bool,
}

impl SectorState {
    /// All photons in Ω₁: `|n, 0, 0⟩`.
    pub fn fock(n: usize) -> Self {
        let mut amps = vec![Complex64::new(0.0, 0.0); n + 1];
        amps[0] = Complex64::new(1.0, 0.0);
        Self {
            n,
            amps,
            sub_normalized: false,
        }
    }

    /// A normalized state. The sector label is `amps.len() - 1`.
    pub fn new(amps: Vec<Complex64>) -> Result<Self> {
        let state = Self::sub_normalized(amps)?;
        let norm = state.norm_sqr();
        if (norm - 1.0).abs() > NORM_TOLERANCE {
            return Err(Error::InvalidParameter(format!(
                "sector state has squared norm {norm}, expected 1"
            )));
        }
        Ok(Self {
            sub_normalized: false,
            ..state
        })
    }

    /// A branch amplitude vector whose squared norm is a probability weight ≤ 1.
    pub fn sub_normalized(amps: Vec<Complex64>) -> Result<Self> {
        if amps.is_empty() {
            return Err(Error::InvalidParameter(
                "sector state needs at least one amplitude".into(),
            ));
        }
        if amps.iter().any(|a| !a.re.is_finite() || !a.im.is_finite()) {
            return Err(Error::InvalidParameter("non-finite amplitude".into()));
        }
        let norm: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
        if norm > 1.0 + NORM_TOLERANCE {
            return Err(Error::InvalidParameter(format!(
                "branch squared norm {norm} exceeds 1"
            )));
        }
        Ok(Self {
            n: amps.len() - 1,
            amps,
            sub_normalized: true,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn amps(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn into_amps(self) -> Vec<Complex64> {
        self.amps
    }

    pub fn is_sub_normalized(&self) -> bool {
        self.sub_normalized
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    pub(crate) fn from_parts(n: usize, amps: Vec<Complex64>, sub_normalized: bool) -> Self {
        debug_assert_eq!(amps.len(), n + 1);
        Self {
            n,
            amps,
            sub_normalized,
        }
    }
}

/// Probability of finding `k` photons in Ω₁, `k = 0..probs.len()`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NumberDistribution {
    probs: Vec<f64>,
}

impl NumberDistribution {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::InvalidParameter("empty number distribution".into()));
        }
        if let Some(p) = probs
            .iter()
            .find(|p| !p.is_finite() || **p < -NORM_TOLERANCE || **p > 1.0 + NORM_TOLERANCE)
        {
            return Err(Error::InvalidParameter(format!(
                "probability {p} outside [0, 1]"
            )));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > NORM_TOLERANCE {
            return Err(Error::InvalidParameter(format!(
                "number distribution sums to {total}"
            )));
        }
        Ok(Self {
            probs: probs.into_iter().map(|p| p.clamp(0.0, 1.0)).collect(),
        })
    }

    pub fn fock(n: usize) -> Self {
        let mut probs = vec![0.0; n + 1];
        probs[n] = 1.0;
        Self { probs }
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// Largest photon number carried by the distribution.
    pub fn max_photons(&self) -> usize {
        self.probs.len() - 1
    }

    pub fn p(&self, k: usize) -> f64 {
        self.probs.get(k).copied().unwrap_or(0.0)
    }

    pub fn p_at_least(&self, k: usize) -> f64 {
        self.probs.iter().skip(k).sum()
    }

    pub fn mean(&self) -> f64 {
        self.probs
            .iter()
            .enumerate()
            .map(|(k, p)| k as f64 * p)
            .sum()
    }

    pub(crate) fn from_unchecked(probs: Vec<f64>) -> Self {
        Self { probs }
    }
}

/// Input wave packet in Ω₁; E₁ and E₂ start in vacuum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum InputSpec {
    Fock { n: usize },
    Coherent { mean_n: f64, truncation: usize },
}

impl InputSpec {
    pub fn fock(n: usize) -> Self {
        Self::Fock { n }
    }

    /// Coherent input truncated at the smallest photon number whose Poisson
    /// tail is below [`DEFAULT_TAIL_TOLERANCE`].
    pub fn coherent(mean_n: f64) -> Result<Self> {
        let truncation = default_truncation(mean_n, DEFAULT_TAIL_TOLERANCE)?;
        Ok(Self::Coherent { mean_n, truncation })
    }

    pub fn max_photons(&self) -> usize {
        match *self {
            Self::Fock { n } => n,
            Self::Coherent { truncation, .. } => truncation,
        }
    }

    /// Classical weight of each photon-number sector.
    pub fn sector_weights(&self, tolerance: f64) -> Result<Vec<f64>> {
        match *self {
            Self::Fock { n } => Ok(NumberDistribution::fock(n).probs),
            Self::Coherent { mean_n, truncation } => {
                Ok(coherent_sector_weights(mean_n, truncation, tolerance)?.probs)
            }
        }
    }
}

/// Truncated, renormalized Poisson weights of a coherent input.
#[derive(Debug, Clone, PartialEq)]
pub struct CoherentWeights {
    pub probs: Vec<f64>,
    /// Poisson mass above the truncation, removed by renormalization.
    pub tail_mass: f64,
}

fn check_mean(mean_n: f64) -> Result<()> {
    if !mean_n.is_finite() || mean_n < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "mean photon number must be finite and non-negative, got {mean_n}"
        )));
    }
    Ok(())
}

fn poisson_ln(mean_n: f64, k: usize) -> f64 {
    if mean_n == 0.0 {
        return if k == 0 { 0.0 } else { f64::NEG_INFINITY };
    }
    let ln_fact: f64 = (1..=k).map(|i| (i as f64).ln()).sum();
    -mean_n + k as f64 * mean_n.ln() - ln_fact
}

/// Poisson probability of `k` photons at mean `mean_n`.
pub fn poisson(mean_n: f64, k: usize) -> f64 {
    poisson_ln(mean_n, k).exp()
}

/// Poisson mass strictly above `truncation`, summed term by term.
pub fn poisson_tail(mean_n: f64, truncation: usize) -> f64 {
    if mean_n == 0.0 {
        return 0.0;
    }
    let mut ln_term = poisson_ln(mean_n, truncation + 1);
    let mut k = truncation + 1;
    let mut tail = 0.0;
    loop {
        let term = ln_term.exp();
        tail += term;
        if k as f64 > mean_n && term <= tail * 1e-17 {
            break;
        }
        k += 1;
        ln_term += mean_n.ln() - (k as f64).ln();
    }
    tail
}

/// Smallest truncation whose Poisson tail is below `tolerance`.
pub fn default_truncation(mean_n: f64, tolerance: f64) -> Result<usize> {
    check_mean(mean_n)?;
    if tolerance.is_nan() || tolerance <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "tail tolerance must be positive, got {tolerance}"
        )));
    }
    let mut truncation = mean_n.floor() as usize;
    while poisson_tail(mean_n, truncation) >= tolerance {
        truncation += 1;
    }
    Ok(truncation)
}

pub fn coherent_sector_weights(
    mean_n: f64,
    truncation: usize,
    tolerance: f64,
) -> Result<CoherentWeights> {
    check_mean(mean_n)?;
    let tail_mass = poisson_tail(mean_n, truncation);
    if tail_mass >= tolerance && tail_mass > 0.0 {
        return Err(Error::TruncationTooSmall {
            mean: mean_n,
            truncation,
            tail: tail_mass,
            tolerance,
            required: default_truncation(mean_n, tolerance)?,
        });
    }
    let mut probs: Vec<f64> = (0..=truncation).map(|k| poisson(mean_n, k)).collect();
    let kept: f64 = probs.iter().sum();
    probs.iter_mut().for_each(|p| *p /= kept);
    Ok(CoherentWeights { probs, tail_mass })
}

/// Amplitudes `⟨k|α⟩` of the coherent state with `α = √mean_n·e^{iφ}`,
/// truncated and renormalized.
pub fn coherent_amplitudes(mean_n: f64, phase: f64, truncation: usize) -> Result<Vec<Complex64>> {
    check_mean(mean_n)?;
    let mut amps: Vec<Complex64> = (0..=truncation)
        .map(|k| Complex64::from_polar(poisson(mean_n, k).sqrt(), phase * k as f64))
        .collect();
    let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    amps.iter_mut().for_each(|a| *a /= norm);
    Ok(amps)
}
