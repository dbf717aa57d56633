//! Propagation of sector states through one length of nonlinear medium.
//!
//! Inside the `n`-photon sector the saturating denominator `Ω̂₁†Ω̂₁ + Ê₁†Ê₁`
//! is the constant `n`, so the interaction reduces to a tridiagonal matrix
//! with raising couplings `e^{iφ}(j+1)√(n−j)/n` in units of `ħκ|Ω₂|c`.
//! Time enters only through the dimensionless phase `θ = κ|Ω₂|cτ`.
//!
//! The propagator is built in the `φ = 0` gauge, where the matrix is real
//! symmetric, and the drive phase is restored as `e^{ijφ}` on `amps[j]`.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::SectorState;
use crate::tridiag::TridiagonalEigen;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Atomic constituents of the coupling constant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AtomicMedium {
    /// Atomic number density `N`.
    pub density: f64,
    /// Typical wavelength `λ` of the fields.
    pub wavelength: f64,
    /// Typical radiative decay rate `γ`.
    pub decay_rate: f64,
    /// Detuning `Δ` of the off-resonant fields.
    pub detuning: f64,
}

impl AtomicMedium {
    /// `g = 3Nλ²γ / 8π`
    pub fn coupling(&self) -> f64 {
        3.0 * self.density * self.wavelength.powi(2) * self.decay_rate / (8.0 * PI)
    }

    /// `κ = g / Δ`
    pub fn kappa(&self) -> f64 {
        self.coupling() / self.detuning
    }
}

/// Medium and drive-field parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MediumParams {
    /// Nonlinear coupling `κ = g/Δ`.
    pub kappa: f64,
    /// Classical drive amplitude `|Ω₂|`.
    pub drive_mag: f64,
    /// Drive phase `arg Ω₂` in radians.
    pub drive_phase: f64,
    /// Propagation speed.
    pub c: f64,
}

impl Default for MediumParams {
    fn default() -> Self {
        Self {
            kappa: 1.0,
            drive_mag: 1.0,
            drive_phase: 0.0,
            c: 1.0,
        }
    }
}

impl MediumParams {
    pub fn new(kappa: f64, drive_mag: f64, drive_phase: f64) -> Result<Self> {
        let params = Self {
            kappa,
            drive_mag,
            drive_phase,
            c: 1.0,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn from_atomic(medium: &AtomicMedium, drive_mag: f64, drive_phase: f64) -> Result<Self> {
        Self::new(medium.kappa(), drive_mag, drive_phase)
    }

    pub fn with_phase(self, drive_phase: f64) -> Self {
        Self {
            drive_phase,
            ..self
        }
    }

    /// `κ|Ω₂|`, the rate at which `θ` accumulates per unit length.
    pub fn rate(&self) -> f64 {
        self.kappa * self.drive_mag
    }

    pub fn validate(&self) -> Result<()> {
        let rate = self.rate();
        if !(rate.is_finite() && rate > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "κ|Ω₂| must be positive and finite, got κ = {}, |Ω₂| = {}",
                self.kappa, self.drive_mag
            )));
        }
        if !self.drive_phase.is_finite() {
            return Err(Error::InvalidParameter("drive phase must be finite".into()));
        }
        if !(self.c.is_finite() && self.c > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "propagation speed must be positive, got {}",
                self.c
            )));
        }
        Ok(())
    }
}

/// Length `L₀ = π/(κ|Ω₂|)` of one full single-photon conversion cycle.
pub fn cycle_length(params: &MediumParams) -> Result<f64> {
    let rate = params.rate();
    if !(rate.is_finite() && rate > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "cycle length undefined for κ|Ω₂| = {rate}"
        )));
    }
    Ok(PI / rate)
}

/// One stage of medium, described by its propagation phase `θ = κ|Ω₂|L = πL/L₀`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StageGeometry {
    theta: f64,
}

impl StageGeometry {
    pub fn new(theta: f64) -> Result<Self> {
        if !(theta.is_finite() && theta >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "stage phase must be finite and non-negative, got {theta}"
            )));
        }
        Ok(Self { theta })
    }

    /// A stage of `cycles · L₀`.
    pub fn from_cycles(cycles: f64) -> Result<Self> {
        Self::new(PI * cycles)
    }

    pub fn from_length(length: f64, params: &MediumParams) -> Result<Self> {
        params.validate()?;
        Self::new(params.rate() * length)
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn length(&self, params: &MediumParams) -> Result<f64> {
        Ok(self.theta / PI * cycle_length(params)?)
    }
}

/// Raising couplings `(j+1)√(n−j)/n`, `j = 0..n`, of the `φ = 0` sector matrix.
pub fn sector_couplings(n: usize) -> Vec<f64> {
    (0..n)
        .map(|j| (j + 1) as f64 * ((n - j) as f64).sqrt() / n as f64)
        .collect()
}

/// Hermitian tridiagonal sector Hamiltonian in units of `ħκ|Ω₂|c`.
#[derive(Debug, Clone, PartialEq)]
pub struct SectorHamiltonian {
    n: usize,
    couplings: Vec<f64>,
    drive_phase: f64,
}

impl SectorHamiltonian {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn couplings(&self) -> &[f64] {
        &self.couplings
    }

    pub fn dim(&self) -> usize {
        self.n + 1
    }

    /// `⟨row|H|col⟩` in the sector basis.
    pub fn entry(&self, row: usize, col: usize) -> Complex64 {
        if row == col + 1 {
            Complex64::from_polar(self.couplings[col], self.drive_phase)
        } else if col == row + 1 {
            Complex64::from_polar(self.couplings[row], -self.drive_phase)
        } else {
            ZERO
        }
    }

    pub fn to_dense(&self) -> DMatrix<Complex64> {
        DMatrix::from_fn(self.dim(), self.dim(), |r, c| self.entry(r, c))
    }
}

pub fn sector_hamiltonian(n: usize, drive_phase: f64) -> SectorHamiltonian {
    SectorHamiltonian {
        n,
        couplings: sector_couplings(n),
        drive_phase,
    }
}

/// Cached eigendecomposition of one sector, evaluated at any `θ`.
#[derive(Debug, Clone)]
pub struct SectorPropagator {
    n: usize,
    drive_phase: f64,
    eigen: TridiagonalEigen,
}

impl SectorPropagator {
    pub fn new(n: usize, drive_phase: f64) -> Self {
        let eigen = TridiagonalEigen::new(&vec![0.0; n + 1], &sector_couplings(n));
        Self {
            n,
            drive_phase,
            eigen,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Sector eigenfrequencies in units of `κ|Ω₂|c`, ascending.
    pub fn frequencies(&self) -> &[f64] {
        self.eigen.values()
    }

    /// Eigenvector component `⟨j|k⟩` in the `φ = 0` gauge.
    pub fn mode(&self, j: usize, k: usize) -> f64 {
        self.eigen.vector(j, k)
    }

    fn gauge(&self, j: usize) -> Complex64 {
        Complex64::from_polar(1.0, self.drive_phase * j as f64)
    }

    fn phases(&self, theta: f64) -> Vec<Complex64> {
        self.frequencies()
            .iter()
            .map(|w| Complex64::from_polar(1.0, -w * theta))
            .collect()
    }

    /// `⟨row|e^{−iHθ}|col⟩`.
    pub fn element(&self, row: usize, col: usize, theta: f64) -> Complex64 {
        let phases = self.phases(theta);
        self.element_with(&phases, row, col)
    }

    fn element_with(&self, phases: &[Complex64], row: usize, col: usize) -> Complex64 {
        let gauge_free: Complex64 = phases
            .iter()
            .enumerate()
            .map(|(k, ph)| ph * (self.mode(row, k) * self.mode(col, k)))
            .sum();
        self.gauge(row) * gauge_free * self.gauge(col).conj()
    }

    /// Full `(n+1)×(n+1)` propagator, row-major.
    pub fn matrix(&self, theta: f64) -> Vec<Complex64> {
        let dim = self.n + 1;
        let phases = self.phases(theta);
        let mut out = Vec::with_capacity(dim * dim);
        for r in 0..dim {
            for c in 0..dim {
                out.push(self.element_with(&phases, r, c));
            }
        }
        out
    }

    /// Amplitudes `ξ_j` reached from `|n,0,0⟩`: column 0 of the propagator.
    pub fn transfer_coefficients(&self, theta: f64) -> Vec<Complex64> {
        let phases = self.phases(theta);
        (0..=self.n)
            .map(|j| self.element_with(&phases, j, 0))
            .collect()
    }

    /// Probability `|⟨n,0,0|U(θ)|n,0,0⟩|²` of a full return to the input state.
    pub fn return_probability(&self, theta: f64) -> f64 {
        self.element(0, 0, theta).norm_sqr()
    }

    pub fn apply(&self, amps: &[Complex64], theta: f64) -> Vec<Complex64> {
        assert_eq!(amps.len(), self.n + 1, "state does not belong to sector {}", self.n);
        let dim = self.n + 1;
        let u = self.matrix(theta);
        (0..dim)
            .map(|r| (0..dim).map(|c| u[r * dim + c] * amps[c]).sum())
            .collect()
    }
}

/// `ξ_j⁽ⁿ⁾(θ)` for all `j`.
pub fn transfer_coefficients(n: usize, theta: f64, drive_phase: f64) -> Vec<Complex64> {
    if n == 0 {
        return vec![ONE];
    }
    SectorPropagator::new(n, drive_phase).transfer_coefficients(theta)
}

pub fn propagate_sector(
    state: &SectorState,
    geom: StageGeometry,
    params: &MediumParams,
) -> SectorState {
    let propagator = SectorPropagator::new(state.n(), params.drive_phase);
    let amps = propagator.apply(state.amps(), geom.theta());
    SectorState::from_parts(state.n(), amps, state.is_sub_normalized())
}

/// Single-photon solution `(cos θ, −i e^{iφ} sin θ)`.
pub fn closed_form_n1(theta: f64, drive_phase: f64) -> [Complex64; 2] {
    let phase = Complex64::from_polar(1.0, drive_phase);
    [
        Complex64::new(theta.cos(), 0.0),
        -Complex64::i() * phase * theta.sin(),
    ]
}

/// Two-photon coefficients `(ξ₀, ξ₁, ξ₂)` from the closed-form solution of
/// the 3×3 sector, whose frequencies are `0, ±√(3/2)`.
pub fn closed_form_n2(theta: f64, drive_phase: f64) -> [Complex64; 3] {
    let w = 1.5f64.sqrt() * theta;
    let phase = Complex64::from_polar(1.0, drive_phase);
    [
        Complex64::new((2.0 + w.cos()) / 3.0, 0.0),
        -Complex64::i() / 3.0f64.sqrt() * phase * w.sin(),
        -(2.0 * 2.0f64.sqrt() / 3.0) * phase * phase * (0.5 * w).sin().powi(2),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn assert_close(a: Complex64, b: Complex64, tol: f64) {
        assert!((a - b).norm() < tol, "{a} vs {b}");
    }

    #[test]
    fn couplings_for_small_sectors() {
        assert_eq!(sector_couplings(0), Vec::<f64>::new());
        assert_abs_diff_eq!(sector_couplings(1)[0], 1.0);
        let c2 = sector_couplings(2);
        assert_abs_diff_eq!(c2[0], 2.0f64.sqrt() / 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(c2[1], 1.0, epsilon = 1e-15);
        let c3 = sector_couplings(3);
        assert_abs_diff_eq!(c3[0], 3.0f64.sqrt() / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(c3[1], 2.0 * 2.0f64.sqrt() / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(c3[2], 1.0, epsilon = 1e-15);
    }

    #[test]
    fn hamiltonian_structure() {
        let h = sector_hamiltonian(4, 0.7).to_dense();
        assert_eq!(h.nrows(), 5);
        for r in 0..5 {
            assert_eq!(h[(r, r)], ZERO);
            for c in 0..5 {
                assert_close(h[(r, c)], h[(c, r)].conj(), 1e-15);
                if r.abs_diff(c) > 1 {
                    assert_eq!(h[(r, c)], ZERO);
                }
            }
        }
        assert_eq!(sector_hamiltonian(0, 0.0).to_dense(), DMatrix::from_element(1, 1, ZERO));
    }

    #[test]
    fn two_photon_frequencies() {
        let p = SectorPropagator::new(2, 0.0);
        let w = 1.5f64.sqrt();
        for (got, want) in p.frequencies().iter().zip([-w, 0.0, w]) {
            assert_abs_diff_eq!(*got, want, epsilon = 1e-14);
        }
    }

    #[test]
    fn single_photon_cycle() {
        let phi = 0.4;
        let params = MediumParams::default().with_phase(phi);
        let full = propagate_sector(&SectorState::fock(1), StageGeometry::new(PI).unwrap(), &params);
        assert_close(full.amps()[0], -ONE, 1e-12);
        assert_close(full.amps()[1], ZERO, 1e-12);

        let half = propagate_sector(
            &SectorState::fock(1),
            StageGeometry::new(PI / 2.0).unwrap(),
            &params,
        );
        assert_close(half.amps()[0], ZERO, 1e-12);
        assert_close(half.amps()[1], -Complex64::i() * Complex64::from_polar(1.0, phi), 1e-12);
    }

    #[test]
    fn two_photon_magnitudes_at_one_cycle() {
        let xi = transfer_coefficients(2, PI, 0.0);
        let quoted = [0.4130, 0.3746, 0.8301];
        for (x, q) in xi.iter().zip(quoted) {
            assert_abs_diff_eq!(x.norm(), q, epsilon = 5e-5);
        }
    }

    #[test]
    fn closed_form_n1_values() {
        let [a, b] = closed_form_n1(0.0, 0.0);
        assert_close(a, ONE, 1e-15);
        assert_close(b, ZERO, 1e-15);
        let [a, b] = closed_form_n1(PI, 0.0);
        assert_close(a, -ONE, 1e-15);
        assert_close(b, ZERO, 1e-15);
        let phi = 1.1;
        let [a, b] = closed_form_n1(PI / 3.0, phi);
        assert_close(a, Complex64::new(0.5, 0.0), 1e-15);
        let expected = -Complex64::i() * Complex64::from_polar(0.8660254037844386, phi);
        assert_close(b, expected, 1e-15);
        let numeric = transfer_coefficients(1, PI / 3.0, phi);
        assert_close(numeric[0], a, 1e-12);
        assert_close(numeric[1], b, 1e-12);
    }

    #[test]
    fn closed_form_n2_values() {
        let xi = closed_form_n2(0.0, 0.3);
        assert_close(xi[0], ONE, 1e-15);
        assert_close(xi[1], ZERO, 1e-15);
        assert_close(xi[2], ZERO, 1e-15);

        let mags: Vec<f64> = closed_form_n2(PI, 0.0).iter().map(|x| x.norm()).collect();
        for (m, q) in mags.iter().zip([0.4130, 0.3746, 0.8301]) {
            assert_abs_diff_eq!(*m, q, epsilon = 5e-5);
        }
        // Frozen from direct evaluation of the closed forms at θ = 2π.
        let mags: Vec<f64> = closed_form_n2(2.0 * PI, 0.0).iter().map(|x| x.norm()).collect();
        for (m, q) in mags.iter().zip([0.7193, 0.5701, 0.3969]) {
            assert_abs_diff_eq!(*m, q, epsilon = 5e-5);
        }
    }

    #[test]
    fn cycle_lengths() {
        let l0 = |rate: f64| cycle_length(&MediumParams { kappa: rate, ..Default::default() });
        assert_abs_diff_eq!(l0(PI).unwrap(), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(l0(1.0).unwrap(), PI, epsilon = 1e-15);
        assert_abs_diff_eq!(l0(2.0).unwrap(), PI / 2.0, epsilon = 1e-15);
        assert!(l0(0.0).is_err());
        assert!(cycle_length(&MediumParams { drive_mag: 0.0, ..Default::default() }).is_err());
    }

    #[test]
    fn geometry_conversions() {
        let params = MediumParams::new(2.0, 0.5, 0.0).unwrap();
        let geom = StageGeometry::from_length(cycle_length(&params).unwrap(), &params).unwrap();
        assert_abs_diff_eq!(geom.theta(), PI, epsilon = 1e-15);
        assert_abs_diff_eq!(StageGeometry::from_cycles(2.0).unwrap().theta(), 2.0 * PI);
        assert_abs_diff_eq!(geom.length(&params).unwrap(), PI, epsilon = 1e-15);
        assert!(StageGeometry::new(-0.1).is_err());
        assert!(StageGeometry::new(f64::INFINITY).is_err());
    }

    #[test]
    fn atomic_coupling() {
        let medium = AtomicMedium {
            density: 8.0 * PI,
            wavelength: 2.0,
            decay_rate: 0.5,
            detuning: 3.0,
        };
        assert_abs_diff_eq!(medium.coupling(), 6.0, epsilon = 1e-12);
        assert_abs_diff_eq!(medium.kappa(), 2.0, epsilon = 1e-12);
        let params = MediumParams::from_atomic(&medium, 0.25, 0.0).unwrap();
        assert_abs_diff_eq!(params.rate(), 0.5, epsilon = 1e-12);
    }

    #[test]
    fn single_photon_periodicity() {
        let p = SectorPropagator::new(1, 0.9);
        let u = p.matrix(2.0 * PI);
        let v = p.matrix(PI);
        for r in 0..2 {
            for c in 0..2 {
                let id = if r == c { ONE } else { ZERO };
                assert_close(u[r * 2 + c], id, 1e-10);
                assert_close(v[r * 2 + c], -id, 1e-10);
            }
        }
    }

    #[test]
    fn vacuum_is_static() {
        let out = propagate_sector(
            &SectorState::fock(0),
            StageGeometry::new(3.0).unwrap(),
            &MediumParams::default(),
        );
        assert_close(out.amps()[0], ONE, 1e-15);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]

        #[test]
        fn propagator_is_unitary(n in 0usize..=12, theta in 0.0f64..(4.0 * PI), phi in -PI..PI) {
            let p = SectorPropagator::new(n, phi);
            let dim = n + 1;
            let u = p.matrix(theta);
            for a in 0..dim {
                for b in 0..dim {
                    let overlap: Complex64 = (0..dim).map(|r| u[r * dim + a].conj() * u[r * dim + b]).sum();
                    let expected = if a == b { 1.0 } else { 0.0 };
                    prop_assert!((overlap - expected).norm() < 1e-12);
                }
            }
        }

        #[test]
        fn matches_closed_forms(theta in 0.0f64..(4.0 * PI), phi in -PI..PI) {
            let one = transfer_coefficients(1, theta, phi);
            for (a, b) in one.iter().zip(closed_form_n1(theta, phi)) {
                prop_assert!((a - b).norm() < 1e-10);
            }
            let two = transfer_coefficients(2, theta, phi);
            for (a, b) in two.iter().zip(closed_form_n2(theta, phi)) {
                prop_assert!((a - b).norm() < 1e-10);
            }
        }

        #[test]
        fn closed_form_n2_is_normalized(theta in -50.0f64..50.0, phi in -PI..PI) {
            let total: f64 = closed_form_n2(theta, phi).iter().map(|x| x.norm_sqr()).sum();
            prop_assert!((total - 1.0).abs() < 1e-12);
        }

        #[test]
        fn propagation_preserves_norm(n in 1usize..=10, theta in 0.0f64..(4.0 * PI), seed in any::<u64>()) {
            let raw: Vec<Complex64> = (0..=n)
                .map(|j| {
                    let x = ((seed.rotate_left(j as u32 * 7) % 1000) as f64) / 1000.0 + 0.01;
                    Complex64::from_polar(x, j as f64 * 0.37)
                })
                .collect();
            let norm = raw.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
            let state = SectorState::new(raw.iter().map(|a| a / norm).collect()).unwrap();
            let out = propagate_sector(&state, StageGeometry::new(theta).unwrap(), &MediumParams::default());
            prop_assert!((out.norm_sqr() - 1.0).abs() < 1e-12);
        }
    }
}
