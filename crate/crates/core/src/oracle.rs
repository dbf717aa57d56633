//! Brute-force reference on the truncated three-mode Fock space.
//!
//! The interaction is assembled from single-mode ladder matrices, operator
//! denominator included, with no use of the sector reduction. States are
//! propagated either by a dense Hermitian eigendecomposition or by
//! fixed-step RK4 integration of the Schrödinger equation. These reproduce
//! the sector dynamics, the constants of motion, and the claim that
//! coherences between photon numbers never affect reported statistics.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::cascade::{run_cascade, CascadeOptions, DetectorRecord};
use crate::dynamics::{MediumParams, SectorPropagator, StageGeometry};
use crate::error::{Error, Result};
use crate::fock::{coherent_amplitudes, InputSpec, Occupation};

/// Largest per-mode truncation accepted by default; `(t+1)³ = 729` states.
pub const MAX_TRUNCATION: usize = 8;

/// Squared norm below which a full-space cascade branch is discarded.
const BRANCH_FLOOR: f64 = 1e-30;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

fn check_truncation(truncation: usize) -> Result<()> {
    if truncation < 1 {
        return Err(Error::InvalidParameter("full-space truncation must be at least 1".into()));
    }
    if truncation > MAX_TRUNCATION {
        return Err(Error::DimensionTooLarge {
            truncation,
            limit: MAX_TRUNCATION,
        });
    }
    Ok(())
}

/// Product basis `|n₁, m₁, m₂⟩` with every occupation in `0..=truncation`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FockSpace {
    truncation: usize,
}

impl FockSpace {
    pub fn new(truncation: usize) -> Self {
        Self { truncation }
    }

    pub fn truncation(&self) -> usize {
        self.truncation
    }

    pub fn dim(&self) -> usize {
        (self.truncation + 1).pow(3)
    }

    pub fn index(&self, occ: Occupation) -> usize {
        let side = self.truncation + 1;
        assert!(occ.pump < side && occ.e1 < side && occ.e2 < side, "{occ:?} outside truncation");
        (occ.pump * side + occ.e1) * side + occ.e2
    }

    pub fn occupation(&self, index: usize) -> Occupation {
        let side = self.truncation + 1;
        Occupation::new(index / (side * side), (index / side) % side, index % side)
    }

    /// Conserved charges `(n₁ + m₁, m₁ − m₂)`.
    pub fn charges(&self, index: usize) -> (usize, isize) {
        let o = self.occupation(index);
        (o.pump + o.e1, o.e1 as isize - o.e2 as isize)
    }

    /// Whether the charge sector of `index` lies strictly inside the
    /// truncation: every state in it has all occupations `≤ truncation − 1`,
    /// so no operator used here is clipped by the truncation.
    pub fn is_interior(&self, index: usize) -> bool {
        let (total, corr) = self.charges(index);
        let max_e2 = total as isize - corr;
        total < self.truncation && max_e2 < self.truncation as isize
    }
}

/// Amplitudes over the truncated product basis.
#[derive(Debug, Clone, PartialEq)]
pub struct FullFockState {
    space: FockSpace,
    amps: DVector<Complex64>,
}

impl FullFockState {
    pub fn basis(truncation: usize, occ: Occupation) -> Result<Self> {
        check_truncation(truncation)?;
        let space = FockSpace::new(truncation);
        if occ.pump > truncation || occ.e1 > truncation || occ.e2 > truncation {
            return Err(Error::InvalidParameter(format!(
                "{occ:?} exceeds truncation {truncation}"
            )));
        }
        let mut amps = DVector::from_element(space.dim(), ZERO);
        amps[space.index(occ)] = Complex64::new(1.0, 0.0);
        Ok(Self { space, amps })
    }

    pub fn from_amps(truncation: usize, amps: DVector<Complex64>) -> Result<Self> {
        check_truncation(truncation)?;
        let space = FockSpace::new(truncation);
        if amps.len() != space.dim() {
            return Err(Error::InvalidParameter(format!(
                "expected {} amplitudes, got {}",
                space.dim(),
                amps.len()
            )));
        }
        let norm = amps.norm_squared();
        if (norm - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParameter(format!("state has squared norm {norm}")));
        }
        Ok(Self { space, amps })
    }

    pub fn space(&self) -> FockSpace {
        self.space
    }

    pub fn amps(&self) -> &DVector<Complex64> {
        &self.amps
    }

    pub fn amp(&self, occ: Occupation) -> Complex64 {
        self.amps[self.space.index(occ)]
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.norm_squared()
    }
}

/// Interaction Hamiltonian on the truncated space, in units of `ħκ|Ω₂|c`.
#[derive(Debug, Clone)]
pub struct FullHamiltonian {
    space: FockSpace,
    drive_phase: f64,
    matrix: DMatrix<Complex64>,
}

fn lowering(truncation: usize) -> DMatrix<Complex64> {
    let side = truncation + 1;
    DMatrix::from_fn(side, side, |r, c| {
        if c == r + 1 {
            Complex64::new((c as f64).sqrt(), 0.0)
        } else {
            ZERO
        }
    })
}

/// Ladder operators `(a₁, b₁, b₂)` for Ω₁, E₁, E₂ on the product space.
fn mode_operators(truncation: usize) -> [DMatrix<Complex64>; 3] {
    let low = lowering(truncation);
    let id = DMatrix::<Complex64>::identity(truncation + 1, truncation + 1);
    [
        low.kronecker(&id).kronecker(&id),
        id.kronecker(&low).kronecker(&id),
        id.kronecker(&id).kronecker(&low),
    ]
}

/// `e^{−iφ} a₁† b₁ b₂ + e^{iφ} b₁† b₂† a₁`, the numerator of the interaction.
fn trilinear(ops: &[DMatrix<Complex64>; 3], drive_phase: f64) -> DMatrix<Complex64> {
    let [a, b1, b2] = ops;
    let down = a.adjoint() * b1 * b2 * Complex64::from_polar(1.0, -drive_phase);
    let up = down.adjoint();
    down + up
}

pub fn build_full_hamiltonian(truncation: usize, drive_phase: f64) -> Result<FullHamiltonian> {
    check_truncation(truncation)?;
    let ops = mode_operators(truncation);
    let [a, b1, _] = &ops;
    let denominator = a.adjoint() * a + b1.adjoint() * b1;
    // Pseudo-inverse: zero on the kernel, which the numerator annihilates anyway.
    let inverse = DMatrix::from_fn(denominator.nrows(), denominator.ncols(), |r, c| {
        let d = denominator[(r, c)].re;
        if r == c && d > 0.5 {
            Complex64::new(1.0 / d, 0.0)
        } else {
            ZERO
        }
    });
    let matrix = inverse * trilinear(&ops, drive_phase);
    Ok(FullHamiltonian {
        space: FockSpace::new(truncation),
        drive_phase,
        matrix,
    })
}

impl FullHamiltonian {
    pub fn space(&self) -> FockSpace {
        self.space
    }

    pub fn drive_phase(&self) -> f64 {
        self.drive_phase
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn entry(&self, row: Occupation, col: Occupation) -> Complex64 {
        self.matrix[(self.space.index(row), self.space.index(col))]
    }

    /// `max |H − H†|`
    pub fn hermiticity_defect(&self) -> f64 {
        (&self.matrix - self.matrix.adjoint()).camax()
    }

    /// Largest matrix element connecting different charge sectors.
    pub fn charge_leakage(&self) -> f64 {
        let dim = self.space.dim();
        let mut worst: f64 = 0.0;
        for r in 0..dim {
            for c in 0..dim {
                if self.space.charges(r) != self.space.charges(c) {
                    worst = worst.max(self.matrix[(r, c)].norm());
                }
            }
        }
        worst
    }

    /// Largest `|H ψ|` over basis states with no Ω₁ and no E₁ photons.
    pub fn kernel_defect(&self) -> f64 {
        let dim = self.space.dim();
        (0..dim)
            .filter(|&c| {
                let o = self.space.occupation(c);
                o.pump == 0 && o.e1 == 0
            })
            .map(|c| self.matrix.column(c).camax())
            .fold(0.0, f64::max)
    }

    /// Nonzero entries as `(row, col, value)`.
    pub fn sparse_entries(&self) -> Vec<(usize, usize, Complex64)> {
        let dim = self.space.dim();
        let mut out = Vec::new();
        for c in 0..dim {
            for r in 0..dim {
                let v = self.matrix[(r, c)];
                if v != ZERO {
                    out.push((r, c, v));
                }
            }
        }
        out
    }
}

/// Dense eigendecomposition of a [`FullHamiltonian`].
#[derive(Debug, Clone)]
pub struct FullPropagator {
    space: FockSpace,
    values: DVector<f64>,
    vectors: DMatrix<Complex64>,
}

impl FullPropagator {
    pub fn new(hamiltonian: &FullHamiltonian) -> Self {
        let eigen = hamiltonian.matrix.clone().symmetric_eigen();
        Self {
            space: hamiltonian.space,
            values: eigen.eigenvalues,
            vectors: eigen.eigenvectors,
        }
    }

    pub fn space(&self) -> FockSpace {
        self.space
    }

    pub fn apply(&self, amps: &DVector<Complex64>, theta: f64) -> DVector<Complex64> {
        let mut coeffs = self.vectors.adjoint() * amps;
        for (c, w) in coeffs.iter_mut().zip(self.values.iter()) {
            *c *= Complex64::from_polar(1.0, -w * theta);
        }
        &self.vectors * coeffs
    }

    pub fn propagate(&self, state: &FullFockState, theta: f64) -> FullFockState {
        assert_eq!(state.space, self.space, "state and propagator truncations differ");
        FullFockState {
            space: self.space,
            amps: self.apply(&state.amps, theta),
        }
    }
}

/// `exp(−iHθ)|ψ⟩` by dense eigendecomposition.
pub fn propagate_full(
    state: &FullFockState,
    theta: f64,
    hamiltonian: &FullHamiltonian,
) -> FullFockState {
    FullPropagator::new(hamiltonian).propagate(state, theta)
}

/// Result of [`integrate_schrodinger`].
#[derive(Debug, Clone)]
pub struct Integration {
    pub state: FullFockState,
    /// Step-halving estimate of the remaining error, `‖ψ_{2N} − ψ_N‖/15`.
    pub error_estimate: f64,
    /// `|‖ψ‖² − ‖ψ₀‖²|` of the returned state.
    pub norm_drift: f64,
    pub steps: usize,
}

/// Error bound demanded of the step-halving estimate.
pub const INTEGRATION_TOLERANCE: f64 = 1e-8;

fn rk4(
    entries: &[(usize, usize, Complex64)],
    psi: &DVector<Complex64>,
    theta: f64,
    steps: usize,
) -> DVector<Complex64> {
    let dim = psi.len();
    // k = −i·h·Hψ, so the stages combine with real weights.
    let step = Complex64::new(0.0, -theta / steps as f64);
    let deriv = |v: &[Complex64], out: &mut [Complex64]| {
        out.fill(ZERO);
        for &(r, c, x) in entries {
            out[r] += x * v[c];
        }
        out.iter_mut().for_each(|o| *o *= step);
    };
    let mut y: Vec<Complex64> = psi.iter().copied().collect();
    let mut k = [vec![ZERO; dim], vec![ZERO; dim], vec![ZERO; dim], vec![ZERO; dim]];
    let mut probe = vec![ZERO; dim];
    for _ in 0..steps {
        deriv(&y, &mut k[0]);
        for (stage, scale) in [(1, 0.5), (2, 0.5), (3, 1.0)] {
            for i in 0..dim {
                probe[i] = y[i] + k[stage - 1][i] * scale;
            }
            deriv(&probe, &mut k[stage]);
        }
        for i in 0..dim {
            y[i] += (k[0][i] + (k[1][i] + k[2][i]) * 2.0 + k[3][i]) / 6.0;
        }
    }
    DVector::from_vec(y)
}

/// Fixed-step RK4 integration of `i∂_θψ = Hψ` with `steps` and `2·steps`
/// steps; the finer result is returned.
pub fn integrate_schrodinger(
    state: &FullFockState,
    theta: f64,
    steps: usize,
    hamiltonian: &FullHamiltonian,
) -> Result<Integration> {
    if steps == 0 {
        return Err(Error::InvalidParameter("need at least one integration step".into()));
    }
    assert_eq!(state.space, hamiltonian.space, "state and Hamiltonian truncations differ");
    let entries = hamiltonian.sparse_entries();
    let coarse = rk4(&entries, &state.amps, theta, steps);
    let fine = rk4(&entries, &state.amps, theta, 2 * steps);
    let error_estimate = (&fine - &coarse).norm() / 15.0;
    if error_estimate > INTEGRATION_TOLERANCE {
        return Err(Error::IntegrationTolerance {
            estimate: error_estimate,
            tolerance: INTEGRATION_TOLERANCE,
            steps,
        });
    }
    let norm_drift = (fine.norm_squared() - state.amps.norm_squared()).abs();
    Ok(Integration {
        state: FullFockState {
            space: state.space,
            amps: fine,
        },
        error_estimate,
        norm_drift,
        steps: 2 * steps,
    })
}

/// Distance between full-space and sector propagation of `|n,0,0⟩`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SectorComparison {
    pub n: usize,
    pub theta: f64,
    /// Largest amplitude difference on the sector states `|n−j, j, j⟩`.
    pub max_deviation: f64,
    /// Norm of the full-space amplitude outside the sector.
    pub leakage: f64,
}

pub fn compare_sector(propagator: &FullPropagator, n: usize, theta: f64, drive_phase: f64) -> Result<SectorComparison> {
    let space = propagator.space();
    let input = FullFockState::basis(space.truncation(), Occupation::new(n, 0, 0))?;
    let out = propagator.propagate(&input, theta);
    let sector = SectorPropagator::new(n, drive_phase).transfer_coefficients(theta);
    let mut max_deviation: f64 = 0.0;
    let mut inside = vec![false; space.dim()];
    for (j, xi) in sector.iter().enumerate() {
        let idx = space.index(Occupation::new(n - j, j, j));
        inside[idx] = true;
        max_deviation = max_deviation.max((out.amps[idx] - xi).norm());
    }
    let leakage = out
        .amps
        .iter()
        .zip(&inside)
        .filter(|(_, &i)| !i)
        .map(|(a, _)| a.norm_sqr())
        .sum::<f64>()
        .sqrt();
    Ok(SectorComparison {
        n,
        theta,
        max_deviation,
        leakage,
    })
}

/// Commutator norms `‖[H, Q]‖_F` of the three constants of motion,
/// restricted to interior charge sectors (see [`FockSpace::is_interior`]).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConservationReport {
    pub truncation: usize,
    pub interior_states: usize,
    /// `Q = a₁†a₁ + b₁†b₁`
    pub photon_number: f64,
    /// `Q = b₁†b₁ − b₂†b₂`
    pub correlation: f64,
    /// `Q = e^{−iφ} a₁†b₁b₂ + h.c.`
    pub trilinear: f64,
    /// Same three norms over the whole truncated space, edge effects included.
    pub full_space: [f64; 3],
}

impl ConservationReport {
    pub fn max_interior(&self) -> f64 {
        self.photon_number.max(self.correlation).max(self.trilinear)
    }
}

pub fn check_constants_of_motion(truncation: usize, drive_phase: f64) -> Result<ConservationReport> {
    if truncation < 2 {
        return Err(Error::InvalidParameter(
            "constants of motion need truncation of at least 2".into(),
        ));
    }
    let h = build_full_hamiltonian(truncation, drive_phase)?;
    let ops = mode_operators(truncation);
    let [a, b1, b2] = &ops;
    let charges = [
        a.adjoint() * a + b1.adjoint() * b1,
        b1.adjoint() * b1 - b2.adjoint() * b2,
        trilinear(&ops, drive_phase),
    ];
    let space = h.space;
    let interior: Vec<usize> = (0..space.dim()).filter(|&i| space.is_interior(i)).collect();

    let mut interior_norms = [0.0; 3];
    let mut full_norms = [0.0; 3];
    for (k, q) in charges.iter().enumerate() {
        let comm = &h.matrix * q - q * &h.matrix;
        full_norms[k] = comm.norm();
        interior_norms[k] = interior
            .iter()
            .flat_map(|&r| interior.iter().map(move |&c| (r, c)))
            .map(|(r, c)| comm[(r, c)].norm_sqr())
            .sum::<f64>()
            .sqrt();
    }
    Ok(ConservationReport {
        truncation,
        interior_states: interior.len(),
        photon_number: interior_norms[0],
        correlation: interior_norms[1],
        trilinear: interior_norms[2],
        full_space: full_norms,
    })
}

/// Largest gap between the cascade statistics of a coherent superposition
/// evolved in the full space and those of the photon-number mixture.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MixtureComparison {
    pub distribution_deviation: f64,
    pub record_deviation: f64,
    /// Number of full-space branches alive after the last stage.
    pub branches: usize,
}

impl MixtureComparison {
    pub fn max_deviation(&self) -> f64 {
        self.distribution_deviation.max(self.record_deviation)
    }
}

struct FullBranch {
    record: DetectorRecord,
    /// Ω₁ amplitudes; the generated modes are in vacuum between stages.
    pump: Vec<Complex64>,
}

/// Runs the cascade twice: once on the pure coherent state `|α⟩` (truncated
/// at `truncation` photons and renormalized) in the full Fock space, with
/// every `(m₁, m₂)` detector outcome kept as its own branch, and once through
/// [`run_cascade`] on the corresponding Poisson mixture. Ideal detectors.
pub fn compare_pure_vs_mixture(
    mean_n: f64,
    truncation: usize,
    stages: &[StageGeometry],
    params: &MediumParams,
) -> Result<MixtureComparison> {
    let h = build_full_hamiltonian(truncation, params.drive_phase)?;
    let propagator = FullPropagator::new(&h);
    let space = h.space;
    let side = truncation + 1;

    let opts = CascadeOptions {
        tail_tolerance: f64::INFINITY,
        ..CascadeOptions::default()
    };
    let mixture = run_cascade(
        &InputSpec::Coherent { mean_n, truncation },
        stages,
        params,
        &opts,
    )?;

    let mut branches = vec![FullBranch {
        record: DetectorRecord::new(),
        pump: coherent_amplitudes(mean_n, 0.35, truncation)?,
    }];
    let pump_distribution = |branches: &[FullBranch]| {
        let mut probs = vec![0.0; side];
        for b in branches {
            for (n, a) in b.pump.iter().enumerate() {
                probs[n] += a.norm_sqr();
            }
        }
        probs
    };
    let mut distributions = vec![pump_distribution(&branches)];

    for geom in stages {
        let columns: Vec<DVector<Complex64>> = (0..side)
            .map(|n| {
                let mut e = DVector::from_element(space.dim(), ZERO);
                e[space.index(Occupation::new(n, 0, 0))] = Complex64::new(1.0, 0.0);
                propagator.apply(&e, geom.theta())
            })
            .collect();
        let mut next = Vec::new();
        for b in &branches {
            let mut out = DVector::from_element(space.dim(), ZERO);
            for (n, a) in b.pump.iter().enumerate() {
                if *a != ZERO {
                    out += &columns[n] * *a;
                }
            }
            for m1 in 0..side {
                for m2 in 0..side {
                    let pump: Vec<Complex64> = (0..side)
                        .map(|n| out[space.index(Occupation::new(n, m1, m2))])
                        .collect();
                    if pump.iter().map(|a| a.norm_sqr()).sum::<f64>() < BRANCH_FLOOR {
                        continue;
                    }
                    let click = u32::from(m1 + m2 > 0);
                    next.push(FullBranch {
                        record: b.record.with_stage(click),
                        pump,
                    });
                }
            }
        }
        branches = next;
        distributions.push(pump_distribution(&branches));
    }

    let mut records: BTreeMap<DetectorRecord, f64> = BTreeMap::new();
    for b in &branches {
        for (n, a) in b.pump.iter().enumerate() {
            let final_click = u32::from(n > 0);
            *records.entry(b.record.with_final(final_click)).or_default() += a.norm_sqr();
        }
    }

    let mut distribution_deviation: f64 = 0.0;
    for (full, mixed) in distributions.iter().zip(&mixture.stage_distributions) {
        for (n, p) in full.iter().enumerate() {
            distribution_deviation = distribution_deviation.max((p - mixed.p(n)).abs());
        }
    }
    let mixed_records: BTreeMap<_, _> = mixture.records.iter().cloned().collect();
    let mut record_deviation: f64 = 0.0;
    for key in records.keys().chain(mixed_records.keys()) {
        let a = records.get(key).copied().unwrap_or(0.0);
        let b = mixed_records.get(key).copied().unwrap_or(0.0);
        record_deviation = record_deviation.max((a - b).abs());
    }

    Ok(MixtureComparison {
        distribution_deviation,
        record_deviation,
        branches: branches.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    fn occ(n: usize, m1: usize, m2: usize) -> Occupation {
        Occupation::new(n, m1, m2)
    }

    #[test]
    fn indexing_round_trips() {
        let space = FockSpace::new(3);
        for i in 0..space.dim() {
            assert_eq!(space.index(space.occupation(i)), i);
        }
        assert_eq!(space.charges(space.index(occ(1, 2, 0))), (3, 2));
    }

    #[test]
    fn ladder_matrix_elements() {
        let phi = 0.6;
        let h = build_full_hamiltonian(3, phi).unwrap();
        let expected = Complex64::from_polar(2.0f64.sqrt() / 2.0, phi);
        assert!((h.entry(occ(1, 1, 1), occ(2, 0, 0)) - expected).norm() < 1e-14);
        assert_eq!(h.entry(occ(0, 0, 0), occ(0, 0, 0)), ZERO);
        // single-photon block in the ordered basis (|1,0,0⟩, |0,1,1⟩)
        assert!((h.entry(occ(0, 1, 1), occ(1, 0, 0)) - Complex64::from_polar(1.0, phi)).norm() < 1e-14);
        assert!((h.entry(occ(1, 0, 0), occ(0, 1, 1)) - Complex64::from_polar(1.0, -phi)).norm() < 1e-14);
        assert_eq!(h.entry(occ(1, 0, 0), occ(1, 0, 0)), ZERO);
    }

    #[test]
    fn structure_of_full_hamiltonian() {
        for t in 1..=5 {
            let h = build_full_hamiltonian(t, 1.3).unwrap();
            assert!(h.hermiticity_defect() < 1e-12);
            assert_eq!(h.charge_leakage(), 0.0);
            assert_eq!(h.kernel_defect(), 0.0);
        }
    }

    #[test]
    fn truncation_guard() {
        assert!(build_full_hamiltonian(0, 0.0).is_err());
        assert!(matches!(
            build_full_hamiltonian(MAX_TRUNCATION + 1, 0.0),
            Err(Error::DimensionTooLarge { .. })
        ));
    }

    #[test]
    fn one_and_two_photon_cycles() {
        let h = build_full_hamiltonian(4, 0.0).unwrap();
        let p = FullPropagator::new(&h);
        let one = p.propagate(&FullFockState::basis(4, occ(1, 0, 0)).unwrap(), PI);
        assert!((one.amp(occ(1, 0, 0)) + 1.0).norm() < 1e-10);
        assert!((one.norm_sqr() - 1.0).abs() < 1e-10);

        let two = p.propagate(&FullFockState::basis(4, occ(2, 0, 0)).unwrap(), PI);
        for (j, q) in [0.4130, 0.3746, 0.8301].iter().enumerate() {
            assert_abs_diff_eq!(two.amp(occ(2 - j, j, j)).norm(), *q, epsilon = 5e-5);
        }
        let inside: f64 = (0..3).map(|j| two.amp(occ(2 - j, j, j)).norm_sqr()).sum();
        assert!((1.0 - inside).abs() < 1e-10);
    }

    #[test]
    fn three_photon_populations_match_sector() {
        let h = build_full_hamiltonian(4, 0.2).unwrap();
        let cmp = compare_sector(&FullPropagator::new(&h), 3, PI, 0.2).unwrap();
        assert!(cmp.max_deviation < 1e-10);
        assert!(cmp.leakage < 1e-12);
    }

    #[test]
    fn integration_agrees_with_eigendecomposition() {
        let phi = 0.5;
        let h = build_full_hamiltonian(3, phi).unwrap();
        let start = FullFockState::basis(3, occ(1, 0, 0)).unwrap();
        let same = integrate_schrodinger(&start, 0.0, 10, &h).unwrap();
        assert_eq!(same.state.amps(), start.amps());

        let half = integrate_schrodinger(&start, PI / 2.0, 10_000, &h).unwrap();
        assert!(half.state.amp(occ(1, 0, 0)).norm() < 1e-8);
        let target = -Complex64::i() * Complex64::from_polar(1.0, phi);
        assert!((half.state.amp(occ(0, 1, 1)) - target).norm() < 1e-8);
        assert!(half.norm_drift < 1e-8);

        let two = FullFockState::basis(3, occ(2, 0, 0)).unwrap();
        let rk = integrate_schrodinger(&two, PI, 10_000, &h).unwrap();
        let exact = propagate_full(&two, PI, &h);
        assert!((rk.state.amps() - exact.amps()).camax() < 1e-7);
    }

    #[test]
    fn coarse_integration_is_rejected() {
        let h = build_full_hamiltonian(3, 0.0).unwrap();
        let start = FullFockState::basis(3, occ(2, 0, 0)).unwrap();
        assert!(matches!(
            integrate_schrodinger(&start, 4.0 * PI, 3, &h),
            Err(Error::IntegrationTolerance { .. })
        ));
    }

    #[test]
    fn constants_of_motion_hold_inside_truncation() {
        let report = check_constants_of_motion(4, 0.7).unwrap();
        assert!(report.photon_number < 1e-12);
        assert!(report.correlation < 1e-12);
        assert!(report.trilinear < 1e-10);
        assert!(report.interior_states > 0);
        // the number charges commute exactly everywhere
        assert!(report.full_space[0] < 1e-12 && report.full_space[1] < 1e-12);
        assert!(check_constants_of_motion(1, 0.0).is_err());
    }

    #[test]
    fn vacuum_mixture_comparison_is_exact() {
        let stages = crate::cascade::uniform_stages(PI, 2).unwrap();
        let cmp = compare_pure_vs_mixture(0.0, 2, &stages, &MediumParams::default()).unwrap();
        assert_eq!(cmp.max_deviation(), 0.0);
    }

    #[test]
    fn coherences_do_not_change_statistics() {
        let stages = crate::cascade::uniform_stages(PI, 3).unwrap();
        let params = MediumParams::default().with_phase(0.9);
        let cmp = compare_pure_vs_mixture(1.5, 5, &stages, &params).unwrap();
        assert!(cmp.max_deviation() < 1e-10, "{cmp:?}");
        assert!(cmp.branches > 1);
    }
}
