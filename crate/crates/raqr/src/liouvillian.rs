//! Exact open-system engine: Lindblad generators for driven ladder systems,
//! steady states beyond the weak-probe approximation, thermal Doppler
//! integration, and transient bandwidth extraction.
//!
//! The density matrix is column-stacked into a length-N² vector, turning the
//! master equation into a linear system on the N²×N² generator. The steady
//! state comes from replacing the final (linearly dependent) row with the
//! trace constraint; transients come from the eigendecomposition of the
//! generator with the RF drive removed.

use ndarray::{linalg::kron, Array1, Array2};
use ndarray_linalg::{Eig, EigValsh, Inverse, Solve, UPLO};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::analytic::{BeamGeometry, FiveLevelScheme, FourLevelScheme};
use crate::atomdata::{Architecture, AtomicParameterTable, Species};
use crate::thermal::{transit_rate, VelocityGrid};

type C64 = Complex64;

/// Numerical failures of the open-system engine.
#[derive(Debug, thiserror::Error)]
pub enum SolverError {
    #[error("modified generator is ill-conditioned (estimate {estimate:.3e})")]
    IllConditioned { estimate: f64 },
    #[error("steady state violates {what}: {value:.3e} exceeds {tolerance:.1e}")]
    InvalidState {
        what: &'static str,
        value: f64,
        tolerance: f64,
    },
    #[error("generator was already trace-row replaced")]
    AlreadyReplaced,
    #[error("dimension mismatch: Hamiltonian {hamiltonian} levels, dissipator {dissipator}")]
    DimensionMismatch {
        hamiltonian: usize,
        dissipator: usize,
    },
    #[error("velocity class v = {velocity} m/s: {source}")]
    AtVelocity {
        velocity: f64,
        #[source]
        source: Box<SolverError>,
    },
    #[error("relaxation threshold never crossed in the sampled window; extend the time grid")]
    NonBracketing,
    #[error("on and off coherences coincide; no decay to time")]
    DegenerateThreshold,
    #[error("linear algebra backend: {0}")]
    Backend(#[from] ndarray_linalg::error::LinalgError),
}

/// Drive parameters of an N-level ladder: one Rabi frequency and detuning
/// per nearest-neighbour coupling, ground state upward. The final coupling
/// is the RF transition.
#[derive(Debug, Clone, PartialEq)]
pub struct LadderDrive {
    pub rabi: Vec<f64>,
    pub detuning: Vec<f64>,
}

impl LadderDrive {
    pub fn new(rabi: Vec<f64>, detuning: Vec<f64>) -> Self {
        assert_eq!(rabi.len(), detuning.len(), "one detuning per coupling");
        assert!(!rabi.is_empty());
        LadderDrive { rabi, detuning }
    }

    pub fn level_count(&self) -> usize {
        self.rabi.len() + 1
    }

    /// Replace the RF Rabi frequency (the last coupling).
    pub fn with_rf_rabi(mut self, omega_rf: f64) -> Self {
        *self.rabi.last_mut().unwrap() = omega_rf;
        self
    }

    pub fn from_four_level(scheme: &FourLevelScheme) -> Self {
        LadderDrive {
            rabi: vec![scheme.probe.rabi, scheme.coupling.rabi, scheme.rf.rabi],
            detuning: vec![
                scheme.probe.detuning,
                scheme.coupling.detuning,
                scheme.rf.detuning,
            ],
        }
    }

    pub fn from_five_level(scheme: &FiveLevelScheme) -> Self {
        LadderDrive {
            rabi: vec![
                scheme.probe.rabi,
                scheme.dressing.rabi,
                scheme.coupling.rabi,
                scheme.rf.rabi,
            ],
            detuning: vec![
                scheme.probe.detuning,
                scheme.dressing.detuning,
                scheme.coupling.detuning,
                scheme.rf.detuning,
            ],
        }
    }
}

/// N×N ladder Hamiltonian in angular units with ħ factored out.
#[derive(Debug, Clone, PartialEq)]
pub struct HamiltonianMatrix {
    matrix: Array2<C64>,
}

impl HamiltonianMatrix {
    pub fn matrix(&self) -> &Array2<C64> {
        &self.matrix
    }

    pub fn level_count(&self) -> usize {
        self.matrix.nrows()
    }

    /// Largest |H_ij - conj(H_ji)|.
    pub fn hermiticity_defect(&self) -> f64 {
        let n = self.matrix.nrows();
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                worst = worst.max((self.matrix[(i, j)] - self.matrix[(j, i)].conj()).norm());
            }
        }
        worst
    }
}

/// Build the ladder Hamiltonian for an atom at longitudinal velocity `v`.
///
/// The diagonal carries the negative cumulative detunings with per-beam
/// Doppler shifts `s_j·k_j·v` applied to the first `geometry` couplings;
/// the RF coupling is centimeter-wave and takes no shift. Off-diagonals
/// carry the half Rabi frequencies.
pub fn build_hamiltonian(drive: &LadderDrive, v: f64, geometry: &BeamGeometry) -> HamiltonianMatrix {
    let n = drive.level_count();
    let shifts = geometry.detuning_shifts(v);
    assert!(
        shifts.len() <= drive.rabi.len(),
        "geometry has more beams than ladder couplings"
    );
    let mut h = Array2::<C64>::zeros((n, n));
    let mut cumulative = 0.0;
    for level in 1..n {
        let coupling = level - 1;
        let shifted = drive.detuning[coupling]
            - shifts.get(coupling).copied().unwrap_or(0.0);
        cumulative += shifted;
        h[(level, level)] = C64::from(-cumulative);
    }
    for coupling in 0..n - 1 {
        let half = C64::from(drive.rabi[coupling] / 2.0);
        h[(coupling, coupling + 1)] = half;
        h[(coupling + 1, coupling)] = half;
    }
    HamiltonianMatrix { matrix: h }
}

/// How the residual dephasing rate is distributed over coherences.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DephasingMode {
    /// Dephase only coherences involving Rydberg levels.
    #[default]
    RydbergOnly,
    /// Dephase all excited-state coherences.
    AllExcited,
}

/// Incoherent part of the master equation: cascade decay, residual
/// dephasing, and transit-time relaxation with ground-state refill.
#[derive(Debug, Clone, PartialEq)]
pub struct DissipatorSpec {
    /// Natural decay rates Γ₂..Γ_N; each level decays to the one below.
    pub decay: Vec<f64>,
    /// Residual dephasing rate Γ_d (rad/s).
    pub dephasing: f64,
    pub dephasing_mode: DephasingMode,
    /// Zero-based indices of the Rydberg levels.
    pub rydberg_levels: Vec<usize>,
    /// Transit relaxation rate γ_t = v_th/r₀ (rad/s).
    pub transit: f64,
}

impl DissipatorSpec {
    pub fn level_count(&self) -> usize {
        self.decay.len() + 1
    }

    pub fn from_table(table: &AtomicParameterTable, species: &Species, t_atom: f64) -> Self {
        let rydberg_levels = match table.architecture {
            Architecture::TwoColorFourLevel => vec![2, 3],
            Architecture::ThreeColorFiveLevel => vec![3, 4],
        };
        DissipatorSpec {
            decay: table.decay_rates.clone(),
            dephasing: table.dephasing,
            dephasing_mode: DephasingMode::RydbergOnly,
            rydberg_levels,
            transit: transit_rate(t_atom, species.mass, table.beam_radius),
        }
    }

    fn dephased_levels(&self) -> Vec<usize> {
        match self.dephasing_mode {
            DephasingMode::RydbergOnly => self.rydberg_levels.clone(),
            DephasingMode::AllExcited => (1..self.level_count()).collect(),
        }
    }
}

/// The N²×N² generator of the vectorized master equation.
#[derive(Debug, Clone, PartialEq)]
pub struct LiouvillianOperator {
    matrix: Array2<C64>,
    levels: usize,
    trace_row_replaced: bool,
}

/// Column-stacked index of the matrix element (i, j).
pub fn vec_index(levels: usize, i: usize, j: usize) -> usize {
    i + j * levels
}

/// Index of the reported probe coherence ⟨1|ρ|2⟩.
pub fn probe_coherence_index(levels: usize) -> usize {
    vec_index(levels, 0, 1)
}

impl LiouvillianOperator {
    pub fn matrix(&self) -> &Array2<C64> {
        &self.matrix
    }

    pub fn level_count(&self) -> usize {
        self.levels
    }

    pub fn is_trace_row_replaced(&self) -> bool {
        self.trace_row_replaced
    }

    /// Magnitude scale of the generator (largest entry).
    pub fn scale(&self) -> f64 {
        self.matrix
            .iter()
            .fold(0.0f64, |acc, z| acc.max(z.norm()))
            .max(f64::MIN_POSITIVE)
    }

    /// Largest column sum of |τ·L| with τ the trace functional, relative to
    /// the generator scale. Zero (to rounding) for any proper generator.
    pub fn trace_functional_defect(&self) -> f64 {
        let n = self.levels;
        let scale = self.scale();
        let mut worst = 0.0f64;
        for col in 0..n * n {
            let mut sum = C64::ZERO;
            for i in 0..n {
                sum += self.matrix[(vec_index(n, i, i), col)];
            }
            worst = worst.max(sum.norm());
        }
        worst / scale
    }

    /// Copy with the final row replaced by the trace constraint Σρ_ii = 1.
    fn trace_row_replaced_scaled(&self) -> (Array2<C64>, f64) {
        let n = self.levels;
        let scale = self.scale();
        let mut m = self.matrix.mapv(|z| z / scale);
        let last = n * n - 1;
        for col in 0..n * n {
            m[(last, col)] = C64::ZERO;
        }
        for i in 0..n {
            m[(last, vec_index(n, i, i))] = C64::from(1.0);
        }
        (m, scale)
    }
}

fn dissipator_term(l: &mut Array2<C64>, collapse: &Array2<C64>) {
    let n = collapse.nrows();
    let eye = Array2::<C64>::eye(n);
    let cdagc = collapse.t().mapv(|z| z.conj()).dot(collapse);
    let conj_c = collapse.mapv(|z| z.conj());
    *l = &*l + &kron(&conj_c, collapse);
    *l = &*l - &(kron(&eye, &cdagc).mapv(|z| z * 0.5));
    *l = &*l - &(kron(&cdagc.t().to_owned(), &eye).mapv(|z| z * 0.5));
}

/// Assemble the raw generator: coherent commutator, cascade decay,
/// dephasing, and trace-preserving transit relaxation
/// (-γ_t·ρ + γ_t·Tr(ρ)·|1⟩⟨1|).
pub fn build_liouvillian(
    hamiltonian: &HamiltonianMatrix,
    dissipator: &DissipatorSpec,
) -> Result<LiouvillianOperator, SolverError> {
    let n = hamiltonian.level_count();
    if dissipator.level_count() != n {
        return Err(SolverError::DimensionMismatch {
            hamiltonian: n,
            dissipator: dissipator.level_count(),
        });
    }
    let eye = Array2::<C64>::eye(n);
    let h = hamiltonian.matrix();
    let mut l = kron(&eye, h) - kron(&h.t().to_owned(), &eye);
    l.mapv_inplace(|z| z * C64::new(0.0, -1.0));

    // cascade decay: level m+1 decays into level m at rate decay[m]
    for (m, &gamma) in dissipator.decay.iter().enumerate() {
        if gamma == 0.0 {
            continue;
        }
        let mut c = Array2::<C64>::zeros((n, n));
        c[(m, m + 1)] = C64::from(gamma.sqrt());
        dissipator_term(&mut l, &c);
    }

    // pure dephasing as projector collapse operators
    if dissipator.dephasing > 0.0 {
        for level in dissipator.dephased_levels() {
            let mut c = Array2::<C64>::zeros((n, n));
            c[(level, level)] = C64::from((2.0 * dissipator.dephasing).sqrt());
            dissipator_term(&mut l, &c);
        }
    }

    // transit relaxation with refill proportional to the total population,
    // which keeps the trace functional in the left null space
    if dissipator.transit > 0.0 {
        let gt = dissipator.transit;
        for idx in 0..n * n {
            l[(idx, idx)] -= C64::from(gt);
        }
        let ground = vec_index(n, 0, 0);
        for i in 0..n {
            l[(ground, vec_index(n, i, i))] += C64::from(gt);
        }
    }

    Ok(LiouvillianOperator {
        matrix: l,
        levels: n,
        trace_row_replaced: false,
    })
}

/// A column-stacked density matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityVector {
    data: Array1<C64>,
    levels: usize,
}

impl DensityVector {
    pub fn levels(&self) -> usize {
        self.levels
    }

    pub fn data(&self) -> &Array1<C64> {
        &self.data
    }

    pub fn element(&self, i: usize, j: usize) -> C64 {
        self.data[vec_index(self.levels, i, j)]
    }

    pub fn population(&self, level: usize) -> f64 {
        self.element(level, level).re
    }

    /// The reported probe coherence ⟨1|ρ|2⟩ (absorption-positive).
    pub fn probe_coherence(&self) -> C64 {
        self.data[probe_coherence_index(self.levels)]
    }

    pub fn trace(&self) -> C64 {
        (0..self.levels).map(|i| self.element(i, i)).sum()
    }

    pub fn hermiticity_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.levels {
            for j in 0..self.levels {
                worst = worst.max((self.element(i, j) - self.element(j, i).conj()).norm());
            }
        }
        worst
    }

    /// Eigenvalues of the Hermitian part, ascending.
    pub fn eigenvalues(&self) -> Result<Vec<f64>, SolverError> {
        let n = self.levels;
        let mut m = Array2::<C64>::zeros((n, n));
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] = 0.5 * (self.element(i, j) + self.element(j, i).conj());
            }
        }
        let vals = m.eigvalsh(UPLO::Upper)?;
        Ok(vals.to_vec())
    }
}

const TRACE_TOL: f64 = 1e-10;
const HERMITICITY_TOL: f64 = 1e-10;
const POSITIVITY_TOL: f64 = 1e-8;
const RESIDUAL_TOL: f64 = 1e-10;
const CONDITION_LIMIT: f64 = 1e12;

fn one_norm(m: &Array2<C64>) -> f64 {
    let mut worst = 0.0f64;
    for col in m.columns() {
        worst = worst.max(col.iter().map(|z| z.norm()).sum());
    }
    worst
}

/// Unique physical steady state of a raw generator.
///
/// Solves the trace-row-replaced system with the generator normalized to
/// unit scale, estimates its condition number, and checks the residual of
/// the raw generator plus the density-matrix invariants.
pub fn steady_state(l: &LiouvillianOperator) -> Result<DensityVector, SolverError> {
    if l.trace_row_replaced {
        return Err(SolverError::AlreadyReplaced);
    }
    let n = l.levels;
    let (modified, scale) = l.trace_row_replaced_scaled();
    let inverse = modified
        .inv()
        .map_err(|_| SolverError::IllConditioned { estimate: f64::INFINITY })?;
    let condition = one_norm(&modified) * one_norm(&inverse);
    if condition > CONDITION_LIMIT {
        return Err(SolverError::IllConditioned { estimate: condition });
    }
    let mut b = Array1::<C64>::zeros(n * n);
    b[n * n - 1] = C64::from(1.0);
    let rho = modified.solve(&b)?;

    // residual of the raw generator at unit scale
    let raw_scaled = l.matrix.mapv(|z| z / scale);
    let residual = raw_scaled
        .dot(&rho)
        .iter()
        .fold(0.0f64, |acc, z| acc.max(z.norm()));
    if residual > RESIDUAL_TOL {
        return Err(SolverError::InvalidState {
            what: "generator residual",
            value: residual,
            tolerance: RESIDUAL_TOL,
        });
    }

    let state = DensityVector {
        data: rho,
        levels: n,
    };
    let trace_defect = (state.trace() - C64::from(1.0)).norm();
    if trace_defect > TRACE_TOL {
        return Err(SolverError::InvalidState {
            what: "trace",
            value: trace_defect,
            tolerance: TRACE_TOL,
        });
    }
    let herm = state.hermiticity_defect();
    if herm > HERMITICITY_TOL {
        return Err(SolverError::InvalidState {
            what: "hermiticity",
            value: herm,
            tolerance: HERMITICITY_TOL,
        });
    }
    let min_eig = state
        .eigenvalues()?
        .into_iter()
        .fold(f64::INFINITY, f64::min);
    if min_eig < -POSITIVITY_TOL {
        return Err(SolverError::InvalidState {
            what: "positivity",
            value: min_eig,
            tolerance: POSITIVITY_TOL,
        });
    }
    Ok(state)
}

/// Steady state of one velocity class at the given RF Rabi frequency.
pub fn velocity_class_steady_state(
    drive: &LadderDrive,
    geometry: &BeamGeometry,
    dissipator: &DissipatorSpec,
    v: f64,
    omega_rf: f64,
) -> Result<DensityVector, SolverError> {
    let drive = drive.clone().with_rf_rabi(omega_rf);
    let h = build_hamiltonian(&drive, v, geometry);
    let l = build_liouvillian(&h, dissipator)?;
    steady_state(&l).map_err(|source| SolverError::AtVelocity {
        velocity: v,
        source: Box::new(source),
    })
}

/// Macroscopic probe coherence: exact per-class steady states weighted over
/// the thermal velocity distribution. Classes solve in parallel; the
/// reduction is a fixed-order fold, so results are identical for any thread
/// count.
pub fn doppler_average_exact(
    drive: &LadderDrive,
    geometry: &BeamGeometry,
    dissipator: &DissipatorSpec,
    grid: &VelocityGrid,
    omega_rf: f64,
) -> Result<C64, SolverError> {
    let per_class: Result<Vec<C64>, SolverError> = grid
        .classes()
        .par_iter()
        .map(|&v| {
            velocity_class_steady_state(drive, geometry, dissipator, v, omega_rf)
                .map(|rho| rho.probe_coherence() * grid.weight(v))
        })
        .collect();
    Ok(per_class?.into_iter().sum())
}

const EIGENBASIS_CONDITION_LIMIT: f64 = 1e10;
const FALLBACK_TOLERANCE: f64 = 1e-10;

enum Propagator {
    Eigen {
        /// Row of V addressing the probe coherence.
        row: Array1<C64>,
        eigenvalues: Array1<C64>,
        /// V⁻¹ρ₀.
        coefficients: Array1<C64>,
    },
    Integrated {
        generator: Array2<C64>,
        /// (time, state) checkpoints along the adaptive solution.
        checkpoints: Vec<(f64, Array1<C64>)>,
        coherence_index: usize,
    },
}

impl Propagator {
    fn coherence_at(&self, t: f64) -> C64 {
        match self {
            Propagator::Eigen {
                row,
                eigenvalues,
                coefficients,
            } => row
                .iter()
                .zip(eigenvalues)
                .zip(coefficients)
                .map(|((v, w), c)| v * (w * t).exp() * c)
                .sum(),
            Propagator::Integrated {
                generator,
                checkpoints,
                coherence_index,
            } => {
                let (t0, state) = checkpoints
                    .iter()
                    .rev()
                    .find(|(tc, _)| *tc <= t)
                    .unwrap_or(&checkpoints[0]);
                let state = integrate_adaptive(generator, state.clone(), *t0, t, None);
                state[*coherence_index]
            }
        }
    }
}

/// One classic fourth-order Runge-Kutta step.
fn rk4_step(l: &Array2<C64>, y: &Array1<C64>, dt: f64) -> Array1<C64> {
    let k1 = l.dot(y);
    let k2 = l.dot(&(y + &(&k1 * C64::from(dt / 2.0))));
    let k3 = l.dot(&(y + &(&k2 * C64::from(dt / 2.0))));
    let k4 = l.dot(&(y + &(&k3 * C64::from(dt))));
    y + &((k1 + k2 * C64::from(2.0) + k3 * C64::from(2.0) + k4) * C64::from(dt / 6.0))
}

/// Step-doubling adaptive integration of dρ/dt = Lρ from `t0` to `t1`,
/// optionally recording accepted steps.
fn integrate_adaptive(
    l: &Array2<C64>,
    mut y: Array1<C64>,
    t0: f64,
    t1: f64,
    mut record: Option<&mut Vec<(f64, Array1<C64>)>>,
) -> Array1<C64> {
    let scale = one_norm(l).max(f64::MIN_POSITIVE);
    let mut t = t0;
    let mut dt = ((t1 - t0) / 64.0).min(0.1 / scale).max(f64::MIN_POSITIVE);
    while t < t1 {
        dt = dt.min(t1 - t);
        let full = rk4_step(l, &y, dt);
        let half = rk4_step(l, &y, dt / 2.0);
        let double = rk4_step(l, &half, dt / 2.0);
        let err: f64 = (&full - &double)
            .iter()
            .fold(0.0f64, |acc, z| acc.max(z.norm()));
        let norm = y.iter().fold(0.0f64, |acc, z| acc.max(z.norm())).max(1e-300);
        let tol = FALLBACK_TOLERANCE * norm.max(1.0);
        if err <= tol {
            // fifth-order Richardson combination of the two estimates
            y = (&double * C64::from(16.0) - &full) / C64::from(15.0);
            t += dt;
            if let Some(rec) = record.as_deref_mut() {
                rec.push((t, y.clone()));
            }
            if err < tol / 32.0 {
                dt *= 2.0;
            }
        } else {
            dt /= 2.0;
        }
    }
    y
}

/// Free-induction record of the probe coherence after the RF drive turns
/// off, with the propagator retained for root refinement.
pub struct TransientTrace {
    pub times: Vec<f64>,
    pub coherence: Vec<C64>,
    /// Driven steady-state coherence at t = 0.
    pub on: C64,
    /// Asymptotic coherence of the drive-free generator.
    pub off: C64,
    /// True when the eigenbasis was too ill-conditioned and the adaptive
    /// integrator was used instead.
    pub used_fallback: bool,
    propagator: Propagator,
}

impl TransientTrace {
    pub fn coherence_at(&self, t: f64) -> C64 {
        if t == 0.0 {
            return self.on;
        }
        self.propagator.coherence_at(t)
    }
}

/// Logarithmic time grid spanning the generator's fast and slow scales:
/// [1e-3/γ_fast, 30/γ_slow] with γ the nonzero real parts of the spectrum.
pub fn default_time_grid(l_off: &LiouvillianOperator, samples: usize) -> Result<Vec<f64>, SolverError> {
    let (eigenvalues, _) = l_off.matrix.eig()?;
    let mut fast = 0.0f64;
    let mut slow = f64::INFINITY;
    let scale = l_off.scale();
    for w in &eigenvalues {
        let rate = w.re.abs();
        if rate > 1e-12 * scale {
            fast = fast.max(rate);
            slow = slow.min(rate);
        }
    }
    if !slow.is_finite() || fast == 0.0 {
        return Err(SolverError::DegenerateThreshold);
    }
    let start = 1e-3 / fast;
    let stop = 30.0 / slow;
    let ratio = (stop / start).ln();
    Ok((0..samples)
        .map(|k| start * (ratio * k as f64 / (samples - 1) as f64).exp())
        .collect())
}

/// Propagate `rho0` under the drive-free generator and sample the probe
/// coherence at `times`.
///
/// Uses the eigendecomposition ρ(t) = V·e^{Dt}·V⁻¹ρ₀; when the eigenvector
/// matrix is close to defective (condition above 1e10) it falls back to
/// adaptive integration and flags the result.
pub fn transient_decay(
    rho0: &DensityVector,
    l_off: &LiouvillianOperator,
    times: &[f64],
) -> Result<TransientTrace, SolverError> {
    assert!(!times.is_empty());
    let n = rho0.levels();
    let on = rho0.probe_coherence();
    let off = steady_state(l_off)?.probe_coherence();
    let index = probe_coherence_index(n);

    let (eigenvalues, basis) = l_off.matrix.eig()?;
    let (propagator, used_fallback) = match basis.inv() {
        Ok(inverse) if one_norm(&basis) * one_norm(&inverse) <= EIGENBASIS_CONDITION_LIMIT => {
            let coefficients = inverse.dot(rho0.data());
            let row = basis.row(index).to_owned();
            (
                Propagator::Eigen {
                    row,
                    eigenvalues,
                    coefficients,
                },
                false,
            )
        }
        _ => {
            let mut checkpoints = vec![(0.0, rho0.data().clone())];
            let horizon = times.last().copied().unwrap();
            let final_state = integrate_adaptive(
                &l_off.matrix,
                rho0.data().clone(),
                0.0,
                horizon,
                Some(&mut checkpoints),
            );
            let _ = final_state;
            (
                Propagator::Integrated {
                    generator: l_off.matrix.clone(),
                    checkpoints,
                    coherence_index: index,
                },
                true,
            )
        }
    };

    let coherence: Vec<C64> = times
        .iter()
        .map(|&t| {
            if t == 0.0 {
                on
            } else {
                propagator.coherence_at(t)
            }
        })
        .collect();
    Ok(TransientTrace {
        times: times.to_vec(),
        coherence,
        on,
        off,
        used_fallback,
        propagator,
    })
}

/// Anything exposing a macroscopic decay curve between a driven and an
/// undriven coherence.
pub trait DecayCurve {
    fn on(&self) -> C64;
    fn off(&self) -> C64;
    fn coherence_at(&self, t: f64) -> C64;
    /// Sampled times used for bracketing the threshold.
    fn sample_times(&self) -> &[f64];
}

impl DecayCurve for TransientTrace {
    fn on(&self) -> C64 {
        self.on
    }
    fn off(&self) -> C64 {
        self.off
    }
    fn coherence_at(&self, t: f64) -> C64 {
        TransientTrace::coherence_at(self, t)
    }
    fn sample_times(&self) -> &[f64] {
        &self.times
    }
}

/// Relaxation time: the first root of
/// Im ρ(τ) = Im ρ_off + (Im ρ_on - Im ρ_off)/e,
/// bracketed on the sampled grid and refined by bisection to 1e-9 relative.
pub fn relaxation_time(curve: &impl DecayCurve) -> Result<f64, SolverError> {
    let on = curve.on().im;
    let off = curve.off().im;
    let span = on - off;
    if span.abs() < 1e-12 {
        return Err(SolverError::DegenerateThreshold);
    }
    let threshold = off + span / std::f64::consts::E;
    let excess = |t: f64| curve.coherence_at(t).im - threshold;

    let mut t_prev = 0.0;
    let mut e_prev = on - threshold;
    let mut bracket = None;
    for &t in curve.sample_times() {
        if t == 0.0 {
            continue;
        }
        let e = excess(t);
        if e_prev * e <= 0.0 {
            bracket = Some((t_prev, t, e_prev));
            break;
        }
        t_prev = t;
        e_prev = e;
    }
    let (mut lo, mut hi, mut e_lo) = bracket.ok_or(SolverError::NonBracketing)?;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let e_mid = excess(mid);
        if e_lo * e_mid <= 0.0 {
            hi = mid;
        } else {
            lo = mid;
            e_lo = e_mid;
        }
        if (hi - lo) <= 1e-9 * hi {
            break;
        }
    }
    let tau = 0.5 * (lo + hi);
    let residual = excess(tau).abs() / span.abs();
    if residual > 1e-6 {
        return Err(SolverError::InvalidState {
            what: "threshold residual",
            value: residual,
            tolerance: 1e-6,
        });
    }
    Ok(tau)
}

/// Baseband instantaneous bandwidth B = 1/(2πτ_f) (Hz).
pub fn instantaneous_bandwidth(tau_f: f64) -> f64 {
    assert!(tau_f > 0.0);
    1.0 / (std::f64::consts::TAU * tau_f)
}

/// Doppler-averaged free-induction decay: per-class transients under the
/// drive-free generator, combined with Maxwell-Boltzmann weights.
pub struct ThermalTransient {
    times: Vec<f64>,
    on: C64,
    off: C64,
    pub used_fallback: bool,
    class_traces: Vec<(f64, TransientTrace)>,
}

impl ThermalTransient {
    /// Build per-class transients for an RF turn-off experiment: initial
    /// states are steady under `omega_rf_on`, evolution is RF-free.
    pub fn new(
        drive: &LadderDrive,
        geometry: &BeamGeometry,
        dissipator: &DissipatorSpec,
        grid: &VelocityGrid,
        omega_rf_on: f64,
        samples: usize,
    ) -> Result<Self, SolverError> {
        let classes: Result<Vec<(f64, TransientTrace)>, SolverError> = grid
            .classes()
            .par_iter()
            .map(|&v| {
                let rho_on =
                    velocity_class_steady_state(drive, geometry, dissipator, v, omega_rf_on)?;
                let off_drive = drive.clone().with_rf_rabi(0.0);
                let h_off = build_hamiltonian(&off_drive, v, geometry);
                let l_off = build_liouvillian(&h_off, dissipator)?;
                let times = default_time_grid(&l_off, samples)?;
                let trace = transient_decay(&rho_on, &l_off, &times)?;
                Ok((grid.weight(v), trace))
            })
            .collect();
        let class_traces = classes?;
        let on = class_traces.iter().map(|(w, t)| t.on * *w).sum();
        let off = class_traces.iter().map(|(w, t)| t.off * *w).sum();
        let used_fallback = class_traces.iter().any(|(_, t)| t.used_fallback);
        // the widest per-class grid bounds the ensemble decay
        let times = class_traces
            .iter()
            .map(|(_, t)| t.times.clone())
            .max_by(|a, b| {
                a.last()
                    .unwrap()
                    .total_cmp(b.last().unwrap())
            })
            .expect("at least one velocity class");
        Ok(ThermalTransient {
            times,
            on,
            off,
            used_fallback,
            class_traces,
        })
    }
}

impl DecayCurve for ThermalTransient {
    fn on(&self) -> C64 {
        self.on
    }
    fn off(&self) -> C64 {
        self.off
    }
    fn coherence_at(&self, t: f64) -> C64 {
        self.class_traces
            .iter()
            .map(|(w, trace)| trace.coherence_at(t) * *w)
            .sum()
    }
    fn sample_times(&self) -> &[f64] {
        &self.times
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::{coherence_5l, BeamGeometry};
    use crate::atomdata::builtin_preset;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use std::f64::consts::TAU;

    fn empty_geometry() -> BeamGeometry {
        BeamGeometry::new(vec![852e-9, 510e-9], vec![1.0, -1.0], TAU * 5.22e6).unwrap()
    }

    fn preset_setup_5l() -> (LadderDrive, BeamGeometry, DissipatorSpec) {
        let table = builtin_preset("cs_3c5l").unwrap();
        let species = crate::atomdata::Species::cesium();
        let scheme = crate::analytic::FiveLevelScheme::from_table(&table, &species, 290.0);
        (
            LadderDrive::from_five_level(&scheme),
            BeamGeometry::from_table(&table),
            DissipatorSpec::from_table(&table, &species, 290.0),
        )
    }

    #[test]
    fn zero_drive_gives_zero_hamiltonian() {
        let drive = LadderDrive::new(vec![0.0, 0.0, 0.0], vec![0.0, 0.0, 0.0]);
        let h = build_hamiltonian(&drive, 0.0, &empty_geometry());
        assert!(h.matrix().iter().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn hamiltonian_is_hermitian_for_random_parameters() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let n = if rng.random_bool(0.5) { 4 } else { 5 };
            let rabi: Vec<f64> = (0..n - 1).map(|_| rng.random_range(0.0..1e8)).collect();
            let det: Vec<f64> = (0..n - 1)
                .map(|_| rng.random_range(-1e8..1e8))
                .collect();
            let drive = LadderDrive::new(rabi, det);
            let h = build_hamiltonian(&drive, rng.random_range(-300.0..300.0), &empty_geometry());
            assert!(h.hermiticity_defect() < 1e-14 * 1e8);
        }
    }

    #[test]
    fn diagonal_is_prefix_sum_of_shifted_detunings() {
        let (drive, geometry, _) = preset_setup_5l();
        let v = 100.0;
        let h = build_hamiltonian(&drive, v, &geometry);
        let shifts = geometry.detuning_shifts(v);
        let mut acc = 0.0;
        for level in 1..5 {
            let shift = shifts.get(level - 1).copied().unwrap_or(0.0);
            acc += drive.detuning[level - 1] - shift;
            assert_relative_eq!(h.matrix()[(level, level)].re, -acc, max_relative = 1e-14);
        }
    }

    #[test]
    fn pure_decay_relaxes_to_ground_state() {
        let drive = LadderDrive::new(vec![0.0], vec![0.0]);
        let h = build_hamiltonian(&drive, 0.0, &empty_geometry());
        let diss = DissipatorSpec {
            decay: vec![TAU * 5e6],
            dephasing: 0.0,
            dephasing_mode: DephasingMode::RydbergOnly,
            rydberg_levels: vec![],
            transit: 0.0,
        };
        let l = build_liouvillian(&h, &diss).unwrap();
        let rho = steady_state(&l).unwrap();
        assert_relative_eq!(rho.population(0), 1.0, max_relative = 1e-10);
        assert!(rho.population(1).abs() < 1e-12);
    }

    #[test]
    fn trace_functional_annihilates_random_generators() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(23);
        for _ in 0..40 {
            let n = if rng.random_bool(0.5) { 4usize } else { 5 };
            let drive = LadderDrive::new(
                (0..n - 1).map(|_| rng.random_range(0.0..1e8)).collect(),
                (0..n - 1).map(|_| rng.random_range(-1e8..1e8)).collect(),
            );
            let diss = DissipatorSpec {
                decay: (0..n - 1).map(|_| rng.random_range(1e3..1e8)).collect(),
                dephasing: rng.random_range(0.0..1e6),
                dephasing_mode: DephasingMode::RydbergOnly,
                rydberg_levels: vec![n - 2, n - 1],
                transit: rng.random_range(0.0..1e6),
            };
            let h = build_hamiltonian(&drive, rng.random_range(-200.0..200.0), &empty_geometry());
            let l = build_liouvillian(&h, &diss).unwrap();
            assert!(
                l.trace_functional_defect() < 1e-10,
                "defect {}",
                l.trace_functional_defect()
            );
        }
    }

    /// Weak probe, three-level ladder: the exact steady state reproduces the
    /// analytic transparency fraction.
    #[test]
    fn three_level_weak_probe_matches_continued_fraction() {
        let omega_p = TAU * 1e3;
        let omega_c = TAU * 5e6;
        let gamma2 = TAU * 5.22e6;
        let gamma3 = TAU * 100e3;
        let drive = LadderDrive::new(vec![omega_p, omega_c], vec![0.0, 0.0]);
        let geometry = BeamGeometry::new(vec![852e-9, 510e-9], vec![1.0, -1.0], gamma2).unwrap();
        let diss = DissipatorSpec {
            decay: vec![gamma2, gamma3],
            dephasing: 0.0,
            dephasing_mode: DephasingMode::RydbergOnly,
            rydberg_levels: vec![2],
            transit: 0.0,
        };
        let h = build_hamiltonian(&drive, 0.0, &geometry);
        let l = build_liouvillian(&h, &diss).unwrap();
        let rho = steady_state(&l).unwrap();

        let f3 = Complex64::new(-gamma3 / 2.0, 0.0);
        let f2 = Complex64::new(-gamma2 / 2.0, 0.0)
            + Complex64::from(omega_c * omega_c / 4.0) / f3;
        let analytic = (Complex64::i() * omega_p / 2.0 / f2).conj();
        let got = rho.probe_coherence();
        assert!(
            (got - analytic).norm() / analytic.norm() < 1e-3,
            "exact {got}, analytic {analytic}"
        );
    }

    #[test]
    fn weak_probe_five_level_matches_lemma_oracle() {
        let table = builtin_preset("cs_3c5l").unwrap();
        let species = crate::atomdata::Species::cesium();
        let mut scheme = crate::analytic::FiveLevelScheme::from_table(&table, &species, 290.0);
        scheme.probe.rabi = TAU * 1e3;
        let drive = LadderDrive::from_five_level(&scheme);
        let geometry = BeamGeometry::from_table(&table);
        let diss = DissipatorSpec::from_table(&table, &species, 290.0);
        let exact = velocity_class_steady_state(&drive, &geometry, &diss, 0.0, scheme.rf.rabi)
            .unwrap()
            .probe_coherence();
        let analytic = coherence_5l(&scheme);
        assert!(
            (exact - analytic).norm() / analytic.norm() < 1e-3,
            "exact {exact}, analytic {analytic}"
        );
    }

    #[test]
    fn strong_probe_depletes_ground_state() {
        let (drive, geometry, diss) = preset_setup_5l();
        let weak = {
            let d = LadderDrive::new(
                {
                    let mut r = drive.rabi.clone();
                    r[0] = TAU * 1e3;
                    r
                },
                drive.detuning.clone(),
            );
            velocity_class_steady_state(&d, &geometry, &diss, 0.0, drive.rabi[3]).unwrap()
        };
        let strong = {
            let d = LadderDrive::new(
                {
                    let mut r = drive.rabi.clone();
                    r[0] = TAU * 30e6;
                    r
                },
                drive.detuning.clone(),
            );
            velocity_class_steady_state(&d, &geometry, &diss, 0.0, drive.rabi[3]).unwrap()
        };
        assert!(weak.population(0) > 0.999);
        assert!(strong.population(0) < weak.population(0));
        assert!(strong.population(0) < 0.99);
    }

    #[test]
    fn doppler_grid_convergence() {
        let (drive, geometry, diss) = preset_setup_5l();
        let mass = crate::atomdata::Species::cesium().mass;
        let omega_rf = drive.rabi[3];
        let coarse = VelocityGrid::for_temperature(290.0, mass, 301).unwrap();
        let fine = VelocityGrid::for_temperature(290.0, mass, 601).unwrap();
        let a = doppler_average_exact(&drive, &geometry, &diss, &coarse, omega_rf).unwrap();
        let b = doppler_average_exact(&drive, &geometry, &diss, &fine, omega_rf).unwrap();
        assert!(
            (a - b).norm() / b.norm() < 1e-4,
            "coarse {a}, fine {b}, rel {}",
            (a - b).norm() / b.norm()
        );
    }

    #[test]
    fn parallel_and_serial_reductions_agree_bitwise() {
        let (drive, geometry, diss) = preset_setup_5l();
        let mass = crate::atomdata::Species::cesium().mass;
        let grid = VelocityGrid::for_temperature(290.0, mass, 61).unwrap();
        let omega_rf = drive.rabi[3];
        let parallel = doppler_average_exact(&drive, &geometry, &diss, &grid, omega_rf).unwrap();
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap();
        let serial = pool
            .install(|| doppler_average_exact(&drive, &geometry, &diss, &grid, omega_rf))
            .unwrap();
        assert_eq!(parallel, serial);
    }

    fn two_level_decay_setup(delta: f64, gamma: f64) -> (DensityVector, LiouvillianOperator) {
        // driven two-level steady state as the initial condition
        let drive_on = LadderDrive::new(vec![TAU * 50e3], vec![delta]);
        let geometry = BeamGeometry::new(vec![852e-9, 852e-9], vec![1.0, -1.0], gamma).unwrap();
        let diss = DissipatorSpec {
            decay: vec![gamma],
            dephasing: 0.0,
            dephasing_mode: DephasingMode::RydbergOnly,
            rydberg_levels: vec![],
            transit: 0.0,
        };
        let h_on = build_hamiltonian(&drive_on, 0.0, &geometry);
        let l_on = build_liouvillian(&h_on, &diss).unwrap();
        let rho0 = steady_state(&l_on).unwrap();
        let drive_off = LadderDrive::new(vec![0.0], vec![delta]);
        let h_off = build_hamiltonian(&drive_off, 0.0, &geometry);
        let l_off = build_liouvillian(&h_off, &diss).unwrap();
        (rho0, l_off)
    }

    /// With the drive off, an isolated coherence evolves as
    /// ρ₁₂(t) = ρ₁₂(0)·e^{(iΔ-Γ/2)t} in the reported convention.
    #[test]
    fn two_level_transient_matches_closed_form() {
        let gamma = TAU * 5e6;
        let delta = TAU * 1e6;
        let (rho0, l_off) = two_level_decay_setup(delta, gamma);
        let times: Vec<f64> = (1..=20).map(|k| k as f64 * 2e-8).collect();
        let trace = transient_decay(&rho0, &l_off, &times).unwrap();
        assert!(!trace.used_fallback);
        let c0 = rho0.probe_coherence();
        for (&t, &c) in trace.times.iter().zip(&trace.coherence) {
            let expected = c0 * (Complex64::new(-gamma / 2.0, delta) * t).exp();
            assert!(
                (c - expected).norm() <= 1e-10 * c0.norm().max(1e-30),
                "t = {t}: {c} vs {expected}"
            );
        }
    }

    #[test]
    fn transient_first_sample_is_initial_coherence() {
        let (rho0, l_off) = two_level_decay_setup(0.0, TAU * 5e6);
        let times = vec![0.0, 1e-8, 1e-7];
        let trace = transient_decay(&rho0, &l_off, &times).unwrap();
        assert_eq!(trace.coherence[0], rho0.probe_coherence());
    }

    #[test]
    fn transient_converges_to_rf_off_steady_state() {
        let (drive, geometry, diss) = preset_setup_5l();
        let rho_on =
            velocity_class_steady_state(&drive, &geometry, &diss, 0.0, drive.rabi[3]).unwrap();
        let off_drive = drive.clone().with_rf_rabi(0.0);
        let h_off = build_hamiltonian(&off_drive, 0.0, &geometry);
        let l_off = build_liouvillian(&h_off, &diss).unwrap();
        let times = default_time_grid(&l_off, 400).unwrap();
        let trace = transient_decay(&rho_on, &l_off, &times).unwrap();
        let last = *trace.coherence.last().unwrap();
        assert!(
            (last - trace.off).norm() <= 1e-8 * trace.off.norm().max(1.0),
            "last {last}, off {}",
            trace.off
        );
    }

    /// The eigendecomposition propagation agrees with the adaptive
    /// integrator on a three-level system.
    #[test]
    fn eigen_and_integrator_routes_agree() {
        let gamma2 = TAU * 5e6;
        let drive_on = LadderDrive::new(vec![TAU * 500e3, TAU * 2e6], vec![0.0, 0.0]);
        let geometry = BeamGeometry::new(vec![852e-9, 510e-9], vec![1.0, -1.0], gamma2).unwrap();
        let diss = DissipatorSpec {
            decay: vec![gamma2, TAU * 50e3],
            dephasing: 0.0,
            dephasing_mode: DephasingMode::RydbergOnly,
            rydberg_levels: vec![2],
            transit: 0.0,
        };
        let h_on = build_hamiltonian(&drive_on, 0.0, &geometry);
        let rho0 = steady_state(&build_liouvillian(&h_on, &diss).unwrap()).unwrap();
        let drive_off = LadderDrive::new(vec![TAU * 500e3, 0.0], vec![0.0, 0.0]);
        let l_off =
            build_liouvillian(&build_hamiltonian(&drive_off, 0.0, &geometry), &diss).unwrap();

        let times: Vec<f64> = (1..=10).map(|k| k as f64 * 3e-8).collect();
        let eigen = transient_decay(&rho0, &l_off, &times).unwrap();
        assert!(!eigen.used_fallback);
        for (&t, &c) in times.iter().zip(&eigen.coherence) {
            let integrated = integrate_adaptive(l_off.matrix(), rho0.data().clone(), 0.0, t, None);
            let direct = integrated[probe_coherence_index(3)];
            assert!(
                (c - direct).norm() < 1e-8,
                "t = {t}: eigen {c}, integrator {direct}"
            );
        }
    }

    #[test]
    fn relaxation_time_of_pure_exponential() {
        let gamma = TAU * 5e6;
        let (rho0, l_off) = two_level_decay_setup(0.0, gamma);
        let times = default_time_grid(&l_off, 300).unwrap();
        let trace = transient_decay(&rho0, &l_off, &times).unwrap();
        // off coherence is zero: Im ρ(τ) = Im ρ(0)/e at τ = 2/Γ for the
        // coherence decay rate Γ/2
        let tau = relaxation_time(&trace).unwrap();
        assert_relative_eq!(tau, 2.0 / gamma, max_relative = 1e-9);
        assert_relative_eq!(
            instantaneous_bandwidth(tau),
            gamma / (2.0 * std::f64::consts::TAU),
            max_relative = 1e-9
        );
    }

    #[test]
    fn relaxation_time_requires_distinct_endpoints() {
        let (rho0, l_off) = two_level_decay_setup(0.0, TAU * 5e6);
        let times = vec![1e-9, 2e-9];
        let mut trace = transient_decay(&rho0, &l_off, &times).unwrap();
        trace.off = trace.on;
        assert!(matches!(
            relaxation_time(&trace),
            Err(SolverError::DegenerateThreshold)
        ));
    }

    #[test]
    fn relaxation_time_reports_short_window() {
        let gamma = TAU * 5e6;
        let (rho0, l_off) = two_level_decay_setup(0.0, gamma);
        // window far shorter than the 1/e time
        let times = vec![1e-12, 2e-12, 3e-12];
        let trace = transient_decay(&rho0, &l_off, &times).unwrap();
        assert!(matches!(
            relaxation_time(&trace),
            Err(SolverError::NonBracketing)
        ));
    }

    #[test]
    fn bandwidth_halves_when_relaxation_doubles() {
        assert_relative_eq!(
            instantaneous_bandwidth(2e-6),
            instantaneous_bandwidth(1e-6) / 2.0,
            max_relative = 1e-12
        );
    }

    #[test]
    fn steady_state_rejects_replaced_generator() {
        let (drive, geometry, diss) = preset_setup_5l();
        let h = build_hamiltonian(&drive, 0.0, &geometry);
        let l = build_liouvillian(&h, &diss).unwrap();
        let mut replaced = l.clone();
        replaced.trace_row_replaced = true;
        assert!(matches!(
            steady_state(&replaced),
            Err(SolverError::AlreadyReplaced)
        ));
    }
}
