//! Closed-form weak-probe coherences, susceptibility, transconductance, and
//! linewidth budgets for the two ladder architectures.
//!
//! All rates, Rabi frequencies and detunings are angular (rad/s). Reported
//! coherences use the convention where a positive imaginary part means probe
//! absorption, so probe transmission is `exp(-(2πd/λ_p)·Im χ)`.
//!
//! The closed forms assume a weak probe (ground-state population ≈ 1).
//! Staying inside that regime is the caller's responsibility; the exact
//! engine in [`crate::liouvillian`] covers strong probes.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::atomdata::{Architecture, AtomicParameterTable, Species};
use crate::constants::{BOLTZMANN, HBAR, VACUUM_PERMITTIVITY};
use crate::receiver::{field_from_beam_power, rabi_from_field};
use crate::thermal::{transit_rate, VelocityGrid};

/// One driven ladder rung: coupling strength and detuning from resonance.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Drive {
    /// Rabi frequency (rad/s), real and non-negative.
    pub rabi: f64,
    /// Detuning of the driving field from its transition (rad/s).
    pub detuning: f64,
}

impl Drive {
    pub fn resonant(rabi: f64) -> Self {
        Drive { rabi, detuning: 0.0 }
    }
}

/// Invalid ladder construction.
#[derive(Debug, thiserror::Error)]
pub enum LadderError {
    #[error("coherence decay rate {name} must be positive, got {value}")]
    NonPositiveDecay { name: &'static str, value: f64 },
    #[error("beam geometry needs at least two beams")]
    TooFewBeams,
    #[error("beam geometry has {wavelengths} wavelengths but {signs} signs")]
    MismatchedBeams { wavelengths: usize, signs: usize },
}

fn check_decay(name: &'static str, value: f64) -> Result<f64, LadderError> {
    if value > 0.0 && value.is_finite() {
        Ok(value)
    } else {
        Err(LadderError::NonPositiveDecay { name, value })
    }
}

/// Four-level ladder driven by probe and coupling lasers plus an RF field.
///
/// `gamma_n1` are the total coherence decay rates between level n and the
/// ground state, including transit and dephasing contributions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FourLevelScheme {
    pub probe: Drive,
    pub coupling: Drive,
    pub rf: Drive,
    pub gamma_21: f64,
    pub gamma_31: f64,
    pub gamma_41: f64,
}

/// Five-level ladder driven by probe, dressing and coupling lasers plus an
/// RF field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FiveLevelScheme {
    pub probe: Drive,
    pub dressing: Drive,
    pub coupling: Drive,
    pub rf: Drive,
    pub gamma_21: f64,
    pub gamma_31: f64,
    pub gamma_41: f64,
    pub gamma_51: f64,
}

impl FourLevelScheme {
    pub fn new(
        probe: Drive,
        coupling: Drive,
        rf: Drive,
        gamma_21: f64,
        gamma_31: f64,
        gamma_41: f64,
    ) -> Result<Self, LadderError> {
        Ok(FourLevelScheme {
            probe,
            coupling,
            rf,
            gamma_21: check_decay("gamma_21", gamma_21)?,
            gamma_31: check_decay("gamma_31", gamma_31)?,
            gamma_41: check_decay("gamma_41", gamma_41)?,
        })
    }

    /// Resonant scheme from a parameter table at vapor temperature `t_atom`.
    ///
    /// Rabi frequencies come from the tabulated beam powers, the RF drive is
    /// biased at the tabulated LO field, and the coherence decay rates pick
    /// up the transit rate plus residual dephasing on the Rydberg levels.
    pub fn from_table(table: &AtomicParameterTable, species: &Species, t_atom: f64) -> Self {
        assert_eq!(table.architecture, Architecture::TwoColorFourLevel);
        let gt = transit_rate(t_atom, species.mass, table.beam_radius);
        let rabi = |i: usize| {
            rabi_from_field(
                table.dipole_moments[i],
                field_from_beam_power(table.beam_powers[i], table.beam_radius),
            )
        };
        FourLevelScheme {
            probe: Drive::resonant(rabi(0)),
            coupling: Drive::resonant(rabi(1)),
            rf: Drive::resonant(rabi_from_field(table.rf_dipole(), table.lo_field)),
            gamma_21: table.decay_rates[0] / 2.0 + gt,
            gamma_31: table.decay_rates[1] / 2.0 + gt + table.dephasing,
            gamma_41: table.decay_rates[2] / 2.0 + gt + table.dephasing,
        }
    }

    /// Copy with the laser detunings shifted for an atom moving at
    /// longitudinal velocity `v`. The RF wavelength is centimeter scale, so
    /// its Doppler shift is neglected.
    pub fn doppler_shifted(&self, geometry: &BeamGeometry, v: f64) -> Self {
        let shifts = geometry.detuning_shifts(v);
        let mut out = *self;
        out.probe.detuning -= shifts[0];
        out.coupling.detuning -= shifts[1];
        out
    }
}

impl FiveLevelScheme {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        probe: Drive,
        dressing: Drive,
        coupling: Drive,
        rf: Drive,
        gamma_21: f64,
        gamma_31: f64,
        gamma_41: f64,
        gamma_51: f64,
    ) -> Result<Self, LadderError> {
        Ok(FiveLevelScheme {
            probe,
            dressing,
            coupling,
            rf,
            gamma_21: check_decay("gamma_21", gamma_21)?,
            gamma_31: check_decay("gamma_31", gamma_31)?,
            gamma_41: check_decay("gamma_41", gamma_41)?,
            gamma_51: check_decay("gamma_51", gamma_51)?,
        })
    }

    pub fn from_table(table: &AtomicParameterTable, species: &Species, t_atom: f64) -> Self {
        assert_eq!(table.architecture, Architecture::ThreeColorFiveLevel);
        let gt = transit_rate(t_atom, species.mass, table.beam_radius);
        let rabi = |i: usize| {
            rabi_from_field(
                table.dipole_moments[i],
                field_from_beam_power(table.beam_powers[i], table.beam_radius),
            )
        };
        FiveLevelScheme {
            probe: Drive::resonant(rabi(0)),
            dressing: Drive::resonant(rabi(1)),
            coupling: Drive::resonant(rabi(2)),
            rf: Drive::resonant(rabi_from_field(table.rf_dipole(), table.lo_field)),
            gamma_21: table.decay_rates[0] / 2.0 + gt,
            gamma_31: table.decay_rates[1] / 2.0 + gt,
            gamma_41: table.decay_rates[2] / 2.0 + gt + table.dephasing,
            gamma_51: table.decay_rates[3] / 2.0 + gt + table.dephasing,
        }
    }

    pub fn doppler_shifted(&self, geometry: &BeamGeometry, v: f64) -> Self {
        let shifts = geometry.detuning_shifts(v);
        let mut out = *self;
        out.probe.detuning -= shifts[0];
        out.dressing.detuning -= shifts[1];
        out.coupling.detuning -= shifts[2];
        out
    }
}

/// Optical beam layout along the probe axis, used for Doppler shifts and the
/// residual Doppler linewidth.
#[derive(Debug, Clone, PartialEq)]
pub struct BeamGeometry {
    /// Laser wavelengths, probe first (m).
    pub wavelengths: Vec<f64>,
    /// Propagation signs: +1 along the probe axis, -1 against it.
    pub signs: Vec<f64>,
    /// Decay rate of the first excited state Γ₂ (rad/s).
    pub gamma_2: f64,
}

impl BeamGeometry {
    pub fn new(wavelengths: Vec<f64>, signs: Vec<f64>, gamma_2: f64) -> Result<Self, LadderError> {
        if wavelengths.len() < 2 {
            return Err(LadderError::TooFewBeams);
        }
        if wavelengths.len() != signs.len() {
            return Err(LadderError::MismatchedBeams {
                wavelengths: wavelengths.len(),
                signs: signs.len(),
            });
        }
        Ok(BeamGeometry {
            wavelengths,
            signs,
            gamma_2,
        })
    }

    pub fn from_table(table: &AtomicParameterTable) -> Self {
        BeamGeometry {
            wavelengths: table.wavelengths.clone(),
            signs: table.propagation_signs.clone(),
            gamma_2: table.decay_rates[0],
        }
    }

    /// Signed wavenumbers s_j·k_j (rad/m).
    pub fn signed_wavenumbers(&self) -> Vec<f64> {
        self.wavelengths
            .iter()
            .zip(&self.signs)
            .map(|(&lam, &s)| s * std::f64::consts::TAU / lam)
            .collect()
    }

    /// Per-beam Doppler detuning shifts s_j·k_j·v (rad/s) seen by an atom at
    /// longitudinal velocity v.
    pub fn detuning_shifts(&self, v: f64) -> Vec<f64> {
        self.signed_wavenumbers().iter().map(|k| k * v).collect()
    }
}

/// Residual Doppler linewidth Γ_Res = (Γ₂/k_p)·|Σ_j s_j·k_j| (rad/s): the
/// broadening left after imperfect wavevector cancellation.
pub fn residual_doppler_linewidth(geometry: &BeamGeometry) -> f64 {
    let ks = geometry.signed_wavenumbers();
    let k_probe = ks[0].abs();
    let mismatch: f64 = ks.iter().sum();
    geometry.gamma_2 / k_probe * mismatch.abs()
}

/// Constants converting a probe coherence into a bulk susceptibility.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SusceptibilityContext {
    /// Atom number density (m⁻³).
    pub atom_density: f64,
    /// Probe transition dipole moment μ₁₂ (C·m).
    pub probe_dipole: f64,
    /// Probe Rabi frequency (rad/s).
    pub probe_rabi: f64,
}

impl SusceptibilityContext {
    pub fn from_table(table: &AtomicParameterTable) -> Self {
        SusceptibilityContext {
            atom_density: table.atom_density,
            probe_dipole: table.dipole_moments[0],
            probe_rabi: rabi_from_field(
                table.dipole_moments[0],
                field_from_beam_power(table.beam_powers[0], table.beam_radius),
            ),
        }
    }

    /// K = N_a|μ₁₂|²/(ε₀ħΩ_p).
    pub fn prefactor(&self) -> f64 {
        self.atom_density * self.probe_dipole * self.probe_dipole
            / (VACUUM_PERMITTIVITY * HBAR * self.probe_rabi)
    }
}

/// Bulk susceptibility χ = K·ρ₂₁.
pub fn susceptibility(coherence: Complex64, ctx: &SusceptibilityContext) -> Complex64 {
    ctx.prefactor() * coherence
}

fn fraction_term(detuning: f64, gamma: f64, inner: Complex64) -> Complex64 {
    Complex64::new(-gamma, detuning) + inner
}

/// Nested denominators of the four-level continued fraction, innermost last,
/// evaluated at RF Rabi frequency `rf_rabi`.
fn denominators_4l(s: &FourLevelScheme, rf_rabi: f64) -> [Complex64; 3] {
    let d2 = s.probe.detuning;
    let d3 = d2 + s.coupling.detuning;
    let d4 = d3 + s.rf.detuning;
    let f4 = fraction_term(d4, s.gamma_41, Complex64::ZERO);
    let f3 = fraction_term(d3, s.gamma_31, Complex64::from(rf_rabi * rf_rabi / 4.0) / f4);
    let f2 = fraction_term(
        d2,
        s.gamma_21,
        Complex64::from(s.coupling.rabi * s.coupling.rabi / 4.0) / f3,
    );
    [f2, f3, f4]
}

fn denominators_5l(s: &FiveLevelScheme, rf_rabi: f64) -> [Complex64; 4] {
    let d2 = s.probe.detuning;
    let d3 = d2 + s.dressing.detuning;
    let d4 = d3 + s.coupling.detuning;
    let d5 = d4 + s.rf.detuning;
    let f5 = fraction_term(d5, s.gamma_51, Complex64::ZERO);
    let f4 = fraction_term(d4, s.gamma_41, Complex64::from(rf_rabi * rf_rabi / 4.0) / f5);
    let f3 = fraction_term(
        d4 - s.coupling.detuning,
        s.gamma_31,
        Complex64::from(s.coupling.rabi * s.coupling.rabi / 4.0) / f4,
    );
    let f2 = fraction_term(
        d2,
        s.gamma_21,
        Complex64::from(s.dressing.rabi * s.dressing.rabi / 4.0) / f3,
    );
    [f2, f3, f4, f5]
}

/// Steady-state weak-probe coherence of the four-level ladder.
///
/// Continued fraction ρ₂₁ = (iΩ_p/2)/(f₂) with nearest-neighbour couplings
/// nested in f₂..f₄, reported in the absorption-positive convention.
pub fn coherence_4l(scheme: &FourLevelScheme) -> Complex64 {
    let [f2, ..] = denominators_4l(scheme, scheme.rf.rabi);
    (Complex64::i() * scheme.probe.rabi / 2.0 / f2).conj()
}

/// Steady-state weak-probe coherence of the five-level ladder.
///
/// With the RF drive off, the innermost fraction vanishes and the value
/// reduces to the four-deep fraction of the dressed ladder.
pub fn coherence_5l(scheme: &FiveLevelScheme) -> Complex64 {
    let [f2, ..] = denominators_5l(scheme, scheme.rf.rabi);
    (Complex64::i() * scheme.probe.rabi / 2.0 / f2).conj()
}

/// Macroscopic coherence: the stationary-atom value weighted over the
/// Maxwell-Boltzmann velocity classes of `grid`.
///
/// Logs a warning when the quadrature weight sum strays from erf(3) by more
/// than 1e-3 (under-resolved grid).
pub fn doppler_averaged_coherence_4l(
    scheme: &FourLevelScheme,
    geometry: &BeamGeometry,
    grid: &VelocityGrid,
) -> Complex64 {
    warn_on_bad_weights(grid);
    grid.classes()
        .iter()
        .map(|&v| grid.weight(v) * coherence_4l(&scheme.doppler_shifted(geometry, v)))
        .sum()
}

pub fn doppler_averaged_coherence_5l(
    scheme: &FiveLevelScheme,
    geometry: &BeamGeometry,
    grid: &VelocityGrid,
) -> Complex64 {
    warn_on_bad_weights(grid);
    grid.classes()
        .iter()
        .map(|&v| grid.weight(v) * coherence_5l(&scheme.doppler_shifted(geometry, v)))
        .sum()
}

fn warn_on_bad_weights(grid: &VelocityGrid) {
    let sum = grid.weight_sum();
    if (sum - VelocityGrid::expected_weight_sum()).abs() > 1e-3 {
        log::warn!(
            "velocity grid weight sum {sum} deviates from erf(3); increase the class count"
        );
    }
}

/// Atomic transconductance χ'_s = ∂χ/∂Ω_RF of the four-level ladder at a
/// real LO bias Ω_LO.
pub fn transconductance_4l(
    scheme: &FourLevelScheme,
    ctx: &SusceptibilityContext,
    omega_lo: f64,
) -> Complex64 {
    let [f2, f3, f4] = denominators_4l(scheme, omega_lo);
    let op = scheme.probe.rabi;
    let oc2 = scheme.coupling.rabi * scheme.coupling.rabi;
    let drho = (Complex64::i() * op / 2.0) * (oc2 / 4.0) / (f2 * f2 * f3 * f3 * f4);
    (ctx.prefactor() * omega_lo / 2.0 * drho).conj()
}

/// Atomic transconductance of the five-level ladder at a real LO bias.
pub fn transconductance_5l(
    scheme: &FiveLevelScheme,
    ctx: &SusceptibilityContext,
    omega_lo: f64,
) -> Complex64 {
    let [f2, f3, f4, f5] = denominators_5l(scheme, omega_lo);
    let op = scheme.probe.rabi;
    let od2 = scheme.dressing.rabi * scheme.dressing.rabi;
    let oc2 = scheme.coupling.rabi * scheme.coupling.rabi;
    let drho = -(Complex64::i() * op / 2.0) * (od2 / 4.0) * (oc2 / 4.0)
        / (f2 * f2 * f3 * f3 * f4 * f4 * f5);
    (ctx.prefactor() * omega_lo / 2.0 * drho).conj()
}

/// Doppler-averaged transconductance of the four-level ladder.
pub fn doppler_averaged_transconductance_4l(
    scheme: &FourLevelScheme,
    geometry: &BeamGeometry,
    ctx: &SusceptibilityContext,
    grid: &VelocityGrid,
    omega_lo: f64,
) -> Complex64 {
    grid.classes()
        .iter()
        .map(|&v| {
            grid.weight(v)
                * transconductance_4l(&scheme.doppler_shifted(geometry, v), ctx, omega_lo)
        })
        .sum()
}

pub fn doppler_averaged_transconductance_5l(
    scheme: &FiveLevelScheme,
    geometry: &BeamGeometry,
    ctx: &SusceptibilityContext,
    grid: &VelocityGrid,
    omega_lo: f64,
) -> Complex64 {
    grid.classes()
        .iter()
        .map(|&v| {
            grid.weight(v)
                * transconductance_5l(&scheme.doppler_shifted(geometry, v), ctx, omega_lo)
        })
        .sum()
}

/// Black-body decoherence rate 4α³k_B·T_env/(3n_eff²ħ) (rad/s) broadening a
/// Rydberg level at environment temperature `t_env`.
pub fn bbr_decoherence(t_env: f64, n_effective: f64, species: &Species) -> f64 {
    let alpha = species.fine_structure_constant;
    4.0 * alpha.powi(3) * BOLTZMANN * t_env / (3.0 * n_effective * n_effective * HBAR)
}

/// The additive pieces of the EIT linewidth budget.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinewidthComponents {
    /// Residual Doppler broadening (rad/s).
    pub residual_doppler: f64,
    /// Natural decay rate of the sensing Rydberg level (rad/s).
    pub rydberg_natural: f64,
    /// Black-body decoherence rate (rad/s).
    pub blackbody: f64,
    /// Power-broadening term Ω_AT = |Ω_c|² + |Ω_LO|² ((rad/s)²).
    pub power_broadening: f64,
    /// First-excited-state decay Γ₂ (rad/s) dividing the power term.
    pub gamma_2: f64,
    /// Transit broadening v_th/r₀ (rad/s).
    pub transit: f64,
    /// Residual dephasing Γ_d (rad/s).
    pub dephasing: f64,
}

impl LinewidthComponents {
    /// Full budget for a parameter table: vapor at `t_atom`, environment at
    /// `t_env`, RF LO bias `omega_lo`.
    pub fn from_table(
        table: &AtomicParameterTable,
        species: &Species,
        t_atom: f64,
        t_env: f64,
        omega_lo: f64,
    ) -> Self {
        let geometry = BeamGeometry::from_table(table);
        let coupling_index = table.wavelengths.len() - 1;
        let coupling_rabi = rabi_from_field(
            table.dipole_moments[coupling_index],
            field_from_beam_power(table.beam_powers[coupling_index], table.beam_radius),
        );
        // The sensing Rydberg level is the one the RF field couples from.
        let rydberg_natural = match table.architecture {
            Architecture::TwoColorFourLevel => table.decay_rates[1],
            Architecture::ThreeColorFiveLevel => table.decay_rates[2],
        };
        LinewidthComponents {
            residual_doppler: residual_doppler_linewidth(&geometry),
            rydberg_natural,
            blackbody: bbr_decoherence(t_env, table.n_effective, species),
            power_broadening: coupling_rabi * coupling_rabi + omega_lo * omega_lo,
            gamma_2: table.decay_rates[0],
            transit: transit_rate(t_atom, species.mass, table.beam_radius),
            dephasing: table.dephasing,
        }
    }
}

/// EIT linewidth Γ_EIT = Γ_Res + (Γ_Ryd + Γ_BBR)/2 + Ω_AT/Γ₂ + v_th/r₀ + Γ_d.
pub fn eit_linewidth(c: &LinewidthComponents) -> f64 {
    c.residual_doppler
        + (c.rydberg_natural + c.blackbody) / 2.0
        + c.power_broadening / c.gamma_2
        + c.transit
        + c.dephasing
}
