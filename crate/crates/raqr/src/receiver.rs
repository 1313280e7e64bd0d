//! Superheterodyne optical readout: probe modulation by the atomic
//! susceptibility, balanced coherent detection, the equivalent baseband
//! transfer function, and the receiver noise budget.
//!
//! The signal path: a weak RF field beats against a strong RF local
//! oscillator at the intermediate frequency; the atoms convert that beat
//! into amplitude and phase modulation of the optical probe; a balanced
//! detector mixing the probe with an optical local oscillator turns the
//! modulation into a baseband voltage.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::constants::{
    BOLTZMANN, ELEMENTARY_CHARGE, FREE_SPACE_IMPEDANCE, HBAR, SPEED_OF_LIGHT,
    VACUUM_PERMITTIVITY,
};

/// Rabi frequency Ω = μE/ħ (rad/s) of a field of amplitude `field` (V/m)
/// driving a transition with dipole moment `dipole` (C·m).
pub fn rabi_from_field(dipole: f64, field: f64) -> f64 {
    dipole * field / HBAR
}

/// Peak field amplitude of a Gaussian beam of total power `power` and 1/e²
/// radius `radius`: E = √(2I₀/(cε₀)) with on-axis intensity I₀ = 2P/(πr₀²).
///
/// This is the conversion convention used for every tabulated beam power.
pub fn field_from_beam_power(power: f64, radius: f64) -> f64 {
    let peak_intensity = 2.0 * power / (std::f64::consts::PI * radius * radius);
    (2.0 * peak_intensity / (SPEED_OF_LIGHT * VACUUM_PERMITTIVITY)).sqrt()
}

/// The optical probe entering the cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbeBeam {
    /// Input power P₀ (W).
    pub power: f64,
    /// Wavelength λ_p (m).
    pub wavelength: f64,
    /// Initial optical phase φ₀ (rad).
    pub phase: f64,
    /// 1/e² beam radius r₀ (m).
    pub radius: f64,
}

/// The vapor cell the probe traverses.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VaporCell {
    /// Length d (m).
    pub length: f64,
    /// Atom density N_a (m⁻³).
    pub atom_density: f64,
    /// Vapor temperature (K).
    pub temperature: f64,
}

/// RF signal and local-oscillator drive seen by the Rydberg transition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RfFields {
    /// LO Rabi frequency Ω_LO (rad/s).
    pub lo_rabi: f64,
    /// Signal Rabi amplitude Ω_x (rad/s).
    pub signal_rabi: f64,
    /// Intermediate frequency f_δ (Hz).
    pub if_frequency: f64,
    /// IF phase θ_δ (rad).
    pub if_phase: f64,
    /// LO phase θ_y (rad).
    pub lo_phase: f64,
    /// Dipole moment of the RF transition (C·m).
    pub coupling_dipole: f64,
}

impl RfFields {
    /// Signal field amplitude U_x = ħΩ_x/μ (V/m).
    pub fn signal_field(&self) -> f64 {
        HBAR * self.signal_rabi / self.coupling_dipole
    }
}

/// Photodetection chain: balanced photodiodes, transimpedance stage and
/// low-noise amplifier.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectorChain {
    /// Photodetector responsivity α (A/W), in (0, 1].
    pub responsivity: f64,
    /// Amplifier power gain G_PD.
    pub amplifier_gain: f64,
    /// Load impedance (Ω); unity by convention, exposed as a knob.
    pub load: f64,
    /// Optical LO power P_l (W).
    pub lo_power: f64,
    /// Optical LO phase φ_l; `None` locks the phase for maximum signal.
    pub lo_phase: Option<f64>,
    /// Detector noise temperature T_PD (K).
    pub noise_temperature: f64,
}

/// Probe power and phase after the cell for a given bulk susceptibility:
/// P₁ = P₀·exp(-(2πd/λ_p)·Im χ), φ_p = φ₀ + (πd/λ_p)·Re χ.
pub fn probe_output(chi: Complex64, cell: &VaporCell, probe: &ProbeBeam) -> (f64, f64) {
    let tau_d = std::f64::consts::TAU * cell.length / probe.wavelength;
    let power = probe.power * (-tau_d * chi.im).exp();
    let phase = probe.phase + tau_d / 2.0 * chi.re;
    (power, phase)
}

/// Linearized AC voltage at the intermediate frequency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AcVoltage {
    /// Field-to-optical gain κ₁ = (πdμ/λ_pħ)|χ'_s| ((V/m)⁻¹).
    pub kappa1: f64,
    /// Total atomic-optical phase φ₁ = φ_l - φ_p(Ω_LO) - ψ_p (rad).
    pub phi1: f64,
    /// Phase of the transconductance ψ_p = arg(χ'_s) (rad).
    pub psi_p: f64,
    /// Voltage amplitude of the IF beat (V).
    pub amplitude: f64,
}

fn lock_or(phase: Option<f64>, probe_phase: f64, psi_p: f64) -> f64 {
    // Locked LO phase puts phi1 at quadrature, sin(phi1) = 1.
    phase.unwrap_or(std::f64::consts::FRAC_PI_2 + probe_phase + psi_p)
}

/// The demodulated AC component of the balanced-detector voltage.
///
/// `chi_prime` is the transconductance at the LO bias and `chi_lo` the
/// susceptibility at the same bias; both must come from the same backend so
/// attenuation and slope refer to one operating point.
pub fn ac_voltage(
    chi_prime: Complex64,
    fields: &RfFields,
    chain: &DetectorChain,
    cell: &VaporCell,
    probe: &ProbeBeam,
    chi_lo: Complex64,
) -> AcVoltage {
    let (p1, probe_phase) = probe_output(chi_lo, cell, probe);
    let kappa1 = std::f64::consts::PI * cell.length * fields.coupling_dipole
        / (probe.wavelength * HBAR)
        * chi_prime.norm();
    let psi_p = chi_prime.arg();
    let phi_l = lock_or(chain.lo_phase, probe_phase, psi_p);
    let phi1 = phi_l - probe_phase - psi_p;
    let amplitude = 2.0
        * chain.responsivity
        * (chain.amplifier_gain * chain.lo_power * p1).sqrt()
        * kappa1
        * phi1.sin()
        * fields.signal_field();
    AcVoltage {
        kappa1,
        phi1,
        psi_p,
        amplitude,
    }
}

/// The equivalent complex baseband model of the whole receiver.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BasebandTransfer {
    /// Field-to-optical gain κ₁ ((V/m)⁻¹).
    pub kappa1: f64,
    /// Atomic-optical phase φ₁ (rad).
    pub phi1: f64,
    /// Effective power gain β = 4α²G_PD·Z₀·P_l·P₁(Ω_LO)·κ₁²·sin²φ₁.
    pub beta: f64,
    /// Unit-modulus phase response Φ = e^{-iθ_y}.
    pub phase_response: Complex64,
    /// Optoelectronic conversion aggregate κ₂, with β = κ₂|χ'_s|².
    pub kappa2: f64,
    /// Equivalent aperture A_e (m²); cancels out of the end-to-end model.
    pub aperture: f64,
    /// Free-space impedance Z₀ (Ω).
    pub impedance: f64,
}

impl BasebandTransfer {
    /// Baseband transfer function H = √β·Φ/√A_e.
    pub fn transfer_function(&self) -> Complex64 {
        (self.beta.sqrt() / self.aperture.sqrt()) * self.phase_response
    }

    /// Signal at the receiver aperture for channel gain `h` and transmitted
    /// baseband symbol `s_b`: x_b = √A_e·h·s_b.
    pub fn aperture_signal(&self, h: Complex64, s_b: Complex64) -> Complex64 {
        self.aperture.sqrt() * h * s_b
    }

    /// End-to-end baseband output √β·Φ·h·s_b; the aperture cancels exactly.
    pub fn end_to_end(&self, h: Complex64, s_b: Complex64) -> Complex64 {
        self.transfer_function() * self.aperture_signal(h, s_b)
    }
}

/// Assemble the baseband transfer quantities at the LO operating point.
pub fn baseband_transfer(
    chain: &DetectorChain,
    cell: &VaporCell,
    probe: &ProbeBeam,
    fields: &RfFields,
    chi_prime: Complex64,
    chi_lo: Complex64,
) -> BasebandTransfer {
    let ac = ac_voltage(chi_prime, fields, chain, cell, probe, chi_lo);
    let (p1, _) = probe_output(chi_lo, cell, probe);
    let z0 = FREE_SPACE_IMPEDANCE;
    let alpha = chain.responsivity;
    let sin2 = ac.phi1.sin().powi(2);
    let beta = 4.0 * alpha * alpha * chain.amplifier_gain * z0 * chain.lo_power * p1
        * ac.kappa1 * ac.kappa1 * sin2;
    let conversion = std::f64::consts::PI * cell.length * fields.coupling_dipole
        / (probe.wavelength * HBAR);
    let kappa2 = 4.0 * alpha * alpha * chain.amplifier_gain * z0 * chain.lo_power * p1
        * conversion * conversion * sin2;
    BasebandTransfer {
        kappa1: ac.kappa1,
        phi1: ac.phi1,
        beta,
        phase_response: Complex64::from_polar(1.0, -fields.lo_phase),
        kappa2,
        aperture: 1.0,
        impedance: z0,
    }
}

/// Additive noise powers of the receiver. Black-body radiation enters only
/// as the decoherence rate folded into the EIT linewidth, never as a power.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseBudget {
    /// Quantum projection noise power (W).
    pub quantum_projection: f64,
    /// Photon shot noise power (W).
    pub photon_shot: f64,
    /// Intrinsic thermal (electronic) noise power (W).
    pub intrinsic_thermal: f64,
    /// EIT linewidth used for the projection term (rad/s).
    pub eit_linewidth: f64,
    /// Number of Rydberg atoms in the probe volume N_m = πr₀²dN_a.
    pub rydberg_atom_count: f64,
    /// Bandwidth the powers refer to (Hz).
    pub bandwidth: f64,
    /// Ambient temperature (K); recorded for provenance, contributes no
    /// additive term.
    pub environment_temperature: f64,
}

impl NoiseBudget {
    pub fn total(&self) -> f64 {
        self.quantum_projection + self.photon_shot + self.intrinsic_thermal
    }
}

/// Evaluate the three-term noise budget for bandwidth `bandwidth`.
#[allow(clippy::too_many_arguments)]
pub fn noise_budget(
    chain: &DetectorChain,
    transfer: &BasebandTransfer,
    gamma_eit: f64,
    fields: &RfFields,
    cell: &VaporCell,
    probe: &ProbeBeam,
    bandwidth: f64,
    t_env: f64,
) -> NoiseBudget {
    let (p1, _) = probe_output(Complex64::ZERO, cell, probe);
    // the probe power reaching the detector is the attenuated one; the
    // transfer was built at the LO operating point, so reuse its beta to
    // recover P1 instead of re-deriving chi here.
    let _ = p1;
    let atom_count = std::f64::consts::PI * probe.radius * probe.radius * cell.length
        * cell.atom_density;
    let intrinsic_thermal =
        BOLTZMANN * chain.noise_temperature * chain.amplifier_gain * bandwidth;
    // P1 at the operating point: beta = 4 alpha^2 G Z0 Pl P1 kappa1^2 sin^2(phi1)
    let sin2 = transfer.phi1.sin().powi(2);
    let p1_lo = if transfer.kappa1 > 0.0 && sin2 > 0.0 {
        transfer.beta
            / (4.0 * chain.responsivity.powi(2)
                * chain.amplifier_gain
                * transfer.impedance
                * chain.lo_power
                * transfer.kappa1.powi(2)
                * sin2)
    } else {
        0.0
    };
    let photon_shot = 2.0
        * ELEMENTARY_CHARGE
        * chain.amplifier_gain
        * chain.responsivity
        * (chain.lo_power + p1_lo)
        * bandwidth;
    let projection_field = HBAR * gamma_eit.sqrt()
        / (fields.coupling_dipole * atom_count.sqrt());
    let quantum_projection = transfer.beta / (2.0 * transfer.impedance)
        * projection_field
        * projection_field
        * bandwidth;
    NoiseBudget {
        quantum_projection,
        photon_shot,
        intrinsic_thermal,
        eit_linewidth: gamma_eit,
        rydberg_atom_count: atom_count,
        bandwidth,
        environment_temperature: t_env,
    }
}

/// Operating regime of the linearized superheterodyne response.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SaturationRegime {
    /// Ω_sig is small against both the LO and the EIT linewidth.
    Linear,
    /// Ω_sig approaches the LO: the heterodyne small-signal assumption fails.
    MixingSaturated,
    /// Ω_sig approaches the EIT linewidth: the ground state depletes and the
    /// susceptibility compresses.
    AtomSaturated,
    /// Both bounds violated.
    Both,
}

impl std::fmt::Display for SaturationRegime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            SaturationRegime::Linear => "linear",
            SaturationRegime::MixingSaturated => "mixing-saturated",
            SaturationRegime::AtomSaturated => "atom-saturated",
            SaturationRegime::Both => "both",
        };
        f.write_str(s)
    }
}

/// Classify the drive against the two saturation bounds. `margin` is the
/// fraction of each bound treated as still linear (default 0.1).
pub fn saturation_check(
    omega_sig: f64,
    omega_lo: f64,
    gamma_eit: f64,
    margin: f64,
) -> SaturationRegime {
    assert!(margin > 0.0 && margin < 1.0, "margin must lie in (0, 1)");
    let mixing = omega_sig >= margin * omega_lo;
    let atomic = omega_sig >= margin * gamma_eit;
    match (mixing, atomic) {
        (false, false) => SaturationRegime::Linear,
        (true, false) => SaturationRegime::MixingSaturated,
        (false, true) => SaturationRegime::AtomSaturated,
        (true, true) => SaturationRegime::Both,
    }
}

/// Largest signal Rabi frequency the linear regime admits.
pub fn linear_signal_limit(omega_lo: f64, gamma_eit: f64, margin: f64) -> f64 {
    margin * omega_lo.min(gamma_eit)
}
