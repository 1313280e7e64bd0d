//! Atomic species data: quantum-defect energy levels, transition frequencies,
//! and parameter tables for the shipped receiver configurations.
//!
//! Energies follow the quantum-defect form `E(n, l) = -R_y / (n - δ_l)²`
//! with an optional two-term Rydberg–Ritz expansion of the defect,
//! `δ(n) = δ₀ + δ₂ / (n - δ₀)²`. Defects are tabulated per orbital for the
//! `j = l + 1/2` fine-structure series, which is the series the shipped
//! cesium schemes address.

use serde::{Deserialize, Serialize};
use std::fmt;
use std::path::Path;

use crate::constants::{DIPOLE_ATOMIC_UNIT, ELECTRON_MASS, PLANCK, RYDBERG_ENERGY_INF};

/// Errors from atomic data lookups and parameter-table ingestion.
#[derive(Debug, thiserror::Error)]
pub enum AtomDataError {
    /// Effective quantum number n - δ_l would be non-positive.
    #[error("unphysical state {0}: principal quantum number does not exceed the quantum defect")]
    UnphysicalState(String),
    #[error("parameter file {path}: {source}")]
    Parse {
        path: String,
        #[source]
        source: toml::de::Error,
    },
    #[error("parameter file {path}: field `{field}` {reason}")]
    Invariant {
        path: String,
        field: &'static str,
        reason: String,
    },
    #[error("unknown preset `{0}`; shipped presets are cs_2c4l and cs_3c5l")]
    UnknownPreset(String),
    #[error("reading {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// An atomic species: mass and the constants entering the quantum-defect
/// energy formula.
#[derive(Debug, Clone, PartialEq)]
pub struct Species {
    pub name: String,
    /// Atomic mass (kg).
    pub mass: f64,
    /// Rydberg energy constant R_y for this species (J), reduced-mass corrected.
    pub rydberg_constant: f64,
    /// Fine-structure constant entering the black-body decoherence rate.
    pub fine_structure_constant: f64,
}

impl Species {
    /// Cesium-133.
    pub fn cesium() -> Self {
        let mass = 2.206_946_9e-25;
        Species {
            name: "Cs".to_owned(),
            mass,
            rydberg_constant: RYDBERG_ENERGY_INF / (1.0 + ELECTRON_MASS / mass),
            fine_structure_constant: crate::constants::FINE_STRUCTURE,
        }
    }
}

/// Orbital angular momentum label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Orbital {
    S,
    P,
    D,
    F,
    G,
}

impl Orbital {
    pub fn quantum_number(self) -> u32 {
        match self {
            Orbital::S => 0,
            Orbital::P => 1,
            Orbital::D => 2,
            Orbital::F => 3,
            Orbital::G => 4,
        }
    }
}

impl fmt::Display for Orbital {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c = match self {
            Orbital::S => 'S',
            Orbital::P => 'P',
            Orbital::D => 'D',
            Orbital::F => 'F',
            Orbital::G => 'G',
        };
        write!(f, "{c}")
    }
}

/// Two-term Rydberg–Ritz expansion coefficients for one orbital series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RitzCoefficients {
    pub delta0: f64,
    /// Second Ritz coefficient; zero selects the constant-defect model.
    pub delta2: f64,
}

impl RitzCoefficients {
    /// n-dependent defect δ(n) = δ₀ + δ₂/(n - δ₀)².
    pub fn defect(&self, n: u32) -> f64 {
        let dn = n as f64 - self.delta0;
        self.delta0 + self.delta2 / (dn * dn)
    }
}

/// Quantum defects for the S..G orbital series of one species.
///
/// Alkali defects fall rapidly with orbital angular momentum, so the table
/// enforces δ_S > δ_P > δ_D > δ_F > δ_G ≥ 0 on the leading coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantumDefectTable {
    coefficients: [RitzCoefficients; 5],
    /// Data-file version tag recording where the coefficients came from.
    pub provenance: String,
}

impl QuantumDefectTable {
    pub fn new(
        coefficients: [RitzCoefficients; 5],
        provenance: impl Into<String>,
    ) -> Result<Self, AtomDataError> {
        for w in coefficients.windows(2) {
            if !(w[0].delta0 > w[1].delta0) {
                return Err(AtomDataError::UnphysicalState(
                    "quantum defects must strictly decrease with orbital angular momentum"
                        .to_owned(),
                ));
            }
        }
        if !(coefficients[4].delta0 >= 0.0) || coefficients.iter().any(|c| !c.delta0.is_finite()) {
            return Err(AtomDataError::UnphysicalState(
                "quantum defects must be finite and non-negative".to_owned(),
            ));
        }
        Ok(QuantumDefectTable {
            coefficients,
            provenance: provenance.into(),
        })
    }

    /// Measured cesium defects for the j = l + 1/2 series
    /// (Weber & Sansonetti / Goy et al. compilations).
    pub fn cesium() -> Self {
        QuantumDefectTable::new(
            [
                RitzCoefficients { delta0: 4.049_325, delta2: 0.246_2 },
                RitzCoefficients { delta0: 3.559_058, delta2: 0.374 },
                RitzCoefficients { delta0: 2.466_314_4, delta2: 0.013_81 },
                RitzCoefficients { delta0: 0.033_537, delta2: -0.191 },
                RitzCoefficients { delta0: 0.007_038_65, delta2: -0.049_252 },
            ],
            "cs-ritz-weber-sansonetti",
        )
        .expect("built-in cesium defects satisfy the ordering invariant")
    }

    pub fn coefficients(&self, l: Orbital) -> RitzCoefficients {
        self.coefficients[l.quantum_number() as usize]
    }

    /// Defect δ_l(n) for the requested series.
    pub fn defect(&self, l: Orbital, n: u32) -> f64 {
        self.coefficients(l).defect(n)
    }
}

/// A Rydberg state |n, l, j⟩. `j_doubled` stores 2j so half-integer angular
/// momenta stay exact.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RydbergState {
    pub n: u32,
    pub l: Orbital,
    pub j_doubled: u32,
}

impl RydbergState {
    pub fn new(n: u32, l: Orbital, j_doubled: u32) -> Result<Self, AtomDataError> {
        let lq = l.quantum_number();
        if n < lq + 1 {
            return Err(AtomDataError::UnphysicalState(format!(
                "n = {n} requires n >= l + 1 = {}",
                lq + 1
            )));
        }
        let allowed = j_doubled % 2 == 1
            && (j_doubled + 1 == 2 * lq || j_doubled == 2 * lq + 1);
        if !allowed {
            return Err(AtomDataError::UnphysicalState(format!(
                "j = {j_doubled}/2 is not l ± 1/2 for l = {lq}"
            )));
        }
        Ok(RydbergState { n, l, j_doubled })
    }
}

impl fmt::Display for RydbergState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}_{}/2", self.n, self.l, self.j_doubled)
    }
}

/// Quantum-defect energy E = -R_y/(n - δ_l)² of a Rydberg state (J).
pub fn rydberg_energy(
    species: &Species,
    defects: &QuantumDefectTable,
    state: RydbergState,
) -> Result<f64, AtomDataError> {
    let delta = defects.defect(state.l, state.n);
    let n_star = state.n as f64 - delta;
    if n_star <= 0.0 {
        return Err(AtomDataError::UnphysicalState(format!(
            "{state}: effective quantum number {n_star} <= 0"
        )));
    }
    Ok(-species.rydberg_constant / (n_star * n_star))
}

/// Transition frequency |E_a - E_b|/h between two Rydberg states (Hz).
///
/// Symmetric in its arguments and zero for identical states.
pub fn transition_frequency(
    state_a: RydbergState,
    state_b: RydbergState,
    species: &Species,
    defects: &QuantumDefectTable,
) -> Result<f64, AtomDataError> {
    let ea = rydberg_energy(species, defects, state_a)?;
    let eb = rydberg_energy(species, defects, state_b)?;
    Ok((ea - eb).abs() / PLANCK)
}

/// Asymptotic nF → nG transition frequency R_y|δ_F - δ_G|/(πħ n³) (Hz),
/// valid for small defects at high orbital angular momentum.
pub fn high_l_frequency(n: u32, delta_f: f64, delta_g: f64, species: &Species) -> f64 {
    let n3 = (n as f64).powi(3);
    // R_y/(π ħ) = 2 R_y / h
    2.0 * species.rydberg_constant * (delta_f - delta_g).abs() / (PLANCK * n3)
}

/// Which excitation ladder a parameter table describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Architecture {
    /// Two-color, four-level ladder (probe + coupling lasers).
    TwoColorFourLevel,
    /// Three-color, five-level ladder (probe + dressing + coupling lasers).
    ThreeColorFiveLevel,
}

impl Architecture {
    pub fn level_count(self) -> usize {
        match self {
            Architecture::TwoColorFourLevel => 4,
            Architecture::ThreeColorFiveLevel => 5,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Architecture::TwoColorFourLevel => "2c4l",
            Architecture::ThreeColorFiveLevel => "3c5l",
        }
    }
}

impl fmt::Display for Architecture {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// On-disk shape of a parameter table. Rates are entered as ordinary
/// frequencies (Hz, the Γ/2π convention) and dipole moments in units of
/// q₀a₀; [`AtomicParameterTable`] holds the converted SI values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParameterFile {
    pub architecture: Architecture,
    pub cell: CellSection,
    pub lasers: LaserSection,
    pub dipoles: DipoleSection,
    pub decay: DecaySection,
    pub rf: RfSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CellSection {
    pub length_m: f64,
    pub atom_density_per_m3: f64,
    pub beam_radius_m: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LaserSection {
    pub probe_wavelength_m: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dressing_wavelength_m: Option<f64>,
    pub coupling_wavelength_m: f64,
    pub probe_power_w: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dressing_power_w: Option<f64>,
    pub coupling_power_w: f64,
    /// Propagation signs along the optical axis: +1 with the probe, -1 against.
    pub probe_sign: i8,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dressing_sign: Option<i8>,
    pub coupling_sign: i8,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DipoleSection {
    /// μ₁₂ in q₀a₀.
    pub probe: f64,
    /// μ₂₃ in q₀a₀.
    pub second: f64,
    /// μ₃₄ in q₀a₀.
    pub third: f64,
    /// μ₄₅ in q₀a₀ (five-level ladders only).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fourth: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecaySection {
    pub gamma2_hz: f64,
    pub gamma3_hz: f64,
    pub gamma4_hz: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma5_hz: Option<f64>,
    pub dephasing_hz: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RfSection {
    pub lo_field_v_per_m: f64,
    /// Effective principal quantum number of the sensing Rydberg state,
    /// used by the black-body decoherence rate.
    pub effective_principal_quantum_number: f64,
}

/// A validated parameter table in SI units. Rates and the dephasing rate are
/// angular (rad/s); dipole moments are C·m.
#[derive(Debug, Clone, PartialEq)]
pub struct AtomicParameterTable {
    pub architecture: Architecture,
    /// Vapor cell length d (m).
    pub cell_length: f64,
    /// Atom number density N_a (m⁻³).
    pub atom_density: f64,
    /// 1/e² beam radius r₀ (m).
    pub beam_radius: f64,
    /// Laser wavelengths, probe first, in ladder order (m).
    pub wavelengths: Vec<f64>,
    /// Beam powers in the same order (W).
    pub beam_powers: Vec<f64>,
    /// Propagation signs in the same order.
    pub propagation_signs: Vec<f64>,
    /// Transition dipole moments μ₁₂, μ₂₃, ... up the ladder; the last entry
    /// is the RF transition (C·m).
    pub dipole_moments: Vec<f64>,
    /// Natural decay rates Γ₂..Γ_N (rad/s).
    pub decay_rates: Vec<f64>,
    /// Residual dephasing Γ_d (rad/s).
    pub dephasing: f64,
    /// RF local-oscillator field amplitude U_y (V/m).
    pub lo_field: f64,
    /// Effective principal quantum number of the sensing state.
    pub n_effective: f64,
}

impl AtomicParameterTable {
    /// Dipole moment of the RF transition (C·m).
    pub fn rf_dipole(&self) -> f64 {
        *self
            .dipole_moments
            .last()
            .expect("validated tables have at least three dipole moments")
    }

    /// Number of ladder levels (4 or 5).
    pub fn level_count(&self) -> usize {
        self.architecture.level_count()
    }

    /// Serialize back to the on-disk representation (file units).
    pub fn to_file(&self) -> ParameterFile {
        let tau = std::f64::consts::TAU;
        let five = self.architecture == Architecture::ThreeColorFiveLevel;
        ParameterFile {
            architecture: self.architecture,
            cell: CellSection {
                length_m: self.cell_length,
                atom_density_per_m3: self.atom_density,
                beam_radius_m: self.beam_radius,
            },
            lasers: LaserSection {
                probe_wavelength_m: self.wavelengths[0],
                dressing_wavelength_m: five.then(|| self.wavelengths[1]),
                coupling_wavelength_m: *self.wavelengths.last().unwrap(),
                probe_power_w: self.beam_powers[0],
                dressing_power_w: five.then(|| self.beam_powers[1]),
                coupling_power_w: *self.beam_powers.last().unwrap(),
                probe_sign: self.propagation_signs[0] as i8,
                dressing_sign: five.then(|| self.propagation_signs[1] as i8),
                coupling_sign: *self.propagation_signs.last().unwrap() as i8,
            },
            dipoles: DipoleSection {
                probe: self.dipole_moments[0] / DIPOLE_ATOMIC_UNIT,
                second: self.dipole_moments[1] / DIPOLE_ATOMIC_UNIT,
                third: self.dipole_moments[2] / DIPOLE_ATOMIC_UNIT,
                fourth: five.then(|| self.dipole_moments[3] / DIPOLE_ATOMIC_UNIT),
            },
            decay: DecaySection {
                gamma2_hz: self.decay_rates[0] / tau,
                gamma3_hz: self.decay_rates[1] / tau,
                gamma4_hz: self.decay_rates[2] / tau,
                gamma5_hz: five.then(|| self.decay_rates[3] / tau),
                dephasing_hz: self.dephasing / tau,
            },
            rf: RfSection {
                lo_field_v_per_m: self.lo_field,
                effective_principal_quantum_number: self.n_effective,
            },
        }
    }
}

fn positive(path: &str, field: &'static str, value: f64) -> Result<f64, AtomDataError> {
    if value.is_finite() && value > 0.0 {
        Ok(value)
    } else {
        Err(AtomDataError::Invariant {
            path: path.to_owned(),
            field,
            reason: format!("must be strictly positive, got {value}"),
        })
    }
}

fn wavelength(path: &str, field: &'static str, value: f64) -> Result<f64, AtomDataError> {
    let value = positive(path, field, value)?;
    if (100e-9..10e-6).contains(&value) {
        Ok(value)
    } else {
        Err(AtomDataError::Invariant {
            path: path.to_owned(),
            field,
            reason: format!("{value} m is outside the optical range (100 nm, 10 µm)"),
        })
    }
}

fn sign(path: &str, field: &'static str, value: i8) -> Result<f64, AtomDataError> {
    match value {
        1 => Ok(1.0),
        -1 => Ok(-1.0),
        other => Err(AtomDataError::Invariant {
            path: path.to_owned(),
            field,
            reason: format!("propagation sign must be +1 or -1, got {other}"),
        }),
    }
}

fn require<T>(
    path: &str,
    field: &'static str,
    value: Option<T>,
    wanted: bool,
) -> Result<Option<T>, AtomDataError> {
    match (value, wanted) {
        (Some(v), true) => Ok(Some(v)),
        (None, false) => Ok(None),
        (None, true) => Err(AtomDataError::Invariant {
            path: path.to_owned(),
            field,
            reason: "is required for the three-color five-level architecture".to_owned(),
        }),
        (Some(_), false) => Err(AtomDataError::Invariant {
            path: path.to_owned(),
            field,
            reason: "is not meaningful for the two-color four-level architecture".to_owned(),
        }),
    }
}

impl ParameterFile {
    /// Validate and convert to SI units.
    pub fn into_table(self, origin: &str) -> Result<AtomicParameterTable, AtomDataError> {
        let tau = std::f64::consts::TAU;
        let five = self.architecture == Architecture::ThreeColorFiveLevel;

        let mut wavelengths = vec![wavelength(origin, "probe_wavelength_m", self.lasers.probe_wavelength_m)?];
        let mut beam_powers = vec![positive(origin, "probe_power_w", self.lasers.probe_power_w)?];
        let mut signs = vec![sign(origin, "probe_sign", self.lasers.probe_sign)?];
        if let Some(w) = require(origin, "dressing_wavelength_m", self.lasers.dressing_wavelength_m, five)? {
            wavelengths.push(wavelength(origin, "dressing_wavelength_m", w)?);
            let p = require(origin, "dressing_power_w", self.lasers.dressing_power_w, five)?
                .expect("presence checked above");
            beam_powers.push(positive(origin, "dressing_power_w", p)?);
            let s = require(origin, "dressing_sign", self.lasers.dressing_sign, five)?
                .expect("presence checked above");
            signs.push(sign(origin, "dressing_sign", s)?);
        } else {
            require(origin, "dressing_power_w", self.lasers.dressing_power_w, five)?;
            require(origin, "dressing_sign", self.lasers.dressing_sign, five)?;
        }
        wavelengths.push(wavelength(origin, "coupling_wavelength_m", self.lasers.coupling_wavelength_m)?);
        beam_powers.push(positive(origin, "coupling_power_w", self.lasers.coupling_power_w)?);
        signs.push(sign(origin, "coupling_sign", self.lasers.coupling_sign)?);

        let mut dipoles = vec![
            positive(origin, "dipoles.probe", self.dipoles.probe)? * DIPOLE_ATOMIC_UNIT,
            positive(origin, "dipoles.second", self.dipoles.second)? * DIPOLE_ATOMIC_UNIT,
            positive(origin, "dipoles.third", self.dipoles.third)? * DIPOLE_ATOMIC_UNIT,
        ];
        if let Some(d) = require(origin, "dipoles.fourth", self.dipoles.fourth, five)? {
            dipoles.push(positive(origin, "dipoles.fourth", d)? * DIPOLE_ATOMIC_UNIT);
        }

        let mut decay = vec![
            positive(origin, "gamma2_hz", self.decay.gamma2_hz)? * tau,
            positive(origin, "gamma3_hz", self.decay.gamma3_hz)? * tau,
            positive(origin, "gamma4_hz", self.decay.gamma4_hz)? * tau,
        ];
        if let Some(g) = require(origin, "gamma5_hz", self.decay.gamma5_hz, five)? {
            decay.push(positive(origin, "gamma5_hz", g)? * tau);
        }

        Ok(AtomicParameterTable {
            architecture: self.architecture,
            cell_length: positive(origin, "length_m", self.cell.length_m)?,
            atom_density: positive(origin, "atom_density_per_m3", self.cell.atom_density_per_m3)?,
            beam_radius: positive(origin, "beam_radius_m", self.cell.beam_radius_m)?,
            wavelengths,
            beam_powers,
            propagation_signs: signs,
            dipole_moments: dipoles,
            decay_rates: decay,
            dephasing: positive(origin, "dephasing_hz", self.decay.dephasing_hz)? * tau,
            lo_field: positive(origin, "lo_field_v_per_m", self.rf.lo_field_v_per_m)?,
            n_effective: positive(
                origin,
                "effective_principal_quantum_number",
                self.rf.effective_principal_quantum_number,
            )?,
        })
    }
}

/// Parse a parameter table from TOML text. `origin` labels error messages.
pub fn parse_parameter_table(text: &str, origin: &str) -> Result<AtomicParameterTable, AtomDataError> {
    let file: ParameterFile = toml::from_str(text).map_err(|source| AtomDataError::Parse {
        path: origin.to_owned(),
        source,
    })?;
    file.into_table(origin)
}

/// Load and validate a parameter table from disk.
pub fn load_parameter_table(path: impl AsRef<Path>) -> Result<AtomicParameterTable, AtomDataError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| AtomDataError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_parameter_table(&text, &path.display().to_string())
}

/// Text of the shipped presets, compiled into the library so binaries work
/// from any directory.
pub const PRESET_CS_2C4L: &str = include_str!("../presets/cs_2c4l.toml");
pub const PRESET_CS_3C5L: &str = include_str!("../presets/cs_3c5l.toml");

/// Resolve a built-in preset by name (`cs_2c4l` or `cs_3c5l`).
pub fn builtin_preset(name: &str) -> Result<AtomicParameterTable, AtomDataError> {
    match name {
        "cs_2c4l" => parse_parameter_table(PRESET_CS_2C4L, "builtin:cs_2c4l"),
        "cs_3c5l" => parse_parameter_table(PRESET_CS_3C5L, "builtin:cs_3c5l"),
        other => Err(AtomDataError::UnknownPreset(other.to_owned())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn cs() -> (Species, QuantumDefectTable) {
        (Species::cesium(), QuantumDefectTable::cesium())
    }

    #[test]
    fn hydrogenic_energy() {
        let (species, _) = cs();
        let defects = QuantumDefectTable::new(
            [
                RitzCoefficients { delta0: 4e-4, delta2: 0.0 },
                RitzCoefficients { delta0: 3e-4, delta2: 0.0 },
                RitzCoefficients { delta0: 2e-4, delta2: 0.0 },
                RitzCoefficients { delta0: 1e-4, delta2: 0.0 },
                RitzCoefficients { delta0: 0.0, delta2: 0.0 },
            ],
            "test",
        )
        .unwrap();
        let state = RydbergState::new(2, Orbital::G, 9).unwrap_err();
        assert!(matches!(state, AtomDataError::UnphysicalState(_)));
        let state = RydbergState::new(5, Orbital::G, 9).unwrap();
        // δ_G = 0 exactly: hydrogenic -R/25
        let e = rydberg_energy(&species, &defects, state).unwrap();
        assert_relative_eq!(e, -species.rydberg_constant / 25.0, max_relative = 1e-14);
    }

    #[test]
    fn energy_increases_with_n() {
        let (species, defects) = cs();
        let mut last = f64::NEG_INFINITY;
        for n in 40..60 {
            let state = RydbergState::new(n, Orbital::D, 5).unwrap();
            let e = rydberg_energy(&species, &defects, state).unwrap();
            assert!(e > last, "E({n}) = {e} not above E({}) = {last}", n - 1);
            last = e;
        }
    }

    #[test]
    fn cs_47d_energy_against_reference() {
        // Independent evaluation of -R_Cs/(47 - δ_D(47))² with the same
        // published coefficients, computed outside this crate.
        let (species, defects) = cs();
        let state = RydbergState::new(47, Orbital::D, 5).unwrap();
        let e = rydberg_energy(&species, &defects, state).unwrap();
        assert_relative_eq!(e, -1.099_137_766_8e-21, max_relative = 5e-6);
    }

    #[test]
    fn rejects_n_below_defect() {
        let (species, defects) = cs();
        let state = RydbergState::new(4, Orbital::S, 1).unwrap();
        assert!(rydberg_energy(&species, &defects, state).is_err());
    }

    #[test]
    fn signature_transition_is_6_94_ghz() {
        let (species, defects) = cs();
        let d = RydbergState::new(47, Orbital::D, 5).unwrap();
        let p = RydbergState::new(48, Orbital::P, 3).unwrap();
        let f = transition_frequency(d, p, &species, &defects).unwrap();
        assert!((f - 6.94e9).abs() / 6.94e9 < 0.01, "f = {f}");
        let g = transition_frequency(p, d, &species, &defects).unwrap();
        assert_eq!(f, g);
    }

    #[test]
    fn degenerate_transition_is_zero() {
        let (species, defects) = cs();
        let d = RydbergState::new(47, Orbital::D, 5).unwrap();
        assert_eq!(transition_frequency(d, d, &species, &defects).unwrap(), 0.0);
    }

    #[test]
    fn high_l_matches_exact_to_order_inverse_n() {
        let (species, defects) = cs();
        let n = 47;
        let f_state = RydbergState::new(n, Orbital::F, 7).unwrap();
        let g_state = RydbergState::new(n, Orbital::G, 9).unwrap();
        let exact = transition_frequency(f_state, g_state, &species, &defects).unwrap();
        let approx = high_l_frequency(
            n,
            defects.defect(Orbital::F, n),
            defects.defect(Orbital::G, n),
            &species,
        );
        let rel = (exact - approx).abs() / exact;
        assert!(rel < 2.0 / n as f64, "relative deviation {rel}");
    }

    #[test]
    fn high_l_trivial_cases() {
        let species = Species::cesium();
        assert_eq!(high_l_frequency(47, 0.033, 0.033, &species), 0.0);
        let f1 = high_l_frequency(30, 0.033, 0.007, &species);
        let f2 = high_l_frequency(60, 0.033, 0.007, &species);
        assert_relative_eq!(f1 / f2, 8.0, max_relative = 1e-12);
    }

    #[test]
    fn high_l_band_placement() {
        // Cs F→G transitions across n = 39..100 land in the UHF/VHF decades.
        let (species, defects) = cs();
        for n in 39..=100 {
            let f = high_l_frequency(
                n,
                defects.defect(Orbital::F, n),
                defects.defect(Orbital::G, n),
                &species,
            );
            assert!(
                (30e6..3e9).contains(&f),
                "n = {n} gives {f} Hz outside VHF/UHF"
            );
        }
    }

    #[test]
    fn presets_parse_with_published_values() {
        let t5 = builtin_preset("cs_3c5l").unwrap();
        assert_eq!(t5.wavelengths, vec![895e-9, 636e-9, 2245e-9]);
        assert_eq!(t5.level_count(), 5);
        let t4 = builtin_preset("cs_2c4l").unwrap();
        assert_eq!(t4.wavelengths, vec![852e-9, 510e-9]);
        assert_relative_eq!(
            t4.decay_rates[0],
            std::f64::consts::TAU * 5.22e6,
            max_relative = 1e-12
        );
    }

    #[test]
    fn negative_density_names_field() {
        let mut text = PRESET_CS_3C5L.replace("atom_density_per_m3 = 1.5e17", "atom_density_per_m3 = -1.0");
        let err = parse_parameter_table(&text, "test").unwrap_err();
        assert!(err.to_string().contains("atom_density_per_m3"), "{err}");
        text = text.replace("atom_density_per_m3 = -1.0", "atom_density_per_m3 = 1.5e17");
        assert!(parse_parameter_table(&text, "test").is_ok());
    }

    #[test]
    fn unknown_keys_rejected() {
        let text = format!("{PRESET_CS_3C5L}\n[extra]\nnope = 1\n");
        assert!(matches!(
            parse_parameter_table(&text, "test"),
            Err(AtomDataError::Parse { .. })
        ));
    }

    #[test]
    fn preset_round_trips() {
        for name in ["cs_2c4l", "cs_3c5l"] {
            let table = builtin_preset(name).unwrap();
            let text = toml::to_string(&table.to_file()).unwrap();
            let again = parse_parameter_table(&text, "roundtrip").unwrap();
            assert_eq!(table, again, "{name} round trip");
        }
    }
}
