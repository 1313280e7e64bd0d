//! Physical constants in SI units (CODATA 2018 recommended values).

/// Reduced Planck constant ħ (J·s).
pub const HBAR: f64 = 1.054_571_817e-34;

/// Planck constant h (J·s).
pub const PLANCK: f64 = 6.626_070_15e-34;

/// Boltzmann constant (J/K).
pub const BOLTZMANN: f64 = 1.380_649e-23;

/// Vacuum permittivity ε₀ (F/m).
pub const VACUUM_PERMITTIVITY: f64 = 8.854_187_8128e-12;

/// Speed of light in vacuum (m/s).
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Elementary charge q₀ (C).
pub const ELEMENTARY_CHARGE: f64 = 1.602_176_634e-19;

/// Bohr radius a₀ (m).
pub const BOHR_RADIUS: f64 = 5.291_772_109_03e-11;

/// Fine-structure constant α (dimensionless).
pub const FINE_STRUCTURE: f64 = 7.297_352_5693e-3;

/// Electron mass (kg).
pub const ELECTRON_MASS: f64 = 9.109_383_7015e-31;

/// Rydberg unit of energy for an infinitely heavy nucleus, R∞·h·c (J).
pub const RYDBERG_ENERGY_INF: f64 = 2.179_872_361_103e-18;

/// Impedance of free space Z₀ = 1/(cε₀) (Ω).
pub const FREE_SPACE_IMPEDANCE: f64 = 1.0 / (SPEED_OF_LIGHT * VACUUM_PERMITTIVITY);

/// Atomic dipole unit q₀a₀ (C·m), the conversion factor for dipole moments
/// quoted in atomic units.
pub const DIPOLE_ATOMIC_UNIT: f64 = ELEMENTARY_CHARGE * BOHR_RADIUS;
