//! Physical constants (SI, CODATA 2018 exact values where defined).

/// Elementary charge, C.
pub const ELEMENTARY_CHARGE: f64 = 1.602_176_634e-19;
/// Boltzmann constant, J/K.
pub const BOLTZMANN: f64 = 1.380_649e-23;
/// Vacuum permittivity, F/m.
pub const VACUUM_PERMITTIVITY: f64 = 8.854_187_812_8e-12;

/// Thermal voltage k_B T / e in volts. Numerically equal to k_B T in eV.
#[inline]
pub fn thermal_voltage(temperature_k: f64) -> f64 {
    BOLTZMANN * temperature_k / ELEMENTARY_CHARGE
}

/// Largest argument passed to `exp` before clamping.
pub const MAX_EXP_ARG: f64 = 700.0;
