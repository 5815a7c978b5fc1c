//! Physical constants (CODATA 2018, SI) and unit conversions.
//!
//! Everything inside the library is SI. Electron-volts only appear in
//! user-facing parameter tables and are converted here.

/// Elementary charge (C).
pub const Q_E: f64 = 1.602_176_634e-19;
/// Boltzmann constant (J/K).
pub const K_B: f64 = 1.380_649e-23;
/// Vacuum permittivity (F/m).
pub const EPS_VAC: f64 = 8.854_187_812_8e-12;
/// Electron rest mass (kg).
pub const M_E: f64 = 9.109_383_701_5e-31;
/// Reduced Planck constant (J s).
pub const HBAR: f64 = 1.054_571_817e-34;

/// Converts an energy in eV to joules.
pub fn ev_to_joule(ev: f64) -> f64 {
    ev * Q_E
}

/// Thermal voltage kT/q in volts.
pub fn thermal_voltage(temperature: f64) -> f64 {
    K_B * temperature / Q_E
}
