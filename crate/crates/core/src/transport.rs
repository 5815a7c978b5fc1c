//! Conduction across the Schottky interface: thermionic emission, the prefactor
//! laws of the power-law decay, a WKB tunnelling factor and zone summation.

use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};
use crate::params::MaterialParams;
use crate::units::{thermal_voltage, HBAR, M_E, Q_E};

/// Default share of the applied bias that lowers the tunnelling barrier.
pub const DEFAULT_BARRIER_LOWERING: f64 = 0.5;
/// Floor of the effective tunnelling barrier (eV).
pub const MIN_EFFECTIVE_BARRIER: f64 = 0.01;
/// Fowler-Nordheim conduction is not evaluated below this bias (V).
pub const FOWLER_NORDHEIM_MIN_BIAS: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mechanism {
    Exponential,
    FrenkelPoole,
    FowlerNordheim,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConductionLaw {
    pub mechanism: Mechanism,
    /// Voltage scale V0 (V).
    pub v0: f64,
    /// Prefactor carrying the units of J_s (A/m^2); polynomial factors use V in volts.
    pub j_ref: f64,
}

impl ConductionLaw {
    pub fn new(mechanism: Mechanism, v0: f64, j_ref: f64) -> Result<Self> {
        let law = Self { mechanism, v0, j_ref };
        law.validate()?;
        Ok(law)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.v0.is_finite() && self.v0 > 0.0) {
            return Err(param("v0", format!("must be > 0, got {}", self.v0)));
        }
        if !(self.j_ref.is_finite() && self.j_ref >= 0.0) {
            return Err(param("j_ref", format!("must be >= 0, got {}", self.j_ref)));
        }
        Ok(())
    }

    /// Smallest bias at which the law is defined.
    pub fn min_bias(&self) -> f64 {
        match self.mechanism {
            Mechanism::Exponential => f64::NEG_INFINITY,
            Mechanism::FrenkelPoole => 0.0,
            Mechanism::FowlerNordheim => FOWLER_NORDHEIM_MIN_BIAS,
        }
    }
}

/// Prefactor J_s of J = J_s t^-alpha for the given conduction mechanism.
pub fn j_s(law: &ConductionLaw, v: f64, alpha: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&alpha) {
        return Err(Error::Domain(format!("alpha must lie in [0, 1), got {alpha}")));
    }
    let k = 1.0 - 1.0 / (alpha + 1.0);
    match law.mechanism {
        Mechanism::Exponential => Ok(law.j_ref * (k * v / law.v0).exp()),
        Mechanism::FrenkelPoole => {
            if !(v > 0.0) {
                return Err(Error::Domain(format!("Frenkel-Poole law needs V > 0, got {v}")));
            }
            Ok(law.j_ref * v * (k * v.sqrt() / law.v0).exp())
        }
        Mechanism::FowlerNordheim => {
            if !(v > FOWLER_NORDHEIM_MIN_BIAS) {
                return Err(Error::Domain(format!(
                    "Fowler-Nordheim law needs V > {FOWLER_NORDHEIM_MIN_BIAS} V, got {v}"
                )));
            }
            Ok(law.j_ref * v * v * (k / (v * law.v0)).exp())
        }
    }
}

/// Saturation current density A* T^2 exp(-q phi_B / kT) (A/m^2).
pub fn saturation_current(mat: &MaterialParams) -> f64 {
    let vt = thermal_voltage(mat.temperature);
    mat.richardson_const * mat.temperature.powi(2) * (-mat.barrier_height / vt).exp()
}

/// Thermionic emission J = A* T^2 exp(-q phi_B/kT) (exp(qV/(n kT)) - 1).
pub fn thermionic(mat: &MaterialParams, v: f64) -> f64 {
    let vt = thermal_voltage(mat.temperature);
    saturation_current(mat) * (v / (mat.ideality * vt)).exp_m1()
}

/// WKB transmission exp(-2 w sqrt(2 m_e q phi_eff) / hbar) through a barrier of
/// width `w` with phi_eff = max(phi_B - gamma |V|, 0.01 eV).
pub fn tunneling_factor_with(mat: &MaterialParams, w: f64, v: f64, gamma: f64) -> Result<f64> {
    if !(w.is_finite() && w >= 0.0) {
        return Err(param("w", format!("barrier width must be >= 0, got {w}")));
    }
    Ok((-w * attenuation(mat, v, gamma)).exp())
}

/// Attenuation 2 sqrt(2 m_e q phi_eff) / hbar (1/m) of the WKB factor, so that
/// T = exp(-w * attenuation).
pub fn attenuation(mat: &MaterialParams, v: f64, gamma: f64) -> f64 {
    let phi = (mat.barrier_height - gamma * v.abs()).max(MIN_EFFECTIVE_BARRIER);
    2.0 * (2.0 * M_E * Q_E * phi).sqrt() / HBAR
}

pub fn tunneling_factor(mat: &MaterialParams, w: f64, v: f64) -> Result<f64> {
    tunneling_factor_with(mat, w, v, DEFAULT_BARRIER_LOWERING)
}

/// Total current (A) of zones given as (area m^2, current density A/m^2).
pub fn zone_current(zones: &[(f64, f64)]) -> Result<f64> {
    let mut total = 0.0;
    for &(area, j) in zones {
        if !(area >= 0.0) {
            return Err(param("area", format!("zone area must be >= 0, got {area}")));
        }
        total += area * j;
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn prefactor_examples() {
        let law = ConductionLaw::new(Mechanism::Exponential, 0.4, 3.0).unwrap();
        assert_eq!(j_s(&law, 1.7, 0.0).unwrap(), 3.0);
        assert_relative_eq!(j_s(&law, 0.4, 0.5).unwrap(), 3.0 * (1.0f64 / 3.0).exp(), max_relative = 1e-15);
        let fp = ConductionLaw { mechanism: Mechanism::FrenkelPoole, ..law };
        assert_eq!(j_s(&fp, 4.0, 0.0).unwrap(), 12.0);
        let fnh = ConductionLaw { mechanism: Mechanism::FowlerNordheim, ..law };
        assert_relative_eq!(j_s(&fnh, 1e6, 0.5).unwrap() / 1e12, 3.0, max_relative = 1e-5);
        assert!(j_s(&fp, 0.0, 0.5).is_err());
        assert!(j_s(&fnh, 0.04, 0.5).is_err());
        assert!(j_s(&law, 1.0, 1.0).is_err());
        assert!(ConductionLaw::new(Mechanism::Exponential, 0.0, 1.0).is_err());
    }

    #[test]
    fn thermionic_limits() {
        let mat = MaterialParams::default();
        assert_eq!(thermionic(&mat, 0.0), 0.0);
        assert_relative_eq!(thermionic(&mat, -10.0), -saturation_current(&mat), max_relative = 1e-12);
    }

    #[test]
    fn zones_add() {
        assert_eq!(zone_current(&[(2.0, 3.0)]).unwrap(), 6.0);
        assert!(zone_current(&[(-1.0, 3.0)]).is_err());
    }
}
