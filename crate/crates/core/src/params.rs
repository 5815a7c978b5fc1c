//! Material, trap and geometry parameter sets shared by every model.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{param, Result};
use crate::units::{thermal_voltage, EPS_VAC, Q_E};

/// Trapping-kinetics parameters of the dielectric next to the interface.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrapParams {
    /// Maximum density of available traps (1/m^3).
    pub n0_max: f64,
    /// Capture cross-section (m^2).
    pub sigma: f64,
    /// Volume rendered inactive per trapped electron (m^3).
    pub h: f64,
    /// Centroid of the trapped charge measured from the interface (m).
    pub x_centroid: f64,
    /// Thermal velocity (m/s).
    pub v_th: f64,
    /// Drift velocity (m/s).
    pub v_d: f64,
    /// Dielectric volume the trapping acts on (m^3).
    pub volume: f64,
    /// Conduction field scale E0 of ln(J/J0) = E/E0 (V/m).
    pub e0_scale: f64,
    /// Conduction prefactor J0 (A/m^2).
    pub j0_ref: f64,
}

impl Default for TrapParams {
    fn default() -> Self {
        Self {
            n0_max: 1.0e27,
            sigma: 3.0e-29,
            h: 1.0e-25,
            x_centroid: 1.8e-9,
            v_th: 1.0e5,
            v_d: 1.0e5,
            volume: 1.0,
            e0_scale: 1.0e7,
            j0_ref: 1.0,
        }
    }
}

impl TrapParams {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("n0_max", self.n0_max),
            ("sigma", self.sigma),
            ("h", self.h),
            ("x_centroid", self.x_centroid),
            ("v_th", self.v_th),
            ("v_d", self.v_d),
            ("volume", self.volume),
            ("e0_scale", self.e0_scale),
            ("j0_ref", self.j0_ref),
        ];
        for (name, value) in fields {
            if !(value.is_finite() && value > 0.0) {
                return Err(param(name, format!("must be finite and > 0, got {value}")));
            }
        }
        if self.h >= 0.1 * self.volume {
            return Err(param(
                "h",
                format!(
                    "deactivated volume {} must be much smaller than the dielectric volume {}",
                    self.h, self.volume
                ),
            ));
        }
        Ok(())
    }

    /// Density scale V/h (1/m^3); the trapped density grows as this times ln(Q/Q* + 1).
    pub fn density_scale(&self) -> f64 {
        self.volume / self.h
    }

    /// Characteristic injected charge Q* (C/m^2).
    pub fn q_star(&self) -> f64 {
        self.volume * self.v_d * Q_E / (self.n0_max * self.h * self.v_th * self.sigma)
    }

    /// Copy with the trap density scale V/h multiplied by `factor` (volume scaled, h kept).
    pub fn with_density_scale_factor(&self, factor: f64) -> Self {
        Self {
            volume: self.volume * factor,
            ..*self
        }
    }
}

/// Junction parameters of the metal/Nb:SrTiO3 Schottky contact.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaterialParams {
    /// Zero-field relative permittivity.
    pub eps_zero: f64,
    /// Field controlling the permittivity roll-off (V/m).
    pub eps_field_scale: f64,
    /// Schottky barrier height (eV).
    pub barrier_height: f64,
    /// Diode ideality factor.
    pub ideality: f64,
    /// Donor density (1/m^3).
    pub donor_density: f64,
    /// Effective Richardson constant (A/(m^2 K^2)).
    pub richardson_const: f64,
    /// Temperature (K).
    pub temperature: f64,
    /// Effective conduction-band density of states (1/m^3), used for the built-in potential.
    pub conduction_dos: f64,
    pub trap: TrapParams,
}

impl Default for MaterialParams {
    fn default() -> Self {
        Self {
            eps_zero: 300.0,
            eps_field_scale: 1.0e7,
            barrier_height: 0.649,
            ideality: 4.0,
            donor_density: 3.3e25,
            richardson_const: 1.56e6,
            temperature: 300.0,
            conduction_dos: 3.7e26,
            trap: TrapParams::default(),
        }
    }
}

impl MaterialParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.eps_zero.is_finite() && self.eps_zero > 1.0) {
            return Err(param("eps_zero", format!("must exceed 1, got {}", self.eps_zero)));
        }
        if !(self.eps_field_scale > 0.0) {
            return Err(param("eps_field_scale", "must be > 0"));
        }
        if !(self.barrier_height.is_finite() && self.barrier_height > 0.0) {
            return Err(param(
                "barrier_height",
                format!("Schottky contact needs a positive barrier, got {}", self.barrier_height),
            ));
        }
        if !(self.ideality.is_finite() && self.ideality >= 1.0) {
            return Err(param("ideality", format!("must be >= 1, got {}", self.ideality)));
        }
        if !(self.donor_density.is_finite() && self.donor_density > 0.0) {
            return Err(param("donor_density", "must be finite and > 0"));
        }
        if !(self.richardson_const.is_finite() && self.richardson_const > 0.0) {
            return Err(param("richardson_const", "must be finite and > 0"));
        }
        if !(self.temperature.is_finite() && self.temperature > 0.0) {
            return Err(param("temperature", "must be finite and > 0"));
        }
        if !(self.conduction_dos.is_finite() && self.conduction_dos > 0.0) {
            return Err(param("conduction_dos", "must be finite and > 0"));
        }
        self.trap.validate()
    }

    /// Built-in potential V_bi = phi_B - kT/q ln(N_c/N_d) (V).
    pub fn built_in_potential(&self) -> f64 {
        self.barrier_height
            - thermal_voltage(self.temperature) * (self.conduction_dos / self.donor_density).ln()
    }

    /// Absolute zero-field permittivity eps0 * eps_vac (F/m).
    pub fn abs_permittivity_zero(&self) -> f64 {
        self.eps_zero * EPS_VAC
    }
}

/// Circular top electrode on a semiconducting substrate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeviceGeometry {
    /// Electrode radius (m).
    pub radius: f64,
    /// Substrate thickness between the electrode and the back contact (m).
    pub substrate_thickness: f64,
    /// Width of the perimeter annulus treated as the edge zone (m).
    pub edge_zone_width: f64,
    /// Fraction of the simulation-domain top surface covered by the electrode.
    /// 1 means the electrode spans the whole top face (parallel plate).
    pub electrode_coverage: f64,
}

pub const DEFAULT_EDGE_ZONE_WIDTH: f64 = 200e-9;
pub const DEFAULT_SUBSTRATE_THICKNESS: f64 = 0.5e-3;

impl DeviceGeometry {
    /// Geometry with the default substrate and edge zone. The lateral domain is as
    /// wide as the substrate is thick, and never narrower than three radii.
    pub fn new(radius: f64) -> Result<Self> {
        Self::with_edge_zone(radius, DEFAULT_SUBSTRATE_THICKNESS, DEFAULT_EDGE_ZONE_WIDTH)
    }

    pub fn with_edge_zone(radius: f64, substrate_thickness: f64, edge_zone_width: f64) -> Result<Self> {
        let domain = (3.0 * radius).max(substrate_thickness);
        let g = Self {
            radius,
            substrate_thickness,
            edge_zone_width,
            electrode_coverage: (radius / domain).powi(2),
        };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.radius.is_finite() && self.radius > 0.0) {
            return Err(param("radius", format!("must be > 0, got {}", self.radius)));
        }
        if !(self.substrate_thickness.is_finite() && self.substrate_thickness > 0.0) {
            return Err(param("substrate_thickness", "must be > 0"));
        }
        if !(self.edge_zone_width > 0.0 && self.edge_zone_width < self.radius) {
            return Err(param(
                "edge_zone_width",
                format!(
                    "must satisfy 0 < width < radius, got width {} for radius {}",
                    self.edge_zone_width, self.radius
                ),
            ));
        }
        if !(self.electrode_coverage > 0.0 && self.electrode_coverage <= 1.0) {
            return Err(param("electrode_coverage", "must lie in (0, 1]"));
        }
        Ok(())
    }

    pub fn area(&self) -> f64 {
        PI * self.radius * self.radius
    }

    pub fn perimeter(&self) -> f64 {
        2.0 * PI * self.radius
    }

    /// Perimeter-to-area ratio, 2/r.
    pub fn perimeter_to_area(&self) -> f64 {
        2.0 / self.radius
    }

    /// Area of the central disc inside the edge annulus.
    pub fn center_area(&self) -> f64 {
        let rc = self.radius - self.edge_zone_width;
        PI * rc * rc
    }

    /// Area of the perimeter annulus.
    pub fn edge_area(&self) -> f64 {
        self.area() - self.center_area()
    }

    /// Radius of the simulated substrate column.
    pub fn domain_radius(&self) -> f64 {
        if self.electrode_coverage >= 1.0 {
            self.radius
        } else {
            self.radius / self.electrode_coverage.sqrt()
        }
    }
}
