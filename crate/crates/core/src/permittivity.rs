//! Field-dependent permittivity of Nb:SrTiO3 and the Schottky depletion width it implies.
//!
//! The relative permittivity rolls off as
//! `eps(E) = max(1, eps_zero / sqrt(1 + (E / e_char)^2))`, even in E and
//! non-increasing in |E|. The depletion width solves the coupled pair
//! `W = sqrt(2 eps(E_max) eps_vac (V_bi + V_r) / (q N_d))`,
//! `E_max = q N_d W / (eps(E_max) eps_vac)`. Eliminating `eps` gives
//! `E_max W = 2 (V_bi + V_r)`, so only a scalar fixed point in `W` remains.

use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};
use crate::params::MaterialParams;
use crate::units::{EPS_VAC, Q_E};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PermittivityModel {
    pub eps_zero: f64,
    /// Characteristic roll-off field (V/m). `f64::INFINITY` gives a constant permittivity.
    pub e_char: f64,
}

pub const DEFAULT_E_CHAR: f64 = 1.0e7;

impl PermittivityModel {
    pub fn new(eps_zero: f64, e_char: f64) -> Result<Self> {
        if !(eps_zero.is_finite() && eps_zero >= 1.0) {
            return Err(param("eps_zero", format!("must be >= 1, got {eps_zero}")));
        }
        if !(e_char > 0.0) {
            return Err(param("e_char", format!("must be > 0, got {e_char}")));
        }
        Ok(Self { eps_zero, e_char })
    }

    pub fn constant(eps_zero: f64) -> Self {
        Self { eps_zero, e_char: f64::INFINITY }
    }

    pub fn from_material(mat: &MaterialParams) -> Self {
        Self { eps_zero: mat.eps_zero, e_char: mat.eps_field_scale }
    }

    pub fn is_constant(&self) -> bool {
        self.e_char.is_infinite()
    }

    /// Relative permittivity at field `e_field` (V/m).
    pub fn eps(&self, e_field: f64) -> f64 {
        let x = e_field / self.e_char;
        (self.eps_zero / (1.0 + x * x).sqrt()).max(1.0)
    }
}

/// Free-function form of [`PermittivityModel::eps`].
pub fn eps(model: &PermittivityModel, e_field: f64) -> f64 {
    model.eps(e_field)
}

/// Outcome of the depletion-width fixed point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Depletion {
    /// Width (m).
    pub width: f64,
    /// Peak field at the interface (V/m).
    pub e_max: f64,
    /// Relative permittivity at the peak field.
    pub eps_r: f64,
    pub iterations: usize,
}

const MAX_ITER: usize = 500;
const REL_TOL: f64 = 1e-10;

/// Depletion width under reverse bias `v_reverse` (V, >= 0) using the material's
/// own permittivity model.
pub fn depletion_width(mat: &MaterialParams, v_reverse: f64) -> Result<Depletion> {
    depletion_width_with(mat, &PermittivityModel::from_material(mat), v_reverse, 1.0)
}

/// Depletion width with the permittivity evaluated at `field_gain` times the
/// junction field, as happens where electrode edges crowd the field lines.
pub fn depletion_width_with(
    mat: &MaterialParams,
    perm: &PermittivityModel,
    v_reverse: f64,
    field_gain: f64,
) -> Result<Depletion> {
    if !(v_reverse.is_finite() && v_reverse >= 0.0) {
        return Err(param("v_reverse", format!("must be finite and >= 0, got {v_reverse}")));
    }
    if !(field_gain.is_finite() && field_gain >= 1.0) {
        return Err(param("field_gain", format!("must be >= 1, got {field_gain}")));
    }
    let v_total = mat.built_in_potential() + v_reverse;
    if !(v_total > 0.0) {
        return Err(param(
            "v_reverse",
            format!("total junction potential {v_total} V must be positive"),
        ));
    }
    depletion_at_potential(mat, perm, v_total, field_gain)
}

/// Depletion width for a given total band bending `v_total` = V_bi - V (V > 0),
/// which also covers forward bias below flat band.
pub fn depletion_at_potential(
    mat: &MaterialParams,
    perm: &PermittivityModel,
    v_total: f64,
    field_gain: f64,
) -> Result<Depletion> {
    if !(v_total.is_finite() && v_total > 0.0) {
        return Err(param("v_total", format!("must be finite and > 0, got {v_total}")));
    }
    if !(field_gain.is_finite() && field_gain >= 1.0) {
        return Err(param("field_gain", format!("must be >= 1, got {field_gain}")));
    }
    let k = 2.0 * EPS_VAC * v_total / (Q_E * mat.donor_density);
    let update = |w: f64| (k * perm.eps(field_gain * 2.0 * v_total / w)).sqrt();

    let mut w = (k * perm.eps_zero).sqrt();
    let mut history = Vec::new();
    for it in 1..=MAX_ITER {
        let next = update(w);
        let change = ((next - w) / next).abs();
        history.push(change);
        w = next;
        if change < REL_TOL {
            let e_max = 2.0 * v_total / w;
            return Ok(Depletion { width: w, e_max, eps_r: perm.eps(field_gain * e_max), iterations: it });
        }
    }
    Err(Error::Convergence {
        method: "depletion width fixed point",
        iterations: MAX_ITER,
        residual: *history.last().unwrap_or(&f64::NAN),
        history,
    })
}
