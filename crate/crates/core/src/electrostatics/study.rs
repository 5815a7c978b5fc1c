use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};
use crate::params::{DeviceGeometry, DEFAULT_SUBSTRATE_THICKNESS};
use crate::permittivity::PermittivityModel;

use super::mesh::{AxisymMesh, MeshRule};
use super::profile::{interface_profile, FieldProfile};
use super::solver::solve;

/// Where edge fields are read out. The ideal rim field is singular, so every
/// comparison across radii samples at
/// `depth = max(depth_fraction * a * (a / reference_radius)^depth_scaling, depth_floor)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SamplingRule {
    pub depth_fraction: f64,
    pub depth_scaling: f64,
    pub reference_radius: f64,
    /// Absolute resolution limit of the readout (m).
    pub depth_floor: f64,
}

impl SamplingRule {
    /// Readout used for the micrometre radius series.
    pub fn micron() -> Self {
        Self { depth_fraction: 2.5e-3, depth_scaling: 0.05, reference_radius: 1e-6, depth_floor: 0.0 }
    }

    /// Readout for the reduced-substrate nanometre series, limited to a 20 nm resolution.
    pub fn nanoscale() -> Self {
        Self { depth_floor: 20e-9, ..Self::micron() }
    }

    pub fn depth(&self, radius: f64) -> f64 {
        let scaled = self.depth_fraction * radius * (radius / self.reference_radius).powf(self.depth_scaling);
        scaled.max(self.depth_floor)
    }
}

impl Default for SamplingRule {
    fn default() -> Self {
        Self::micron()
    }
}

/// Geometry, meshing and readout applied identically to every radius of a study.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StudyRule {
    pub mesh: MeshRule,
    pub sampling: SamplingRule,
    /// Substrate thickness for radii of at least `shrink_below` (m).
    pub substrate_thickness: f64,
    /// Below this radius the substrate shrinks in proportion to the radius.
    pub shrink_below: f64,
    /// Edge-zone width as a fraction of the radius (only used to validate meshes).
    pub edge_zone_fraction: f64,
    pub tol: f64,
}

impl Default for StudyRule {
    fn default() -> Self {
        Self {
            mesh: MeshRule::default(),
            sampling: SamplingRule::micron(),
            substrate_thickness: DEFAULT_SUBSTRATE_THICKNESS,
            shrink_below: 1e-6,
            edge_zone_fraction: 0.2,
            tol: 1e-9,
        }
    }
}

impl StudyRule {
    pub fn nanoscale() -> Self {
        Self { sampling: SamplingRule::nanoscale(), ..Self::default() }
    }

    pub fn geometry(&self, radius: f64) -> Result<DeviceGeometry> {
        let thickness = if radius < self.shrink_below {
            self.substrate_thickness * radius / self.shrink_below
        } else {
            self.substrate_thickness
        };
        DeviceGeometry::with_edge_zone(radius, thickness, self.edge_zone_fraction * radius)
    }

    /// Mesh rule fine enough to put at least two cells above the sampling depth.
    pub fn mesh_rule(&self, radius: f64) -> MeshRule {
        let need = 0.5 * self.sampling.depth(radius) / radius;
        MeshRule { h_min_fraction: self.mesh.h_min_fraction.min(need), ..self.mesh }
    }

    /// Solves one radius and samples its profile.
    pub fn profile(&self, radius: f64, perm: &PermittivityModel, v_applied: f64) -> Result<FieldProfile> {
        let run = || -> Result<FieldProfile> {
            let geom = self.geometry(radius)?;
            let mesh = AxisymMesh::build(&geom, &self.mesh_rule(radius))?;
            let field = solve(&geom, perm, v_applied, &mesh, self.tol)?;
            interface_profile(&field, &geom, self.sampling.depth(radius))
        };
        run().map_err(|e| Error::AtRadius { radius, source: Box::new(e) })
    }
}

/// Profiles for a descending list of radii under one study rule.
pub fn radius_study(
    radii: &[f64],
    perm: &PermittivityModel,
    v_applied: f64,
    rule: &StudyRule,
) -> Result<Vec<FieldProfile>> {
    if radii.is_empty() {
        return Err(param("radii", "no radii given"));
    }
    if radii.windows(2).any(|w| w[1] > w[0]) {
        return Err(param("radii", "radii must be sorted in descending order"));
    }
    radii.iter().map(|&r| rule.profile(r, perm, v_applied)).collect()
}

/// Width of the annulus where the normal field exceeds twice the axial field.
pub fn calibrate_edge_zone_width(profile: &FieldProfile) -> f64 {
    profile.span_above(2.0)
}

/// Mesh-refinement behaviour of the axial and rim fields.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    /// Uniform subdivision factor of each level.
    pub subdivisions: Vec<usize>,
    /// Axial field at the standardised depth per level (V/m).
    pub e_center: Vec<f64>,
    /// Rim field at the standardised depth per level (V/m).
    pub e_max: Vec<f64>,
    /// Rim field one top cell below the interface per level; grows without bound.
    pub raw_e_max: Vec<f64>,
    /// Observed order of the axial field from the three finest levels.
    pub observed_order: f64,
    /// Richardson-extrapolated axial field from the three finest levels.
    pub e_center_extrapolated: f64,
    /// The rim field is singular and reported only at the standardised readout.
    pub e_max_mesh_sensitive: bool,
}

impl ConvergenceReport {
    /// Relative gap between the finest axial value and its extrapolated limit.
    pub fn extrapolation_gap(&self) -> f64 {
        let last = *self.e_center.last().unwrap();
        ((last - self.e_center_extrapolated) / self.e_center_extrapolated).abs()
    }
}

/// Solves on `levels` nested meshes, each halving every cell of the previous one.
pub fn grid_convergence(
    geom: &DeviceGeometry,
    perm: &PermittivityModel,
    v_applied: f64,
    levels: usize,
    rule: &StudyRule,
) -> Result<ConvergenceReport> {
    if levels < 3 {
        return Err(param("refinement_levels", "at least three levels are needed"));
    }
    let depth = rule.sampling.depth(geom.radius);
    let base = rule.mesh_rule(geom.radius);
    let mut report = ConvergenceReport {
        subdivisions: Vec::new(),
        e_center: Vec::new(),
        e_max: Vec::new(),
        raw_e_max: Vec::new(),
        observed_order: f64::NAN,
        e_center_extrapolated: f64::NAN,
        e_max_mesh_sensitive: true,
    };
    for level in 0..levels {
        let mesh_rule = base.refined(level as u32);
        let mesh = AxisymMesh::build(geom, &mesh_rule)?;
        let field = solve(geom, perm, v_applied, &mesh, rule.tol)?;
        let std = interface_profile(&field, geom, depth)?;
        let raw = interface_profile(&field, geom, mesh.top_cell())?;
        report.subdivisions.push(mesh_rule.subdivide);
        report.e_center.push(std.e_center);
        report.e_max.push(std.e_max);
        report.raw_e_max.push(raw.e_max);
    }
    let n = levels;
    let (f1, f2, f3) = (report.e_center[n - 3], report.e_center[n - 2], report.e_center[n - 1]);
    let (d1, d2) = (f2 - f1, f3 - f2);
    if d2 == 0.0 || d1 == 0.0 {
        report.observed_order = f64::INFINITY;
        report.e_center_extrapolated = f3;
    } else {
        let p = (d1 / d2).abs().log2();
        report.observed_order = p;
        report.e_center_extrapolated = f3 + d2 / (2f64.powf(p) - 1.0);
    }
    Ok(report)
}
