use serde::{Deserialize, Serialize};

use crate::error::{param, Result};
use crate::params::DeviceGeometry;

use super::solver::PotentialField;

/// Normal field `e_z = -d phi / dz` sampled along r at a fixed depth below the interface.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldProfile {
    pub radius: f64,
    pub depth: f64,
    pub v_applied: f64,
    pub r: Vec<f64>,
    pub e_z: Vec<f64>,
    /// Field on the axis (V/m).
    pub e_center: f64,
    /// Signed field of largest magnitude (V/m).
    pub e_max: f64,
    /// Radius at which `e_max` occurs (m).
    pub r_at_max: f64,
    /// `e_max / e_center`.
    pub enhancement: f64,
}

impl FieldProfile {
    /// Radial span over which the field exceeds `factor` times the axial value.
    pub fn span_above(&self, factor: f64) -> f64 {
        let threshold = factor * self.e_center.abs();
        let inside: Vec<f64> = self
            .r
            .iter()
            .zip(&self.e_z)
            .filter(|(_, e)| e.abs() > threshold)
            .map(|(r, _)| *r)
            .collect();
        match (inside.first(), inside.last()) {
            (Some(lo), Some(hi)) => hi - lo,
            _ => 0.0,
        }
    }

    /// Mean of `e_z / e_center` over `r` in `[lo, hi]`, weighted by `r dr`.
    pub fn mean_gain(&self, lo: f64, hi: f64) -> f64 {
        let (mut num, mut den) = (0.0, 0.0);
        for k in 0..self.r.len().saturating_sub(1) {
            let (a, b) = (self.r[k].max(lo), self.r[k + 1].min(hi));
            if b <= a {
                continue;
            }
            let w = 0.5 * (b * b - a * a);
            num += w * 0.5 * (self.e_z[k] + self.e_z[k + 1]);
            den += w;
        }
        if den == 0.0 {
            1.0
        } else {
            num / den / self.e_center
        }
    }
}

/// Samples the normal field of `field` at `depth` below the interface.
///
/// Vertical central differences live at cell mid-heights; the value at `depth` is
/// interpolated linearly between the two bracketing mid-heights, so `depth` must
/// be at least one cell below the interface.
pub fn interface_profile(field: &PotentialField, geom: &DeviceGeometry, depth: f64) -> Result<FieldProfile> {
    let mesh = &field.mesh;
    let z = &mesh.z_nodes;
    let nr = mesh.nr();
    let thickness = mesh.thickness();
    if !(depth.is_finite() && depth >= mesh.top_cell() * (1.0 - 1e-9) && depth < thickness) {
        return Err(param(
            "depth",
            format!(
                "{depth:e} m is outside [{:e}, {thickness:e}) m (one cell below the interface)",
                mesh.top_cell()
            ),
        ));
    }
    let target = thickness - depth;
    let mids: Vec<f64> = z.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
    // mids are increasing; find k with mids[k] <= target <= mids[k + 1].
    let k = match mids.iter().rposition(|&m| m <= target) {
        Some(k) if k + 1 < mids.len() => k,
        Some(k) => k - 1,
        None => 0,
    };
    let w = ((target - mids[k]) / (mids[k + 1] - mids[k])).clamp(0.0, 1.0);
    let ez_mid = |j: usize, i: usize| -(field.at(i, j + 1) - field.at(i, j)) / (z[j + 1] - z[j]);

    let r = mesh.r_nodes.clone();
    let e_z: Vec<f64> = (0..nr).map(|i| (1.0 - w) * ez_mid(k, i) + w * ez_mid(k + 1, i)).collect();
    let e_center = e_z[0];
    let (imax, &e_max) = e_z
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
        .expect("non-empty profile");
    Ok(FieldProfile {
        radius: geom.radius,
        depth,
        v_applied: field.v_applied,
        r_at_max: r[imax],
        e_center,
        e_max,
        enhancement: if e_center != 0.0 { e_max / e_center } else { 1.0 },
        r,
        e_z,
    })
}
