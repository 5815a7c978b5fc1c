use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::DeviceGeometry;

/// Tensor-product mesh in cylindrical (r, z) coordinates. `z = 0` is the grounded
/// back contact and the last `z` node is the electrode interface.
#[derive(Debug, Clone, PartialEq)]
pub struct AxisymMesh {
    pub r_nodes: Vec<f64>,
    pub z_nodes: Vec<f64>,
    /// Index of the r node that coincides with the electrode edge.
    pub edge_index: usize,
    pub grading: MeshRule,
}

/// How a mesh is graded towards the electrode edge and the interface.
///
/// Cells start at `h_min` at the edge (radially, both sides) and at the interface
/// (vertically) and grow geometrically by `growth` up to `max_cell_fraction`
/// times the domain extent in that direction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MeshRule {
    /// Finest cell as a fraction of the electrode radius.
    pub h_min_fraction: f64,
    pub growth: f64,
    pub max_cell_fraction: f64,
    /// Uniform subdivision applied after grading (1 = none, 2 = every cell halved, ...).
    pub subdivide: usize,
}

impl Default for MeshRule {
    fn default() -> Self {
        Self { h_min_fraction: 1.0e-3, growth: 1.15, max_cell_fraction: 0.05, subdivide: 1 }
    }
}

impl MeshRule {
    pub fn refined(&self, level: u32) -> Self {
        Self { subdivide: self.subdivide * 2usize.pow(level), ..*self }
    }
}

/// Graded offsets 0 = d_0 < d_1 < ... < d_n = length, starting at `h0`.
fn graded(length: f64, h0: f64, growth: f64, h_max: f64) -> Vec<f64> {
    let mut d = vec![0.0];
    let mut h = h0.min(length);
    let mut last = 0.0;
    while last + h < length * (1.0 - 1e-12) {
        last += h;
        d.push(last);
        h = (h * growth).min(h_max.max(h0));
    }
    // Merge a sliver at the far end into its neighbour.
    if d.len() > 1 && length - last < 0.5 * (last - d[d.len() - 2]) {
        d.pop();
    }
    d.push(length);
    d
}

fn subdivide(nodes: &[f64], parts: usize) -> Vec<f64> {
    if parts <= 1 {
        return nodes.to_vec();
    }
    let mut out = Vec::with_capacity((nodes.len() - 1) * parts + 1);
    for w in nodes.windows(2) {
        for k in 0..parts {
            out.push(w[0] + (w[1] - w[0]) * k as f64 / parts as f64);
        }
    }
    out.push(*nodes.last().unwrap());
    out
}

impl AxisymMesh {
    pub fn build(geom: &DeviceGeometry, rule: &MeshRule) -> Result<Self> {
        geom.validate()?;
        if !(rule.h_min_fraction > 0.0 && rule.growth >= 1.0 && rule.max_cell_fraction > 0.0) {
            return Err(Error::Mesh(format!("invalid mesh rule {rule:?}")));
        }
        let a = geom.radius;
        let domain = geom.domain_radius();
        let thickness = geom.substrate_thickness;
        let h0 = rule.h_min_fraction * a;

        // Inside the electrode: fine at the edge, coarsening towards the axis.
        let inner = graded(a, h0, rule.growth, rule.max_cell_fraction * a);
        let mut r: Vec<f64> = inner.iter().rev().map(|d| a - d).collect();
        r[0] = 0.0;
        let edge_index = r.len() - 1;
        if domain > a * (1.0 + 1e-12) {
            let outer = graded(domain - a, h0, rule.growth, rule.max_cell_fraction * domain);
            r.extend(outer.iter().skip(1).map(|d| a + d));
        }
        let from_top = graded(thickness, h0, rule.growth, rule.max_cell_fraction * thickness);
        let mut z: Vec<f64> = from_top.iter().rev().map(|d| thickness - d).collect();
        z[0] = 0.0;

        let edge_index = edge_index * rule.subdivide.max(1);
        let mesh = Self {
            r_nodes: subdivide(&r, rule.subdivide),
            z_nodes: subdivide(&z, rule.subdivide),
            edge_index,
            grading: *rule,
        };
        mesh.check(geom)?;
        Ok(mesh)
    }

    /// Checks ordering, edge alignment and resolution of the edge zone.
    pub fn check(&self, geom: &DeviceGeometry) -> Result<()> {
        let increasing = |v: &[f64]| v.windows(2).all(|w| w[1] > w[0]);
        if !increasing(&self.r_nodes) || !increasing(&self.z_nodes) {
            return Err(Error::Mesh("node coordinates must be strictly increasing".into()));
        }
        if self.r_nodes.len() < 2 || self.z_nodes.len() < 3 {
            return Err(Error::Mesh("mesh needs at least 2 radial and 3 vertical nodes".into()));
        }
        let edge = self.r_nodes.get(self.edge_index).copied().unwrap_or(f64::NAN);
        if (edge - geom.radius).abs() > 1e-9 * geom.radius {
            return Err(Error::Mesh(format!(
                "electrode edge {} is not a mesh node (node {} at {edge})",
                geom.radius, self.edge_index
            )));
        }
        let full = geom.electrode_coverage >= 1.0;
        if !full {
            let lo = geom.radius - geom.edge_zone_width;
            let cells = self.r_nodes[..=self.edge_index]
                .windows(2)
                .filter(|w| w[1] > lo + 1e-12 * geom.radius)
                .count();
            if cells < 4 {
                return Err(Error::Mesh(format!(
                    "only {cells} cells across the {:e} m edge zone; need at least 4",
                    geom.edge_zone_width
                )));
            }
        }
        let r_end = *self.r_nodes.last().unwrap();
        if (r_end - geom.domain_radius()).abs() > 1e-9 * r_end {
            return Err(Error::Mesh("radial nodes do not span the domain".into()));
        }
        Ok(())
    }

    pub fn nr(&self) -> usize {
        self.r_nodes.len()
    }

    pub fn nz(&self) -> usize {
        self.z_nodes.len()
    }

    pub fn thickness(&self) -> f64 {
        *self.z_nodes.last().unwrap()
    }

    /// Height of the cell touching the interface.
    pub fn top_cell(&self) -> f64 {
        let n = self.nz();
        self.z_nodes[n - 1] - self.z_nodes[n - 2]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn graded_hits_both_ends() {
        let d = graded(1.0, 1e-3, 1.2, 0.1);
        assert_eq!(d[0], 0.0);
        assert_eq!(*d.last().unwrap(), 1.0);
        assert!(d.windows(2).all(|w| w[1] > w[0]));
        assert!((d[1] - 1e-3).abs() < 1e-15);
    }

    #[test]
    fn edge_is_a_node_and_resolved() {
        let g = DeviceGeometry::new(1e-6).unwrap();
        let m = AxisymMesh::build(&g, &MeshRule::default()).unwrap();
        assert_eq!(m.r_nodes[m.edge_index], 1e-6);
        assert_eq!(m.r_nodes[0], 0.0);
        assert!((m.thickness() - 0.5e-3).abs() < 1e-15);
        let m2 = AxisymMesh::build(&g, &MeshRule::default().refined(1)).unwrap();
        assert_eq!(m2.r_nodes[m2.edge_index], 1e-6);
        assert_eq!(m2.nr(), 2 * m.nr() - 1);
    }

    #[test]
    fn coarse_edge_rejected() {
        let g = DeviceGeometry::new(1e-6).unwrap();
        let rule = MeshRule { h_min_fraction: 0.1, growth: 1.0, max_cell_fraction: 0.1, subdivide: 1 };
        assert!(matches!(AxisymMesh::build(&g, &rule), Err(Error::Mesh(_))));
    }
}
