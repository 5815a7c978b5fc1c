use crate::error::{param, Error, Result};
use crate::params::DeviceGeometry;
use crate::permittivity::PermittivityModel;
use crate::units::EPS_VAC;

use super::banded::BandedSpd;
use super::mesh::AxisymMesh;

const PICARD_DAMPING: f64 = 0.5;
const PICARD_MAX_ITER: usize = 200;
const ANDERSON_DEPTH: usize = 5;

/// Potential on the mesh nodes, stored row-major in z (`phi[j * nr + i]`).
#[derive(Debug, Clone, PartialEq)]
pub struct PotentialField {
    pub phi: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
    /// Largest nodal update of the last iteration (V); zero for a linear solve.
    pub residual: f64,
    pub v_applied: f64,
    pub mesh: AxisymMesh,
    /// Relative permittivity of each cell (`(nz - 1) x (nr - 1)`, row-major in z).
    pub cell_eps: Vec<f64>,
}

impl PotentialField {
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.phi[j * self.mesh.nr() + i]
    }
}

#[derive(Clone, Copy, PartialEq)]
enum Node {
    Unknown(usize),
    Fixed(f64),
}

struct System<'a> {
    mesh: &'a AxisymMesh,
    nodes: Vec<Node>,
    n_unknown: usize,
}

impl<'a> System<'a> {
    fn new(mesh: &'a AxisymMesh, electrode_last: usize, v: f64) -> Self {
        let (nr, nz) = (mesh.nr(), mesh.nz());
        let mut nodes = Vec::with_capacity(nr * nz);
        let mut k = 0;
        for j in 0..nz {
            for i in 0..nr {
                let node = if j == 0 {
                    Node::Fixed(0.0)
                } else if j == nz - 1 && i <= electrode_last {
                    Node::Fixed(v)
                } else {
                    k += 1;
                    Node::Unknown(k - 1)
                };
                nodes.push(node);
            }
        }
        Self { mesh, nodes, n_unknown: k }
    }

    /// Conductance-like couplings `(p, q, a_pq)` between neighbouring nodes for the
    /// given cell permittivities (relative; multiply by eps_vac for SI flux per radian).
    fn couplings(&self, cell_eps: &[f64]) -> Vec<(usize, usize, f64)> {
        let (r, z) = (&self.mesh.r_nodes, &self.mesh.z_nodes);
        let (nr, nz) = (r.len(), z.len());
        let ncr = nr - 1;
        let eps = |i: usize, j: usize| cell_eps[j * ncr + i];
        let mut out = Vec::with_capacity(2 * nr * nz);
        for j in 0..nz {
            for i in 0..nr {
                let p = j * nr + i;
                if i + 1 < nr {
                    let dr = r[i + 1] - r[i];
                    let rm = 0.5 * (r[i] + r[i + 1]);
                    let mut h = 0.0;
                    if j > 0 {
                        h += eps(i, j - 1) * 0.5 * (z[j] - z[j - 1]);
                    }
                    if j + 1 < nz {
                        h += eps(i, j) * 0.5 * (z[j + 1] - z[j]);
                    }
                    out.push((p, p + 1, rm * h / dr));
                }
                if j + 1 < nz {
                    let dz = z[j + 1] - z[j];
                    let mut s = 0.0;
                    if i > 0 {
                        let lo = 0.5 * (r[i - 1] + r[i]);
                        s += eps(i - 1, j) * 0.5 * (r[i] * r[i] - lo * lo);
                    }
                    if i + 1 < nr {
                        let hi = 0.5 * (r[i] + r[i + 1]);
                        s += eps(i, j) * 0.5 * (hi * hi - r[i] * r[i]);
                    }
                    out.push((p, p + nr, s / dz));
                }
            }
        }
        out
    }

    fn solve_linear(&self, cell_eps: &[f64]) -> Result<Vec<f64>> {
        let nr = self.mesh.nr();
        let mut a = BandedSpd::zeros(self.n_unknown, nr);
        let mut rhs = vec![0.0; self.n_unknown];
        for (p, q, c) in self.couplings(cell_eps) {
            match (self.nodes[p], self.nodes[q]) {
                (Node::Unknown(u), Node::Unknown(w)) => {
                    a.add(u, u, c);
                    a.add(w, w, c);
                    a.add(u, w, -c);
                }
                (Node::Unknown(u), Node::Fixed(v)) | (Node::Fixed(v), Node::Unknown(u)) => {
                    a.add(u, u, c);
                    rhs[u] += c * v;
                }
                (Node::Fixed(_), Node::Fixed(_)) => {}
            }
        }
        a.factor()?.solve(&mut rhs);
        Ok(self
            .nodes
            .iter()
            .map(|n| match *n {
                Node::Fixed(v) => v,
                Node::Unknown(u) => rhs[u],
            })
            .collect())
    }
}

/// Magnitude of the field in every cell, from the four corner potentials.
fn cell_fields(mesh: &AxisymMesh, phi: &[f64]) -> Vec<f64> {
    let (r, z) = (&mesh.r_nodes, &mesh.z_nodes);
    let nr = r.len();
    let mut out = Vec::with_capacity((nr - 1) * (z.len() - 1));
    for j in 0..z.len() - 1 {
        for i in 0..nr - 1 {
            let p = |ii: usize, jj: usize| phi[jj * nr + ii];
            let er = 0.5 * ((p(i + 1, j) - p(i, j)) + (p(i + 1, j + 1) - p(i, j + 1))) / (r[i + 1] - r[i]);
            let ez = 0.5 * ((p(i, j + 1) - p(i, j)) + (p(i + 1, j + 1) - p(i + 1, j))) / (z[j + 1] - z[j]);
            out.push(er.hypot(ez));
        }
    }
    out
}

/// Solves div(eps(|grad phi|) grad phi) = 0 in the axisymmetric substrate with the
/// electrode disc at `v_applied`, the back contact grounded and zero normal flux on
/// the free top surface, the outer wall and the axis. Field-dependent permittivity
/// is handled by damped Picard iteration (with Anderson mixing of the last few
/// iterates) until the largest damped update is below `tol`.
pub fn solve(
    geom: &DeviceGeometry,
    perm: &PermittivityModel,
    v_applied: f64,
    mesh: &AxisymMesh,
    tol: f64,
) -> Result<PotentialField> {
    if !(tol > 0.0) {
        return Err(param("tol", "solver tolerance must be > 0"));
    }
    if !v_applied.is_finite() {
        return Err(param("v_applied", "must be finite"));
    }
    mesh.check(geom)?;
    let r_domain = *mesh.r_nodes.last().unwrap();
    if geom.electrode_coverage < 1.0 && r_domain < 3.0 * geom.radius * (1.0 - 1e-12) {
        return Err(Error::Mesh(format!(
            "domain radius {r_domain:e} m is below three electrode radii"
        )));
    }
    let system = System::new(mesh, mesh.edge_index, v_applied);
    let n_cells = (mesh.nr() - 1) * (mesh.nz() - 1);
    let mut cell_eps = vec![perm.eps_zero; n_cells];
    let mut phi = system.solve_linear(&cell_eps)?;

    if perm.is_constant() || v_applied == 0.0 {
        return Ok(PotentialField {
            phi,
            converged: true,
            iterations: 1,
            residual: 0.0,
            v_applied,
            mesh: mesh.clone(),
            cell_eps,
        });
    }

    let mut history = Vec::new();
    let mut accel = Anderson::new(ANDERSON_DEPTH);
    for it in 2..=PICARD_MAX_ITER {
        for (e, f) in cell_eps.iter_mut().zip(cell_fields(mesh, &phi)) {
            *e = perm.eps(f);
        }
        let next = system.solve_linear(&cell_eps)?;
        let step: Vec<f64> = phi.iter().zip(&next).map(|(p, n)| PICARD_DAMPING * (n - p)).collect();
        let max_update = step.iter().fold(0.0f64, |m, d| m.max(d.abs()));
        history.push(max_update);
        if max_update < tol {
            for (p, d) in phi.iter_mut().zip(&step) {
                *p += d;
            }
            for (e, f) in cell_eps.iter_mut().zip(cell_fields(mesh, &phi)) {
                *e = perm.eps(f);
            }
            return Ok(PotentialField {
                phi,
                converged: true,
                iterations: it,
                residual: max_update,
                v_applied,
                mesh: mesh.clone(),
                cell_eps,
            });
        }
        phi = accel.next(&phi, &step);
        if !max_update.is_finite() {
            break;
        }
    }
    Err(Error::Convergence {
        method: "Picard iteration",
        iterations: history.len() + 1,
        residual: history.last().copied().unwrap_or(f64::NAN),
        history,
    })
}

/// Displacement flux (C) leaving the electrode and entering the ground plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FluxBalance {
    pub electrode: f64,
    pub ground: f64,
}

impl FluxBalance {
    pub fn relative_mismatch(&self) -> f64 {
        (self.electrode - self.ground).abs() / self.electrode.abs().max(self.ground.abs())
    }
}

/// Integrated normal displacement flux through the electrode and the back contact,
/// using the same face couplings as the discretisation.
pub fn flux_balance(field: &PotentialField) -> FluxBalance {
    let mesh = &field.mesh;
    let system = System::new(mesh, mesh.edge_index, field.v_applied);
    let scale = 2.0 * std::f64::consts::PI * EPS_VAC;
    let (mut electrode, mut ground) = (0.0, 0.0);
    let is_electrode = |p: usize| {
        matches!(system.nodes[p], Node::Fixed(_)) && p >= mesh.nr() * (mesh.nz() - 1)
    };
    let is_ground = |p: usize| p < mesh.nr();
    for (p, q, c) in system.couplings(&field.cell_eps) {
        let flow = c * (field.phi[p] - field.phi[q]);
        if is_electrode(p) && !is_electrode(q) {
            electrode += flow;
        } else if is_electrode(q) && !is_electrode(p) {
            electrode -= flow;
        }
        if is_ground(p) && !is_ground(q) {
            ground -= flow;
        } else if is_ground(q) && !is_ground(p) {
            ground += flow;
        }
    }
    FluxBalance { electrode: electrode * scale, ground: ground * scale }
}

/// Anderson mixing of the damped Picard map x -> x + f(x).
struct Anderson {
    depth: usize,
    prev: Option<(Vec<f64>, Vec<f64>)>,
    d_f: Vec<Vec<f64>>,
    d_g: Vec<Vec<f64>>,
}

impl Anderson {
    fn new(depth: usize) -> Self {
        Self { depth, prev: None, d_f: Vec::new(), d_g: Vec::new() }
    }

    fn next(&mut self, x: &[f64], f: &[f64]) -> Vec<f64> {
        let g: Vec<f64> = x.iter().zip(f).map(|(a, b)| a + b).collect();
        if let Some((f_old, g_old)) = self.prev.take() {
            self.d_f.push(f.iter().zip(&f_old).map(|(a, b)| a - b).collect());
            self.d_g.push(g.iter().zip(&g_old).map(|(a, b)| a - b).collect());
            if self.d_f.len() > self.depth {
                self.d_f.remove(0);
                self.d_g.remove(0);
            }
        }
        self.prev = Some((f.to_vec(), g.clone()));
        let m = self.d_f.len();
        if m == 0 {
            return g;
        }
        let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
        let mut a = nalgebra::DMatrix::<f64>::zeros(m, m);
        let mut rhs = nalgebra::DVector::<f64>::zeros(m);
        for i in 0..m {
            for j in 0..m {
                a[(i, j)] = dot(&self.d_f[i], &self.d_f[j]);
            }
            rhs[i] = dot(&self.d_f[i], f);
        }
        let scale = (0..m).map(|i| a[(i, i)]).fold(0.0, f64::max);
        for i in 0..m {
            a[(i, i)] += 1e-10 * scale;
        }
        let Some(gamma) = a.cholesky().map(|c| c.solve(&rhs)) else {
            self.d_f.clear();
            self.d_g.clear();
            return g;
        };
        let mut out = g;
        for (k, dg) in self.d_g.iter().enumerate() {
            for (o, d) in out.iter_mut().zip(dg) {
                *o -= gamma[k] * d;
            }
        }
        out
    }
}
