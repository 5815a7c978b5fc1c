//! Run configuration: a nested JSON document whose tables map onto the core
//! parameter types. Unknown keys are rejected and every physical value is
//! validated by the core crate on load.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use schottky_mem::device::DeviceConfig;
use schottky_mem::electrostatics::StudyRule;
use schottky_mem::params::{DeviceGeometry, MaterialParams, TrapParams};
use schottky_mem::permittivity::PermittivityModel;
use schottky_mem::transport::{ConductionLaw, Mechanism};

use crate::error::{CliError, CliResult};

/// Edge-zone width used when none is configured: the span where the -3 V field
/// exceeds twice the axial value for a 1 um electrode.
pub const DEFAULT_EDGE_ZONE_WIDTH: f64 = 124e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MaterialTable {
    pub eps_zero: f64,
    pub eps_field_scale: f64,
    pub barrier_height: f64,
    pub ideality: f64,
    pub donor_density: f64,
    pub richardson_const: f64,
    pub temperature: f64,
    pub conduction_dos: f64,
}

impl Default for MaterialTable {
    fn default() -> Self {
        let m = MaterialParams::default();
        Self {
            eps_zero: m.eps_zero,
            eps_field_scale: m.eps_field_scale,
            barrier_height: m.barrier_height,
            ideality: m.ideality,
            donor_density: m.donor_density,
            richardson_const: m.richardson_const,
            temperature: m.temperature,
            conduction_dos: m.conduction_dos,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GeometryTable {
    /// Electrode radii (m).
    pub radii: Vec<f64>,
    pub substrate_thickness: f64,
    /// Absolute width of the edge annulus (m), the same for every radius.
    pub edge_zone_width: f64,
    /// Edge field gains per radius; solved from the field profiles when absent.
    pub edge_gains: Option<Vec<f64>>,
}

impl Default for GeometryTable {
    fn default() -> Self {
        Self { radii: vec![1e-6, 1e-5, 1e-4], substrate_thickness: 0.5e-3, edge_zone_width: DEFAULT_EDGE_ZONE_WIDTH, edge_gains: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TransportTable {
    pub mechanism: Mechanism,
    pub v0: f64,
    pub j_ref: f64,
    pub barrier_lowering: f64,
}

impl Default for TransportTable {
    fn default() -> Self {
        let d = DeviceConfig::default();
        Self { mechanism: d.law.mechanism, v0: d.law.v0, j_ref: d.law.j_ref, barrier_lowering: d.barrier_lowering }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DeviceTable {
    pub edge_trap_boost: f64,
    pub detrap_rate: f64,
    pub detrap_field: f64,
    pub min_band_bending: f64,
    pub pulse_width: f64,
}

impl Default for DeviceTable {
    fn default() -> Self {
        let d = DeviceConfig::default();
        Self {
            edge_trap_boost: d.edge_trap_boost,
            detrap_rate: d.detrap_rate,
            detrap_field: d.detrap_field,
            min_band_bending: d.min_band_bending,
            pulse_width: d.pulse_width,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverTable {
    /// Bias at which edge gains are solved (V).
    pub v_applied: f64,
    /// Use the field-dependent permittivity instead of the constant eps_zero.
    pub field_dependent_eps: bool,
    pub study: StudyRule,
}

impl Default for SolverTable {
    fn default() -> Self {
        Self { v_applied: -3.0, field_dependent_eps: false, study: StudyRule::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepProtocol {
    pub v_hi: f64,
    pub v_lo: f64,
    /// Sweep rate (V/s).
    pub rate: f64,
    pub cycles: usize,
    /// Time between recorded samples (s).
    pub sample_interval: f64,
    /// Cycles excluded from the drift statistic.
    pub burn_in: usize,
}

impl Default for SweepProtocol {
    fn default() -> Self {
        Self { v_hi: 2.0, v_lo: -3.0, rate: 1.52, cycles: 20, sample_interval: 0.01, burn_in: 10 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RetentionProtocol {
    pub write_v: Vec<f64>,
    pub read_v: Vec<f64>,
    pub t_first: f64,
    pub t_last: f64,
    pub points: usize,
}

impl Default for RetentionProtocol {
    fn default() -> Self {
        Self { write_v: vec![2.0, -3.0], read_v: vec![0.3, -0.5], t_first: 1.0, t_last: 1e3, points: 31 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EnduranceProtocol {
    pub cycles: usize,
    pub set_v: f64,
    pub reset_v: f64,
    pub read_v: f64,
    pub burn_in: usize,
}

impl Default for EnduranceProtocol {
    fn default() -> Self {
        Self { cycles: 100, set_v: 2.0, reset_v: -3.0, read_v: 0.3, burn_in: 10 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MultilevelProtocol {
    pub set_levels: Vec<f64>,
    pub reset_levels: Vec<f64>,
    pub repeats: usize,
    pub read_v: f64,
    pub rate: f64,
}

impl Default for MultilevelProtocol {
    fn default() -> Self {
        Self { set_levels: vec![1.0, 2.0], reset_levels: vec![-2.0, -2.5, -3.0], repeats: 100, read_v: 0.3, rate: 1.52 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FieldMapProtocol {
    /// Radii to solve; the geometry radii when absent.
    pub radii: Option<Vec<f64>>,
    pub v_applied: f64,
}

impl Default for FieldMapProtocol {
    fn default() -> Self {
        Self { radii: None, v_applied: -3.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FitProtocol {
    /// Relative Gaussian noise added to simulated traces before fitting.
    pub noise: f64,
    pub seed: u64,
}

impl Default for FitProtocol {
    fn default() -> Self {
        Self { noise: 0.0, seed: 0 }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProtocolTable {
    pub sweep: SweepProtocol,
    pub retention: RetentionProtocol,
    pub endurance: EnduranceProtocol,
    pub multilevel: MultilevelProtocol,
    pub field_map: FieldMapProtocol,
    pub fit: FitProtocol,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputTable {
    /// Parent directory of per-run artifact directories.
    pub dir: String,
    pub format: Format,
}

impl Default for OutputTable {
    fn default() -> Self {
        Self { dir: "runs".to_string(), format: Format::Csv }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub material: MaterialTable,
    pub trapping: TrapParams,
    pub transport: TransportTable,
    pub device: DeviceTable,
    pub geometry: GeometryTable,
    pub solver: SolverTable,
    pub protocol: ProtocolTable,
    pub output: OutputTable,
}

impl RunConfig {
    pub fn from_json(text: &str) -> CliResult<Self> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        Self::from_json(&text).map_err(|e| match e {
            CliError::Config(m) => CliError::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn material(&self) -> MaterialParams {
        let m = &self.material;
        MaterialParams {
            eps_zero: m.eps_zero,
            eps_field_scale: m.eps_field_scale,
            barrier_height: m.barrier_height,
            ideality: m.ideality,
            donor_density: m.donor_density,
            richardson_const: m.richardson_const,
            temperature: m.temperature,
            conduction_dos: m.conduction_dos,
            trap: self.trapping,
        }
    }

    pub fn device_config(&self) -> DeviceConfig {
        let t = &self.transport;
        let d = &self.device;
        DeviceConfig {
            law: ConductionLaw { mechanism: t.mechanism, v0: t.v0, j_ref: t.j_ref },
            edge_trap_boost: d.edge_trap_boost,
            detrap_rate: d.detrap_rate,
            detrap_field: d.detrap_field,
            barrier_lowering: t.barrier_lowering,
            min_band_bending: d.min_band_bending,
            pulse_width: d.pulse_width,
        }
    }

    pub fn geometry(&self, radius: f64) -> CliResult<DeviceGeometry> {
        Ok(DeviceGeometry::with_edge_zone(radius, self.geometry.substrate_thickness, self.geometry.edge_zone_width)?)
    }

    pub fn solver_permittivity(&self) -> CliResult<PermittivityModel> {
        let mat = self.material();
        if self.solver.field_dependent_eps {
            Ok(PermittivityModel::from_material(&mat))
        } else {
            Ok(PermittivityModel::constant(mat.eps_zero))
        }
    }

    pub fn validate(&self) -> CliResult<()> {
        self.material().validate()?;
        self.device_config().validate()?;
        let g = &self.geometry;
        if g.radii.is_empty() {
            return Err(CliError::Config("geometry.radii must list at least one radius".into()));
        }
        for &r in &g.radii {
            self.geometry(r)?;
        }
        if let Some(gains) = &g.edge_gains {
            if gains.len() != g.radii.len() {
                return Err(CliError::Config(format!(
                    "geometry.edge_gains has {} entries for {} radii",
                    gains.len(),
                    g.radii.len()
                )));
            }
            if gains.iter().any(|x| !(x.is_finite() && *x >= 1.0)) {
                return Err(CliError::Config("geometry.edge_gains must all be >= 1".into()));
            }
        }
        let p = &self.protocol;
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(CliError::Config(format!("{name} must be finite and > 0, got {v}")))
            }
        };
        positive("protocol.sweep.rate", p.sweep.rate)?;
        positive("protocol.sweep.sample_interval", p.sweep.sample_interval)?;
        positive("protocol.multilevel.rate", p.multilevel.rate)?;
        positive("protocol.retention.t_first", p.retention.t_first)?;
        if !(p.sweep.v_hi > 0.0 && p.sweep.v_lo < 0.0) {
            return Err(CliError::Config("protocol.sweep needs v_hi > 0 > v_lo".into()));
        }
        if p.sweep.cycles == 0 || p.endurance.cycles == 0 || p.multilevel.repeats == 0 {
            return Err(CliError::Config("cycle and repeat counts must be at least 1".into()));
        }
        if !(p.retention.t_last > p.retention.t_first) || p.retention.points < 10 {
            return Err(CliError::Config("protocol.retention needs t_last > t_first and at least 10 points".into()));
        }
        if p.retention.read_v.iter().any(|v| !(v.abs() <= 0.5)) {
            return Err(CliError::Config("protocol.retention.read_v values must satisfy |V| <= 0.5".into()));
        }
        if !(p.fit.noise.is_finite() && p.fit.noise >= 0.0) {
            return Err(CliError::Config("protocol.fit.noise must be >= 0".into()));
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON serialisation.
    pub fn hash(&self) -> String {
        let text = serde_json::to_string(self).expect("config serialises");
        hex(&Sha256::digest(text.as_bytes()))
    }
}

pub fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}
