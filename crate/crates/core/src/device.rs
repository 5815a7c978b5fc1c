//! Two-zone compact model of a Schottky memristor: a centre disc and an edge
//! annulus, each with its own trapped-charge density, field gain and current.

use serde::{Deserialize, Serialize};

use crate::electrostatics::FieldProfile;
use crate::error::{param, Error, Result};
use crate::params::{DeviceGeometry, MaterialParams, TrapParams};
use crate::permittivity::{depletion_at_potential, PermittivityModel};
use crate::trace::{TimeSeriesTrace, TraceMeta, TraceRecord};
use crate::transport::{attenuation, j_s, thermionic, tunneling_factor_with, ConductionLaw, Mechanism};
use crate::trapping::{exponents_from_params, trapping_rate, TrapState};
use crate::waveform::{build_vertex_sweep, BiasWaveform};

/// Largest accepted change of a zone's trapped density in one step, relative to
/// the density clamped to [1e-3, 1] times the trap density scale.
pub const MAX_STEP_CHANGE: f64 = 0.1;
const STEP_FLOOR: f64 = 1e-3;
const MIN_SUBSTEP: f64 = 1e-15;
/// Release e-foldings within a step beyond which the zone counts as settled.
const SETTLED_DECAYS: f64 = 20.0;
/// Largest bias change across one integration step of a time-varying program (V).
pub const MAX_BIAS_STEP: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DeviceConfig {
    /// Prefactor law of the tunnelling current.
    pub law: ConductionLaw,
    /// Edge-zone trap density relative to the centre.
    pub edge_trap_boost: f64,
    /// Release attempt rate k_d (1/s).
    pub detrap_rate: f64,
    /// Field scale E_d of the release rate (V/m).
    pub detrap_field: f64,
    /// Share of the bias that lowers the tunnelling barrier.
    pub barrier_lowering: f64,
    /// Smallest band bending kept under forward bias (V).
    pub min_band_bending: f64,
    /// Width of SET and RESET write pulses (s).
    pub pulse_width: f64,
}

impl Default for DeviceConfig {
    fn default() -> Self {
        Self {
            law: ConductionLaw { mechanism: Mechanism::Exponential, v0: 0.2, j_ref: 2.0e6 },
            edge_trap_boost: 3.0,
            detrap_rate: 1.0e-5,
            detrap_field: 1.86e9,
            barrier_lowering: 0.5,
            min_band_bending: 0.05,
            pulse_width: 0.3,
        }
    }
}

impl DeviceConfig {
    pub fn validate(&self) -> Result<()> {
        self.law.validate()?;
        if !(self.edge_trap_boost.is_finite() && self.edge_trap_boost >= 1.0) {
            return Err(param("edge_trap_boost", format!("must be >= 1, got {}", self.edge_trap_boost)));
        }
        if !(self.detrap_rate.is_finite() && self.detrap_rate >= 0.0) {
            return Err(param("detrap_rate", "must be finite and >= 0"));
        }
        if !(self.detrap_field.is_finite() && self.detrap_field > 0.0) {
            return Err(param("detrap_field", "must be finite and > 0"));
        }
        if !(self.barrier_lowering.is_finite() && self.barrier_lowering >= 0.0) {
            return Err(param("barrier_lowering", "must be finite and >= 0"));
        }
        if !(self.min_band_bending.is_finite() && self.min_band_bending > 0.0) {
            return Err(param("min_band_bending", "must be finite and > 0"));
        }
        if !(self.pulse_width.is_finite() && self.pulse_width > 0.0) {
            return Err(param("pulse_width", "must be finite and > 0"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZoneState {
    /// Zone area (m^2).
    pub area: f64,
    pub trap_state: TrapState,
    /// Available trap density (1/m^3).
    pub n0_local: f64,
    /// Local field over nominal field.
    pub field_gain: f64,
}

impl ZoneState {
    fn trap_params(&self, mat: &MaterialParams) -> TrapParams {
        TrapParams { n0_max: self.n0_local, ..mat.trap }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeviceState {
    pub geometry: DeviceGeometry,
    pub material: MaterialParams,
    pub config: DeviceConfig,
    pub center: ZoneState,
    pub edge: ZoneState,
    pub cycle_count: u64,
    /// Device time (s).
    pub t: f64,
}

/// Builds a virgin device. `edge_gain` is the field enhancement of the edge zone
/// (1 for a homogeneous device).
pub fn new_device(
    geometry: DeviceGeometry,
    material: MaterialParams,
    config: DeviceConfig,
    edge_gain: f64,
) -> Result<DeviceState> {
    geometry.validate()?;
    material.validate()?;
    config.validate()?;
    if !(edge_gain.is_finite() && edge_gain >= 1.0) {
        return Err(param("edge_gain", format!("must be >= 1, got {edge_gain}")));
    }
    let center_area = geometry.center_area();
    let edge_area = geometry.edge_area();
    if !(center_area > 0.0 && edge_area > 0.0) {
        return Err(param("edge_zone_width", "zone partition leaves an empty zone"));
    }
    let n0 = material.trap.n0_max;
    Ok(DeviceState {
        geometry,
        material,
        config,
        center: ZoneState { area: center_area, trap_state: TrapState::default(), n0_local: n0, field_gain: 1.0 },
        edge: ZoneState {
            area: edge_area,
            trap_state: TrapState::default(),
            n0_local: n0 * config.edge_trap_boost,
            field_gain: edge_gain,
        },
        cycle_count: 0,
        t: 0.0,
    })
}

/// Virgin device whose edge gain is the enhancement of a solved field profile.
pub fn new_device_from_profile(
    geometry: DeviceGeometry,
    material: MaterialParams,
    config: DeviceConfig,
    profile: &FieldProfile,
) -> Result<DeviceState> {
    if ((profile.radius - geometry.radius) / geometry.radius).abs() > 1e-9 {
        return Err(param(
            "field_profile",
            format!("profile radius {} does not match device radius {}", profile.radius, geometry.radius),
        ));
    }
    new_device(geometry, material, config, profile.enhancement.max(1.0))
}

/// Homogeneous control device: no edge gain and the same trap density everywhere.
pub fn new_null_device(geometry: DeviceGeometry, material: MaterialParams, config: DeviceConfig) -> Result<DeviceState> {
    new_device(geometry, material, DeviceConfig { edge_trap_boost: 1.0, ..config }, 1.0)
}

/// Instantaneous state of one zone under bias.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZoneDrive {
    /// Thermionic current density (A/m^2).
    pub j_thermionic: f64,
    /// Signed tunnelling current density (A/m^2).
    pub j_tunnel: f64,
    /// Barrier width including the trapped-charge term (m).
    pub w_eff: f64,
    /// Permittivity in the depletion layer.
    pub eps_r: f64,
    pub alpha: f64,
    /// Trapping rate (1/(m^3 s)).
    pub trap_rate: f64,
    /// First-order release rate k_d exp(g V / (W0 E_d)) (1/s).
    pub release_rate: f64,
}

impl ZoneDrive {
    pub fn j(&self) -> f64 {
        self.j_thermionic + self.j_tunnel
    }
}

/// Bias-dependent part of a zone's drive, which does not depend on the trapped density.
struct Junction {
    w0: f64,
    eps_r: f64,
    alpha: f64,
    j_th: f64,
    /// Tunnelling prefactor T(W0) j_s, or 0 when the law is not defined at this bias.
    j_open: f64,
    kappa2: f64,
}

fn junction(state: &DeviceState, zone: &ZoneState, v: f64) -> Result<Junction> {
    let mat = &state.material;
    let cfg = &state.config;
    let perm = PermittivityModel::from_material(mat);
    let v_total = (mat.built_in_potential() - v).max(cfg.min_band_bending);
    let dep = depletion_at_potential(mat, &perm, v_total, zone.field_gain)?;
    let trap = zone.trap_params(mat);
    let alpha = exponents_from_params(&trap, dep.eps_r)?.alpha;
    let (j_open, kappa2) = if v != 0.0 && v.abs() > cfg.law.min_bias() {
        let t0 = tunneling_factor_with(mat, dep.width, v, cfg.barrier_lowering)?;
        (t0 * j_s(&cfg.law, v.abs(), alpha)?, attenuation(mat, v, cfg.barrier_lowering))
    } else {
        (0.0, 0.0)
    };
    Ok(Junction { w0: dep.width, eps_r: dep.eps_r, alpha, j_th: thermionic(mat, v), j_open, kappa2 })
}

fn drive_at(state: &DeviceState, zone: &ZoneState, jn: &Junction, v: f64, n: f64) -> ZoneDrive {
    let mat = &state.material;
    let cfg = &state.config;
    let dw = n * mat.trap.x_centroid / mat.donor_density;
    let w_eff = jn.w0 + dw;
    let j_tunnel = jn.j_open * (-jn.kappa2 * dw).exp() * v.signum();
    let trap = zone.trap_params(mat);
    let ts = TrapState { n, ..zone.trap_state };
    let trap_rate = trapping_rate(&ts, j_tunnel.abs(), &trap);
    // Release is driven by the forward field across the trap-free barrier, so the
    // rate depends on bias only and SET proceeds gradually.
    let release_rate = if v > 0.0 {
        let e = zone.field_gain * v / jn.w0;
        cfg.detrap_rate * (e / cfg.detrap_field).min(700.0).exp()
    } else {
        0.0
    };
    ZoneDrive { j_thermionic: jn.j_th, j_tunnel, w_eff, eps_r: jn.eps_r, alpha: jn.alpha, trap_rate, release_rate }
}

/// Drive of `zone` (one of `state.center`, `state.edge`) at bias `v`.
pub fn zone_drive(state: &DeviceState, zone: &ZoneState, v: f64) -> Result<ZoneDrive> {
    let jn = junction(state, zone, v)?;
    Ok(drive_at(state, zone, &jn, v, zone.trap_state.n))
}

/// Zone currents (A) at bias `v`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeviceCurrent {
    pub center: f64,
    pub edge: f64,
}

impl DeviceCurrent {
    pub fn total(&self) -> f64 {
        self.center + self.edge
    }
}

pub fn current(state: &DeviceState, v: f64) -> Result<DeviceCurrent> {
    if v == 0.0 {
        return Ok(DeviceCurrent { center: 0.0, edge: 0.0 });
    }
    Ok(DeviceCurrent {
        center: state.center.area * zone_drive(state, &state.center, v)?.j(),
        edge: state.edge.area * zone_drive(state, &state.edge, v)?.j(),
    })
}

/// n after `dt` of dn/dt = R - K n with R and K frozen.
fn relax(n: f64, r: f64, k: f64, dt: f64) -> f64 {
    if k > 0.0 {
        let n_eq = r / k;
        n_eq + (n - n_eq) * (-k * dt).exp()
    } else {
        n + r * dt
    }
}

fn step_zone(state: &DeviceState, zone: &ZoneState, v: f64, dt: f64) -> Result<ZoneState> {
    if v == 0.0 {
        let mut z = *zone;
        z.trap_state.t += dt;
        return Ok(z);
    }
    let jn = junction(state, zone, v)?;
    let n = zone.trap_state.n;
    // Midpoint rule on the frozen-coefficient relaxation.
    let d0 = drive_at(state, zone, &jn, v, n);
    let n_half = relax(n, d0.trap_rate, d0.release_rate, 0.5 * dt).max(0.0);
    let dm = drive_at(state, zone, &jn, v, n_half);
    let n_new = relax(n, dm.trap_rate, dm.release_rate, dt).max(0.0);

    let scale = state.material.trap.density_scale();
    let reference = |x: f64| x.clamp(STEP_FLOOR * scale, scale);
    // The frozen-rate predictor must stay within the limit too, otherwise an
    // overshooting midpoint with a vanishing rate would pass unnoticed.
    let n_pred = relax(n, d0.trap_rate, d0.release_rate, dt);
    let change = (n_new - n).abs().max((n_pred - n).abs()) / reference(n);
    if !(change <= MAX_STEP_CHANGE) {
        // A stiff release may settle in one step; accept if the settled density
        // is the equilibrium of the rates evaluated there.
        let de = drive_at(state, zone, &jn, v, n_new);
        let settled = de.release_rate * dt > SETTLED_DECAYS
            && (de.trap_rate / de.release_rate - n_new).abs() <= MAX_STEP_CHANGE * reference(n_new);
        if !settled {
            return Err(Error::StepSize { change, limit: MAX_STEP_CHANGE });
        }
    }
    let mut z = *zone;
    z.trap_state.n = n_new;
    z.trap_state.q_injected += dm.j_tunnel.abs() * dt;
    z.trap_state.t += dt;
    Ok(z)
}

/// Advances the device by `dt` at constant bias `v`. Fails with a step-size error
/// when a zone's trapped density would change by more than [`MAX_STEP_CHANGE`].
pub fn step(state: &DeviceState, v: f64, dt: f64) -> Result<DeviceState> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(param("dt", format!("must be finite and > 0, got {dt}")));
    }
    if !v.is_finite() {
        return Err(param("v", "must be finite"));
    }
    Ok(DeviceState {
        center: step_zone(state, &state.center, v, dt)?,
        edge: step_zone(state, &state.edge, v, dt)?,
        t: state.t + dt,
        ..*state
    })
}

/// Integrates over `duration` with the bias `v(s)` given as a function of the
/// elapsed time, substepping as needed. `h` carries the step guess between calls.
fn advance(state: DeviceState, v: &dyn Fn(f64) -> f64, duration: f64, h: &mut f64) -> Result<DeviceState> {
    let mut s = state;
    let mut elapsed = 0.0;
    if !(*h > 0.0) {
        *h = duration;
    }
    while elapsed < duration {
        let remaining = duration - elapsed;
        let dt = if *h >= remaining * (1.0 - 1e-12) { remaining } else { *h };
        let (va, vm, vb) = (v(elapsed), v(elapsed + 0.5 * dt), v(elapsed + dt));
        if (vm - va).abs().max((vb - vm).abs()) > 0.5 * MAX_BIAS_STEP {
            *h = 0.5 * dt;
            continue;
        }
        match step(&s, v(elapsed + 0.5 * dt), dt) {
            Ok(next) => {
                s = next;
                elapsed += dt;
                *h = (2.0 * dt).max(*h);
            }
            Err(Error::StepSize { .. }) => {
                *h = 0.5 * dt;
                if *h < MIN_SUBSTEP * duration.max(1.0) {
                    return Err(Error::StepUnderflow { t: s.t, last_state: s.edge.trap_state.n });
                }
            }
            Err(e) => return Err(e),
        }
    }
    Ok(s)
}

/// Holds a constant bias for `duration`.
pub fn hold(state: DeviceState, v: f64, duration: f64) -> Result<DeviceState> {
    if !(duration.is_finite() && duration > 0.0) {
        return Err(param("duration", format!("must be finite and > 0, got {duration}")));
    }
    let mut h = duration;
    advance(state, &|_| v, duration, &mut h)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IvSample {
    pub t: f64,
    pub v: f64,
    pub i: f64,
    pub i_center: f64,
    pub i_edge: f64,
    pub n_center: f64,
    pub n_edge: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct IvTrace {
    pub samples: Vec<IvSample>,
    pub meta: TraceMeta,
}

impl IvTrace {
    pub fn to_time_series(&self) -> Result<TimeSeriesTrace> {
        TimeSeriesTrace::from_records(
            self.samples.iter().map(|s| TraceRecord { t: s.t, v: s.v, i: s.i }).collect(),
            self.meta.clone(),
        )
    }
}

fn sample(state: &DeviceState, v: f64) -> Result<IvSample> {
    let c = current(state, v)?;
    Ok(IvSample {
        t: state.t,
        v,
        i: c.total(),
        i_center: c.center,
        i_edge: c.edge,
        n_center: state.center.trap_state.n,
        n_edge: state.edge.trap_state.n,
    })
}

fn meta(state: &DeviceState, protocol: &str) -> TraceMeta {
    TraceMeta {
        device_id: format!("r{:e}", state.geometry.radius),
        radius: Some(state.geometry.radius),
        protocol: protocol.to_string(),
    }
}

/// Runs a bias program and records the current at every waveform sample.
pub fn run_sweep(state: DeviceState, waveform: &BiasWaveform) -> Result<(DeviceState, IvTrace)> {
    waveform.validate()?;
    let samples = waveform.samples();
    let t_start = state.t;
    let mut s = state;
    let mut trace = IvTrace { samples: Vec::with_capacity(samples.len()), meta: meta(&s, "sweep") };
    trace.samples.push(sample(&s, samples[0].v)?);
    let mut h = 0.0;
    for pair in samples.windows(2) {
        let (a, b) = (pair[0].t, pair[1].t);
        s = advance(s, &|e| waveform.voltage_at(a + e), b - a, &mut h)?;
        // Land exactly on the sample time so that traces of equal programs align.
        s.t = t_start + b;
        trace.samples.push(sample(&s, pair[1].v)?);
    }
    s.cycle_count += (waveform.segments.len() / 2).max(1) as u64;
    Ok((s, trace))
}

/// Write pulse at `write_v` for the configured pulse width, then reads at
/// `read_v` held continuously and sampled at `schedule` (s after the pulse).
pub fn run_retention(
    state: DeviceState,
    write_v: f64,
    read_v: f64,
    schedule: &[f64],
) -> Result<(DeviceState, TimeSeriesTrace)> {
    if !(read_v.abs() <= 0.5) {
        return Err(param("read_v", format!("read voltage must satisfy |V| <= 0.5, got {read_v}")));
    }
    if schedule.is_empty() || schedule[0] <= 0.0 || schedule.windows(2).any(|w| w[1] <= w[0]) {
        return Err(param("schedule", "read times must be positive and strictly increasing"));
    }
    let mut s = state;
    if write_v != 0.0 {
        s = hold(s, write_v, s.config.pulse_width)?;
    } else {
        s.t += s.config.pulse_width;
    }
    let mut trace = TimeSeriesTrace::new(meta(&s, "retention"));
    let mut prev = 0.0;
    let mut h = 0.0;
    for &t in schedule {
        s = advance(s, &|_| read_v, t - prev, &mut h)?;
        prev = t;
        trace.push(TraceRecord { t, v: read_v, i: current(&s, read_v)?.total() })?;
    }
    Ok((s, trace))
}

/// |lrs / hrs|.
pub fn memory_window(hrs_i: f64, lrs_i: f64) -> Result<f64> {
    if hrs_i == 0.0 || !hrs_i.is_finite() {
        return Err(Error::Domain(format!("memory window undefined for HRS current {hrs_i}")));
    }
    if lrs_i == 0.0 || !lrs_i.is_finite() || hrs_i.signum() != lrs_i.signum() {
        return Err(Error::Domain(format!(
            "HRS and LRS currents must be nonzero with the same sign, got {hrs_i} and {lrs_i}"
        )));
    }
    Ok((lrs_i / hrs_i).abs())
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnduranceRun {
    /// Reads in time order: LRS after each SET, HRS after each RESET.
    pub trace: TimeSeriesTrace,
    pub lrs: Vec<f64>,
    pub hrs: Vec<f64>,
    pub windows: Vec<f64>,
}

impl EnduranceRun {
    /// Largest relative deviation of the window from its value at cycle `burn_in`
    /// over the remaining cycles; `None` if there are no cycles after burn-in.
    pub fn window_drift(&self, burn_in: usize) -> Option<f64> {
        let reference = *self.windows.get(burn_in)?;
        Some(self.windows[burn_in..].iter().map(|w| (w / reference - 1.0).abs()).fold(0.0, f64::max))
    }
}

/// Alternating SET and RESET pulses with a read after each.
pub fn run_endurance(
    state: DeviceState,
    cycles: usize,
    set_v: f64,
    reset_v: f64,
    read_v: f64,
) -> Result<(DeviceState, EnduranceRun)> {
    if cycles == 0 {
        return Err(param("cycles", "at least one cycle is required"));
    }
    let mut s = state;
    let mut trace = TimeSeriesTrace::new(meta(&s, "endurance"));
    let (mut lrs, mut hrs, mut windows) = (Vec::new(), Vec::new(), Vec::new());
    let width = s.config.pulse_width;
    for _ in 0..cycles {
        s = hold(s, set_v, width)?;
        let l = current(&s, read_v)?.total();
        trace.push(TraceRecord { t: s.t, v: read_v, i: l })?;
        s = hold(s, reset_v, width)?;
        let h = current(&s, read_v)?.total();
        trace.push(TraceRecord { t: s.t, v: read_v, i: h })?;
        windows.push(memory_window(h, l)?);
        lrs.push(l);
        hrs.push(h);
        s.cycle_count += 1;
    }
    Ok((s, EnduranceRun { trace, lrs, hrs, windows }))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultilevelBand {
    pub set_v: f64,
    pub reset_v: f64,
    /// Read current (A) after each repeat.
    pub reads: Vec<f64>,
}

impl MultilevelBand {
    pub fn mean(&self) -> f64 {
        self.reads.iter().sum::<f64>() / self.reads.len() as f64
    }

    /// Sample standard deviation (0 for a single read).
    pub fn std_dev(&self) -> f64 {
        let n = self.reads.len();
        if n < 2 {
            return 0.0;
        }
        let m = self.mean();
        (self.reads.iter().map(|r| (r - m).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
    }
}

/// Smallest gap between neighbouring band means divided by the larger standard
/// deviation of the two; infinite when both bands are noiseless.
pub fn band_separation(bands: &[MultilevelBand]) -> Option<f64> {
    if bands.len() < 2 {
        return None;
    }
    let mut stats: Vec<(f64, f64)> = bands.iter().map(|b| (b.mean(), b.std_dev())).collect();
    stats.sort_by(|a, b| a.0.total_cmp(&b.0));
    stats
        .windows(2)
        .map(|w| {
            let sd = w[0].1.max(w[1].1);
            let gap = w[1].0 - w[0].0;
            if sd > 0.0 {
                gap / sd
            } else if gap > 0.0 {
                f64::INFINITY
            } else {
                0.0
            }
        })
        .min_by(|a, b| a.total_cmp(b))
}

/// For every (SET, RESET) pair, `repeats` sweeps 0 -> SET -> RESET -> 0 at `rate`
/// (V/s), each followed by a read at `read_v`.
pub fn run_multilevel(
    state: DeviceState,
    set_levels: &[f64],
    reset_levels: &[f64],
    repeats: usize,
    read_v: f64,
    rate: f64,
) -> Result<(DeviceState, Vec<MultilevelBand>)> {
    if set_levels.is_empty() || reset_levels.is_empty() {
        return Err(param("levels", "SET and RESET level lists must be non-empty"));
    }
    if repeats == 0 {
        return Err(param("repeats", "at least one repeat is required"));
    }
    if set_levels.iter().any(|v| !(*v > 0.0)) || reset_levels.iter().any(|v| !(*v < 0.0)) {
        return Err(param("levels", "SET levels must be positive and RESET levels negative"));
    }
    let mut s = state;
    let mut bands = Vec::new();
    for &set_v in set_levels {
        for &reset_v in reset_levels {
            let wf = build_vertex_sweep(&[0.0, set_v, reset_v, 0.0], rate, 1.0)?;
            let mut reads = Vec::with_capacity(repeats);
            for _ in 0..repeats {
                s = run_program(s, &wf)?;
                reads.push(current(&s, read_v)?.total());
                s.cycle_count += 1;
            }
            bands.push(MultilevelBand { set_v, reset_v, reads });
        }
    }
    Ok((s, bands))
}

/// Runs a bias program without recording.
pub fn run_program(state: DeviceState, waveform: &BiasWaveform) -> Result<DeviceState> {
    waveform.validate()?;
    let mut s = state;
    let mut h = 0.0;
    for seg in &waveform.segments {
        let (a, b, d) = (seg.v_start, seg.v_end, seg.duration);
        s = advance(s, &|e| a + (b - a) * (e / d), d, &mut h)?;
    }
    Ok(s)
}
