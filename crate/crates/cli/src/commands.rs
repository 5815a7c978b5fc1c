//! Protocol runners behind each subcommand. Every runner works per radius in a
//! worker pool, merges the results in radius order and writes its artifacts
//! into the run directory, returning their file names.

use std::path::{Path, PathBuf};

use rand::rngs::StdRng;
use rand::SeedableRng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::Serialize;

use schottky_mem::device::{
    band_separation, new_device, new_null_device, run_endurance, run_multilevel, run_retention, run_sweep,
    DeviceState, IvTrace,
};
use schottky_mem::electrostatics::{calibrate_edge_zone_width, flux_balance, interface_profile, solve, AxisymMesh};
use schottky_mem::fitting::{fit_power_law, scaling_table, FitReport, LmStatus, ScalingEntry, ScalingReport, Trend};
use schottky_mem::trace::{TimeSeriesTrace, TraceRecord};
use schottky_mem::waveform::{build_vertex_sweep, log_schedule};

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};
use crate::io::{ingest_trace, write_json, Table};

/// A sweep cycle counts as pinched when |I| at every V = 0 sample is below this
/// fraction of the largest |I| in the cycle.
pub const PINCH_TOLERANCE: f64 = 1e-9;
/// ...and the two branch currents at the read voltage differ by more than this
/// factor, in either direction (the virgin first cycle opens the other way).
pub const MIN_LOOP_OPENING: f64 = 1.05;

fn opening(i_lrs: f64, i_hrs: f64) -> f64 {
    let r = (i_lrs / i_hrs).abs();
    r.max(1.0 / r)
}

fn tag(v: f64) -> String {
    format!("{v:+}")
}

fn radius_tag(r: f64) -> String {
    format!("r{r:e}")
}

/// Edge field gain per configured radius: the configured values, or the
/// enhancement of the solved interface profile at the solver bias.
pub fn edge_gains(cfg: &RunConfig) -> CliResult<Vec<f64>> {
    if let Some(g) = &cfg.geometry.edge_gains {
        return Ok(g.clone());
    }
    let perm = cfg.solver_permittivity()?;
    cfg.geometry
        .radii
        .par_iter()
        .map(|&r| Ok(cfg.solver.study.profile(r, &perm, cfg.solver.v_applied)?.enhancement.max(1.0)))
        .collect()
}

pub fn device(cfg: &RunConfig, radius: f64, gain: f64) -> CliResult<DeviceState> {
    Ok(new_device(cfg.geometry(radius)?, cfg.material(), cfg.device_config(), gain)?)
}

pub fn null_device(cfg: &RunConfig, radius: f64) -> CliResult<DeviceState> {
    Ok(new_null_device(cfg.geometry(radius)?, cfg.material(), cfg.device_config())?)
}

fn devices(cfg: &RunConfig) -> CliResult<Vec<(f64, f64)>> {
    Ok(cfg.geometry.radii.iter().copied().zip(edge_gains(cfg)?).collect())
}

// ---------------------------------------------------------------- sweep

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CycleStats {
    pub cycle: usize,
    /// Largest |I| at the V = 0 samples of the cycle (A).
    pub i_zero_max: f64,
    pub i_lrs: f64,
    pub i_hrs: f64,
    /// Largest relative change of any nonzero-bias sample from the previous cycle.
    pub drift: Option<f64>,
    pub pinched: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepAnalysis {
    pub radius_m: f64,
    pub cycles: usize,
    pub samples_per_cycle: usize,
    #[serde(rename = "read_v_V")]
    pub read_v_v: f64,
    pub burn_in: usize,
    pub pinched_every_cycle: bool,
    #[serde(rename = "max_abs_i_at_zero_A")]
    pub max_abs_i_at_zero_a: f64,
    pub min_loop_opening: f64,
    /// Largest drift between consecutive cycles that both follow the burn-in.
    pub max_drift_after_burn_in: Option<f64>,
    #[serde(skip)]
    pub per_cycle: Vec<CycleStats>,
}

/// Sweep of `cycles` loops 0 -> v_hi -> v_lo -> 0.
pub fn sweep_program(cfg: &RunConfig, cycles: usize) -> CliResult<schottky_mem::waveform::BiasWaveform> {
    let p = &cfg.protocol.sweep;
    let mut vertices = vec![0.0];
    for _ in 0..cycles {
        vertices.extend([p.v_hi, p.v_lo, 0.0]);
    }
    Ok(build_vertex_sweep(&vertices, p.rate, p.sample_interval)?)
}

/// Current at `read_v` interpolated on the falling (LRS) and rising (HRS) branches.
fn branch_reads(samples: &[schottky_mem::device::IvSample], read_v: f64) -> (f64, f64) {
    let (mut lrs, mut hrs) = (f64::NAN, f64::NAN);
    for w in samples.windows(2) {
        let (a, b) = (&w[0], &w[1]);
        if (a.v - read_v) * (b.v - read_v) > 0.0 || a.v == b.v {
            continue;
        }
        let f = (read_v - a.v) / (b.v - a.v);
        let i = a.i + f * (b.i - a.i);
        if b.v < a.v {
            lrs = i;
        } else {
            hrs = i;
        }
    }
    (lrs, hrs)
}

/// Splits a sweep trace into its cycles and checks the pinch and drift of each.
pub fn analyse_sweep(trace: &IvTrace, radius: f64, cycles: usize, read_v: f64, burn_in: usize) -> CliResult<SweepAnalysis> {
    let total = trace.samples.len().saturating_sub(1);
    if cycles == 0 || total % cycles != 0 {
        return Err(CliError::Numeric(format!("{total} sweep samples do not split into {cycles} cycles")));
    }
    let per = total / cycles;
    let mut per_cycle = Vec::with_capacity(cycles);
    for k in 0..cycles {
        let window = &trace.samples[k * per..=(k + 1) * per];
        let i_max = window.iter().map(|s| s.i.abs()).fold(0.0, f64::max);
        let i_zero_max = window.iter().filter(|s| s.v == 0.0).map(|s| s.i.abs()).fold(0.0, f64::max);
        let (i_lrs, i_hrs) = branch_reads(window, read_v);
        let drift = (k > 0).then(|| {
            let prev = &trace.samples[(k - 1) * per..=k * per];
            window
                .iter()
                .zip(prev)
                .filter(|(_, p)| p.v != 0.0 && p.i != 0.0)
                .map(|(s, p)| ((s.i - p.i) / p.i).abs())
                .fold(0.0, f64::max)
        });
        let pinched = i_zero_max <= PINCH_TOLERANCE * i_max && opening(i_lrs, i_hrs) > MIN_LOOP_OPENING;
        per_cycle.push(CycleStats { cycle: k + 1, i_zero_max, i_lrs, i_hrs, drift, pinched });
    }
    let after: Vec<f64> = per_cycle.iter().skip(burn_in + 1).filter_map(|c| c.drift).collect();
    Ok(SweepAnalysis {
        radius_m: radius,
        cycles,
        samples_per_cycle: per,
        read_v_v: read_v,
        burn_in,
        pinched_every_cycle: per_cycle.iter().all(|c| c.pinched),
        max_abs_i_at_zero_a: per_cycle.iter().map(|c| c.i_zero_max).fold(0.0, f64::max),
        min_loop_opening: per_cycle.iter().map(|c| opening(c.i_lrs, c.i_hrs)).fold(f64::INFINITY, f64::min),
        max_drift_after_burn_in: after.into_iter().reduce(f64::max),
        per_cycle,
    })
}

pub fn sweep(cfg: &RunConfig, dir: &Path) -> CliResult<Vec<String>> {
    let p = &cfg.protocol.sweep;
    let read_v = cfg.protocol.endurance.read_v;
    let wf = sweep_program(cfg, p.cycles)?;
    let runs = devices(cfg)?
        .into_par_iter()
        .map(|(r, g)| {
            let (_, trace) = run_sweep(device(cfg, r, g)?, &wf)?;
            let analysis = analyse_sweep(&trace, r, p.cycles, read_v, p.burn_in)?;
            Ok((trace, analysis))
        })
        .collect::<CliResult<Vec<_>>>()?;
    let fmt = cfg.output.format;
    let mut files = Vec::new();
    let mut summary = Vec::new();
    for (trace, a) in runs {
        let tag = radius_tag(a.radius_m);
        files.push(Table::from_iv(&trace).write(dir, &format!("sweep_{tag}"), fmt)?);
        let mut t = Table::new(&["cycle", "i_zero_max_A", "i_lrs_A", "i_hrs_A", "drift", "pinched"]);
        for c in &a.per_cycle {
            t.push(vec![c.cycle as f64, c.i_zero_max, c.i_lrs, c.i_hrs, c.drift.unwrap_or(f64::NAN), c.pinched as u8 as f64]);
        }
        files.push(t.write(dir, &format!("cycles_{tag}"), fmt)?);
        summary.push(a);
    }
    files.push(json(dir, "sweep_summary", &summary)?);
    Ok(files)
}

// ------------------------------------------------------------ retention

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitEntry {
    pub source: String,
    #[serde(rename = "write_v_V")]
    pub write_v_v: Option<f64>,
    #[serde(flatten)]
    pub report: FitReport,
    pub status: LmStatus,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitFailure {
    pub source: String,
    pub error: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct FitSummary {
    pub fits: Vec<FitEntry>,
    pub failures: Vec<FitFailure>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scaling: Option<ScalingReport>,
}

impl FitSummary {
    fn add(&mut self, source: String, radius: Option<f64>, write_v: Option<f64>, trace: &TimeSeriesTrace) {
        let read_v = trace.records().first().map(|r| r.v).unwrap_or(f64::NAN);
        match fit_power_law(trace) {
            Ok(f) => self.fits.push(FitEntry {
                source,
                write_v_v: write_v,
                report: FitReport::new(radius, read_v, &f),
                status: f.status,
                notes: f.notes,
            }),
            Err(e) => self.failures.push(FitFailure { source, error: e.to_string() }),
        }
    }

    /// Exponent table over radii: first positive and first negative read per radius.
    fn with_scaling(mut self) -> Self {
        let mut radii: Vec<f64> = self.fits.iter().filter_map(|f| f.report.radius_m).collect();
        radii.dedup();
        let pick = |r: f64, positive: bool| {
            self.fits
                .iter()
                .find(|f| f.report.radius_m == Some(r) && (f.report.read_v > 0.0) == positive)
                .map(|f| f.report.alpha)
        };
        let entries: Vec<ScalingEntry> = radii
            .iter()
            .map(|&r| ScalingEntry { radius: r, alpha_positive: pick(r, true), alpha_negative: pick(r, false) })
            .collect();
        if !entries.is_empty() {
            self.scaling = Some(scaling_table(&entries));
        }
        self
    }
}

/// Retention traces of virgin devices: one per (radius, write, read).
fn retention_traces(cfg: &RunConfig, writes: &[f64]) -> CliResult<Vec<(f64, f64, TimeSeriesTrace)>> {
    let p = &cfg.protocol.retention;
    let schedule = log_schedule(p.t_first, p.t_last, p.points)?;
    let jobs: Vec<(f64, f64, f64, f64)> = devices(cfg)?
        .into_iter()
        .flat_map(|(r, g)| writes.iter().flat_map(move |&w| p.read_v.iter().map(move |&rd| (r, g, w, rd))))
        .collect();
    jobs.into_par_iter()
        .map(|(r, g, w, rd)| {
            let (_, trace) = run_retention(device(cfg, r, g)?, w, rd, &schedule)?;
            Ok((r, w, trace))
        })
        .collect()
}

pub fn retention(cfg: &RunConfig, dir: &Path) -> CliResult<Vec<String>> {
    let runs = retention_traces(cfg, &cfg.protocol.retention.write_v)?;
    let mut files = Vec::new();
    let mut summary = FitSummary::default();
    for (r, w, trace) in runs {
        let read_v = trace.records()[0].v;
        let stem = format!("retention_{}_w{}_read{}", radius_tag(r), tag(w), tag(read_v));
        let name = Table::from_trace(&trace).write(dir, &stem, cfg.output.format)?;
        summary.add(name.clone(), Some(r), Some(w), &trace);
        files.push(name);
    }
    files.push(json(dir, "retention_fits", &summary.with_scaling())?);
    Ok(files)
}

// ------------------------------------------------------------ endurance

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnduranceSummary {
    pub radius_m: f64,
    pub edge_gain: f64,
    pub cycles: usize,
    pub final_window: f64,
    #[serde(rename = "final_lrs_A")]
    pub final_lrs_a: f64,
    #[serde(rename = "final_hrs_A")]
    pub final_hrs_a: f64,
    pub window_drift_after_burn_in: Option<f64>,
}

pub fn endurance(cfg: &RunConfig, dir: &Path) -> CliResult<Vec<String>> {
    let p = &cfg.protocol.endurance;
    let runs = devices(cfg)?
        .into_par_iter()
        .map(|(r, g)| Ok((r, g, run_endurance(device(cfg, r, g)?, p.cycles, p.set_v, p.reset_v, p.read_v)?.1)))
        .collect::<CliResult<Vec<_>>>()?;
    let mut files = Vec::new();
    let mut summary = Vec::new();
    for (r, g, run) in runs {
        let mut t = Table::new(&["cycle", "lrs_A", "hrs_A", "window"]);
        for k in 0..run.windows.len() {
            t.push(vec![(k + 1) as f64, run.lrs[k], run.hrs[k], run.windows[k]]);
        }
        files.push(t.write(dir, &format!("endurance_{}", radius_tag(r)), cfg.output.format)?);
        let last = run.windows.len() - 1;
        summary.push(EnduranceSummary {
            radius_m: r,
            edge_gain: g,
            cycles: p.cycles,
            final_window: run.windows[last],
            final_lrs_a: run.lrs[last],
            final_hrs_a: run.hrs[last],
            window_drift_after_burn_in: run.window_drift(p.burn_in),
        });
    }
    files.push(json(dir, "endurance_summary", &summary)?);
    Ok(files)
}

// ----------------------------------------------------------- multilevel

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BandSummary {
    #[serde(rename = "set_v_V")]
    pub set_v_v: f64,
    #[serde(rename = "reset_v_V")]
    pub reset_v_v: f64,
    #[serde(rename = "mean_A")]
    pub mean_a: f64,
    #[serde(rename = "std_A")]
    pub std_a: f64,
    pub repeats: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MultilevelSummary {
    pub radius_m: f64,
    #[serde(rename = "read_v_V")]
    pub read_v_v: f64,
    pub bands: Vec<BandSummary>,
    /// Smallest gap between neighbouring band means over the larger band standard deviation.
    pub separation: Option<f64>,
}

pub fn multilevel(cfg: &RunConfig, dir: &Path) -> CliResult<Vec<String>> {
    let p = &cfg.protocol.multilevel;
    let runs = devices(cfg)?
        .into_par_iter()
        .map(|(r, g)| {
            let (_, bands) =
                run_multilevel(device(cfg, r, g)?, &p.set_levels, &p.reset_levels, p.repeats, p.read_v, p.rate)?;
            Ok((r, bands))
        })
        .collect::<CliResult<Vec<_>>>()?;
    let mut files = Vec::new();
    let mut summary = Vec::new();
    for (r, bands) in runs {
        let mut t = Table::new(&["set_v_v", "reset_v_v", "repeat", "i_A"]);
        for b in &bands {
            for (k, i) in b.reads.iter().enumerate() {
                t.push(vec![b.set_v, b.reset_v, (k + 1) as f64, *i]);
            }
        }
        files.push(t.write(dir, &format!("multilevel_{}", radius_tag(r)), cfg.output.format)?);
        summary.push(MultilevelSummary {
            radius_m: r,
            read_v_v: p.read_v,
            bands: bands
                .iter()
                .map(|b| BandSummary {
                    set_v_v: b.set_v,
                    reset_v_v: b.reset_v,
                    mean_a: b.mean(),
                    std_a: b.std_dev(),
                    repeats: b.reads.len(),
                })
                .collect(),
            separation: band_separation(&bands),
        });
    }
    files.push(json(dir, "multilevel_summary", &summary)?);
    Ok(files)
}

// ------------------------------------------------------------ field map

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FieldMapSummary {
    pub radius_m: f64,
    #[serde(rename = "v_applied_V")]
    pub v_applied_v: f64,
    pub sampling_depth_m: f64,
    #[serde(rename = "e_center_Vpm")]
    pub e_center_vpm: f64,
    #[serde(rename = "e_max_Vpm")]
    pub e_max_vpm: f64,
    pub r_at_max_m: f64,
    pub enhancement: f64,
    /// Radial span where the field exceeds twice the axial value (m).
    pub edge_span_m: f64,
    pub flux_mismatch: f64,
    pub iterations: usize,
}

pub fn field_map(cfg: &RunConfig, dir: &Path) -> CliResult<Vec<String>> {
    let p = &cfg.protocol.field_map;
    let radii = p.radii.clone().unwrap_or_else(|| cfg.geometry.radii.clone());
    let perm = cfg.solver_permittivity()?;
    let rule = &cfg.solver.study;
    let runs = radii
        .par_iter()
        .map(|&r| {
            let solved = || -> schottky_mem::Result<_> {
                let geom = rule.geometry(r)?;
                let mesh = AxisymMesh::build(&geom, &rule.mesh_rule(r))?;
                let field = solve(&geom, &perm, p.v_applied, &mesh, rule.tol)?;
                let profile = interface_profile(&field, &geom, rule.sampling.depth(r))?;
                Ok((field, profile))
            };
            solved().map_err(|e| CliError::from(schottky_mem::Error::AtRadius { radius: r, source: Box::new(e) }))
        })
        .collect::<CliResult<Vec<_>>>()?;
    let fmt = cfg.output.format;
    let mut files = Vec::new();
    let mut summary = Vec::new();
    for (field, profile) in runs {
        let tag = radius_tag(profile.radius);
        let mut t = Table::new(&["r_m", "e_z_Vpm"]);
        for (r, e) in profile.r.iter().zip(&profile.e_z) {
            t.push(vec![*r, *e]);
        }
        files.push(t.write(dir, &format!("profile_{tag}"), fmt)?);
        let mut g = Table::new(&["r_m", "z_m", "phi_V"]);
        for (j, z) in field.mesh.z_nodes.iter().enumerate() {
            for (i, r) in field.mesh.r_nodes.iter().enumerate() {
                g.push(vec![*r, *z, field.at(i, j)]);
            }
        }
        files.push(g.write(dir, &format!("field_{tag}"), fmt)?);
        summary.push(FieldMapSummary {
            radius_m: profile.radius,
            v_applied_v: p.v_applied,
            sampling_depth_m: profile.depth,
            e_center_vpm: profile.e_center,
            e_max_vpm: profile.e_max,
            r_at_max_m: profile.r_at_max,
            enhancement: profile.enhancement,
            edge_span_m: calibrate_edge_zone_width(&profile),
            flux_mismatch: flux_balance(&field).relative_mismatch(),
            iterations: field.iterations,
        });
    }
    files.push(json(dir, "field_map_summary", &summary)?);
    Ok(files)
}

// ------------------------------------------------------------------ fit

/// Multiplies every current by `1 + noise * N(0, 1)`.
pub fn add_noise(trace: &TimeSeriesTrace, noise: f64, seed: u64) -> CliResult<TimeSeriesTrace> {
    if noise == 0.0 {
        return Ok(trace.clone());
    }
    let mut rng = StdRng::seed_from_u64(seed);
    let normal = Normal::new(0.0, noise).map_err(|e| CliError::Config(format!("protocol.fit.noise: {e}")))?;
    let records = trace
        .records()
        .iter()
        .map(|r| TraceRecord { i: r.i * (1.0 + normal.sample(&mut rng)), ..*r })
        .collect();
    Ok(TimeSeriesTrace::from_records(records, trace.meta.clone())?)
}

/// Fits external traces when `inputs` is non-empty; otherwise fits simulated
/// retention traces (optionally noisy) for every radius and read voltage.
pub fn fit(cfg: &RunConfig, dir: &Path, inputs: &[PathBuf]) -> CliResult<Vec<String>> {
    let mut summary = FitSummary::default();
    let mut files = Vec::new();
    if !inputs.is_empty() {
        for path in inputs {
            let trace = ingest_trace(path)?;
            summary.add(path.display().to_string(), None, None, &trace);
        }
    } else {
        let set_v = cfg.protocol.endurance.set_v;
        let p = &cfg.protocol.fit;
        for (k, (r, w, trace)) in retention_traces(cfg, &[set_v])?.into_iter().enumerate() {
            let trace = add_noise(&trace, p.noise, p.seed.wrapping_add(k as u64))?;
            let read_v = trace.records()[0].v;
            let stem = format!("synthetic_{}_read{}", radius_tag(r), tag(read_v));
            let name = Table::from_trace(&trace).write(dir, &stem, cfg.output.format)?;
            summary.add(name.clone(), Some(r), Some(w), &trace);
            files.push(name);
        }
        summary = summary.with_scaling();
    }
    files.push(json(dir, "fit", &summary)?);
    Ok(files)
}

// -------------------------------------------------------------- scaling

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingRow {
    pub radius_m: f64,
    pub edge_gain: f64,
    pub window: f64,
    pub null_window: f64,
    pub alpha_positive: Option<f64>,
    pub alpha_negative: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingSummary {
    #[serde(rename = "read_v_V")]
    pub read_v_v: f64,
    pub cycles: usize,
    /// Rows by decreasing radius.
    pub rows: Vec<ScalingRow>,
    /// Whether the window strictly grows as the radius shrinks.
    pub window_trend: Trend,
    /// (max - min) / min of the null-model windows.
    pub null_window_spread: f64,
    pub exponents: ScalingReport,
}

/// Final endurance window of a device.
fn final_window(state: DeviceState, cfg: &RunConfig) -> CliResult<f64> {
    let p = &cfg.protocol.endurance;
    let (_, run) = run_endurance(state, p.cycles, p.set_v, p.reset_v, p.read_v)?;
    Ok(*run.windows.last().expect("at least one cycle"))
}

/// Memory windows (edge and homogeneous models) and retention exponents per radius.
pub fn scaling_summary(cfg: &RunConfig) -> CliResult<ScalingSummary> {
    let p = &cfg.protocol;
    let schedule = log_schedule(p.retention.t_first, p.retention.t_last, p.retention.points)?;
    let positive = p.retention.read_v.iter().copied().find(|v| *v > 0.0);
    let negative = p.retention.read_v.iter().copied().find(|v| *v < 0.0);
    let alpha = |r: f64, g: f64, read: Option<f64>| -> CliResult<Option<f64>> {
        let Some(read) = read else { return Ok(None) };
        let (_, trace) = run_retention(device(cfg, r, g)?, p.endurance.set_v, read, &schedule)?;
        Ok(fit_power_law(&trace).ok().map(|f| f.alpha))
    };
    let mut rows = devices(cfg)?
        .into_par_iter()
        .map(|(r, g)| {
            Ok(ScalingRow {
                radius_m: r,
                edge_gain: g,
                window: final_window(device(cfg, r, g)?, cfg)?,
                null_window: final_window(null_device(cfg, r)?, cfg)?,
                alpha_positive: alpha(r, g, positive)?,
                alpha_negative: alpha(r, g, negative)?,
            })
        })
        .collect::<CliResult<Vec<_>>>()?;
    rows.sort_by(|a, b| b.radius_m.total_cmp(&a.radius_m));
    let window_trend = if rows.len() < 2 {
        Trend::NotEvaluable
    } else if rows.windows(2).all(|w| w[1].window > w[0].window) {
        Trend::Holds
    } else {
        Trend::Violated
    };
    let lo = rows.iter().map(|r| r.null_window).fold(f64::INFINITY, f64::min);
    let hi = rows.iter().map(|r| r.null_window).fold(0.0, f64::max);
    let entries: Vec<ScalingEntry> = rows
        .iter()
        .map(|r| ScalingEntry { radius: r.radius_m, alpha_positive: r.alpha_positive, alpha_negative: r.alpha_negative })
        .collect();
    Ok(ScalingSummary {
        read_v_v: p.endurance.read_v,
        cycles: p.endurance.cycles,
        rows,
        window_trend,
        null_window_spread: (hi - lo) / lo,
        exponents: scaling_table(&entries),
    })
}

pub fn scaling(cfg: &RunConfig, dir: &Path) -> CliResult<Vec<String>> {
    let summary = scaling_summary(cfg)?;
    let mut t = Table::new(&["radius_m", "edge_gain", "window", "null_window", "alpha_positive", "alpha_negative"]);
    for r in &summary.rows {
        t.push(vec![
            r.radius_m,
            r.edge_gain,
            r.window,
            r.null_window,
            r.alpha_positive.unwrap_or(f64::NAN),
            r.alpha_negative.unwrap_or(f64::NAN),
        ]);
    }
    Ok(vec![t.write(dir, "scaling", cfg.output.format)?, json(dir, "scaling_summary", &summary)?])
}

fn json<T: Serialize>(dir: &Path, stem: &str, value: &T) -> CliResult<String> {
    let name = format!("{stem}.json");
    write_json(&dir.join(&name), value)?;
    Ok(name)
}
