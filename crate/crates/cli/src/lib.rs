//! Experiment runner for the schottky-mem simulator: config loading, command
//! line overrides, protocol commands and artifact writing.

pub mod commands;
pub mod config;
pub mod error;
pub mod io;
pub mod manifest;

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, ValueEnum};

use config::{Format, RunConfig};
use error::{CliError, CliResult};
use manifest::{prepare_run_dir, write_manifest, Manifest};

pub const CONFIG_FILE: &str = "config.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Command {
    /// Repeated I-V sweeps with pinch and drift analysis.
    Sweep,
    /// Retention after SET and RESET writes, with power-law fits.
    Retention,
    /// Alternating SET/RESET pulses with reads.
    Endurance,
    /// Read current bands for combinations of SET and RESET levels.
    Multilevel,
    /// Solved field profiles and potential grids.
    FieldMap,
    /// Power-law fits of external or simulated traces.
    Fit,
    /// Memory windows and retention exponents against radius.
    Scaling,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Sweep => "sweep",
            Command::Retention => "retention",
            Command::Endurance => "endurance",
            Command::Multilevel => "multilevel",
            Command::FieldMap => "field-map",
            Command::Fit => "fit",
            Command::Scaling => "scaling",
        }
    }
}

/// Command-line overrides applied on top of the config file.
#[derive(Debug, Clone, Default, Args)]
pub struct Overrides {
    /// JSON run configuration; built-in defaults when absent.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Run directory (default: <output.dir>/<command>-<config hash>).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Electrode radii in metres, comma separated.
    #[arg(long, alias = "radii", value_delimiter = ',', allow_negative_numbers = true)]
    pub radius: Option<Vec<f64>>,
    /// Sweep and endurance cycle count.
    #[arg(long)]
    pub cycles: Option<usize>,
    /// SET voltage; a list of levels for multilevel.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub set_v: Option<Vec<f64>>,
    /// RESET voltage; a list of levels for multilevel.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub reset_v: Option<Vec<f64>>,
    /// Read voltage; a list for retention, fit and scaling.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub read_v: Option<Vec<f64>>,
    /// Sweep rate (V/s).
    #[arg(long)]
    pub rate: Option<f64>,
    /// Applied bias for field-map (V).
    #[arg(long = "v", allow_negative_numbers = true)]
    pub v: Option<f64>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Replace an existing run directory.
    #[arg(long)]
    pub force: bool,
    /// Seed for synthetic noise in fit.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Relative noise added to synthetic traces in fit.
    #[arg(long)]
    pub noise: Option<f64>,
    /// Trace CSV files to fit (`t_s,v_V,i_A`).
    #[arg(long, value_delimiter = ',')]
    pub input: Vec<PathBuf>,
}

#[derive(Debug, Parser)]
#[command(name = "smem", version, about = "Schottky memristor simulator")]
pub struct Cli {
    #[arg(value_enum)]
    pub command: Command,
    #[command(flatten)]
    pub overrides: Overrides,
}

fn scalar(name: &str, values: &[f64]) -> CliResult<f64> {
    match values {
        [v] => Ok(*v),
        _ => Err(CliError::Config(format!("--{name} takes a single value for this command"))),
    }
}

/// Applies the overrides relevant to `cmd` and revalidates.
pub fn apply_overrides(cfg: &mut RunConfig, cmd: Command, ov: &Overrides) -> CliResult<()> {
    let p = &mut cfg.protocol;
    if let Some(r) = &ov.radius {
        if cmd == Command::FieldMap {
            p.field_map.radii = Some(r.clone());
        } else {
            cfg.geometry.radii = r.clone();
        }
    }
    if let Some(n) = ov.cycles {
        p.sweep.cycles = n;
        p.endurance.cycles = n;
    }
    if let Some(rate) = ov.rate {
        p.sweep.rate = rate;
        p.multilevel.rate = rate;
    }
    if let Some(v) = ov.v {
        p.field_map.v_applied = v;
    }
    match cmd {
        Command::Multilevel => {
            if let Some(s) = &ov.set_v {
                p.multilevel.set_levels = s.clone();
            }
            if let Some(r) = &ov.reset_v {
                p.multilevel.reset_levels = r.clone();
            }
            if let Some(r) = &ov.read_v {
                p.multilevel.read_v = scalar("read-v", r)?;
            }
        }
        Command::Retention => {
            if ov.set_v.is_some() || ov.reset_v.is_some() {
                let keep = |positive: bool| -> Vec<f64> {
                    p.retention.write_v.iter().copied().filter(|v| (*v > 0.0) == positive).collect()
                };
                let sets = ov.set_v.clone().unwrap_or_else(|| keep(true));
                let resets = ov.reset_v.clone().unwrap_or_else(|| keep(false));
                p.retention.write_v = sets.into_iter().chain(resets).collect();
            }
            if let Some(r) = &ov.read_v {
                p.retention.read_v = r.clone();
            }
        }
        _ => {
            if let Some(s) = &ov.set_v {
                let v = scalar("set-v", s)?;
                p.sweep.v_hi = v;
                p.endurance.set_v = v;
            }
            if let Some(r) = &ov.reset_v {
                let v = scalar("reset-v", r)?;
                p.sweep.v_lo = v;
                p.endurance.reset_v = v;
            }
            if let Some(r) = &ov.read_v {
                if matches!(cmd, Command::Fit | Command::Scaling) {
                    p.retention.read_v = r.clone();
                    if let Some(first) = r.first() {
                        p.endurance.read_v = *first;
                    }
                } else {
                    p.endurance.read_v = scalar("read-v", r)?;
                }
            }
        }
    }
    if let Some(seed) = ov.seed {
        p.fit.seed = seed;
    }
    if let Some(noise) = ov.noise {
        p.fit.noise = noise;
    }
    if let Some(f) = ov.format {
        cfg.output.format = f;
    }
    cfg.validate()
}

/// Where a run writes its artifacts.
pub fn run_dir(cfg: &RunConfig, cmd: Command, ov: &Overrides) -> PathBuf {
    ov.out
        .clone()
        .unwrap_or_else(|| Path::new(&cfg.output.dir).join(format!("{}-{}", cmd.name(), &cfg.hash()[..12])))
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub dir: PathBuf,
    pub manifest: Manifest,
}

/// Loads the config, applies overrides, runs the command and writes the manifest.
pub fn run(cmd: Command, ov: &Overrides) -> CliResult<RunOutcome> {
    let started = Instant::now();
    let mut cfg = match &ov.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    apply_overrides(&mut cfg, cmd, ov)?;
    if cmd == Command::Fit {
        for path in &ov.input {
            if !path.is_file() {
                return Err(CliError::Io(format!("{}: input file not found", path.display())));
            }
        }
    }
    let dir = run_dir(&cfg, cmd, ov);
    prepare_run_dir(&dir, ov.force)?;
    io::write_json(&dir.join(CONFIG_FILE), &cfg)?;
    let mut files = match cmd {
        Command::Sweep => commands::sweep(&cfg, &dir)?,
        Command::Retention => commands::retention(&cfg, &dir)?,
        Command::Endurance => commands::endurance(&cfg, &dir)?,
        Command::Multilevel => commands::multilevel(&cfg, &dir)?,
        Command::FieldMap => commands::field_map(&cfg, &dir)?,
        Command::Fit => commands::fit(&cfg, &dir, &ov.input)?,
        Command::Scaling => commands::scaling(&cfg, &dir)?,
    };
    files.push(CONFIG_FILE.to_string());
    let manifest = write_manifest(&dir, cmd.name(), &cfg.hash(), started.elapsed(), &files)?;
    Ok(RunOutcome { dir, manifest })
}
