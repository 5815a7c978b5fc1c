//! Run directories and their manifests. A run directory is never reused unless
//! the caller forces it; the manifest lists a checksum for every artifact.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::hex;
use crate::error::{CliError, CliResult};
use crate::io::{io_at, write_json};

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Artifact {
    pub file: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub command: String,
    pub config_sha256: String,
    pub cli_version: String,
    pub core_version: String,
    pub wall_time_s: f64,
    pub artifacts: Vec<Artifact>,
}

/// Creates `dir`. An existing non-empty directory is an error unless `force`,
/// in which case its previous contents are removed first.
pub fn prepare_run_dir(dir: &Path, force: bool) -> CliResult<()> {
    if dir.exists() {
        let occupied = fs::read_dir(dir).map_err(|e| io_at(dir, e))?.next().is_some();
        if occupied {
            if !force {
                return Err(CliError::Io(format!(
                    "{} already holds a run; choose another --out or pass --force",
                    dir.display()
                )));
            }
            fs::remove_dir_all(dir).map_err(|e| io_at(dir, e))?;
        }
    }
    fs::create_dir_all(dir).map_err(|e| io_at(dir, e))
}

pub fn checksum(path: &Path) -> CliResult<Artifact> {
    let data = fs::read(path).map_err(|e| io_at(path, e))?;
    Ok(Artifact {
        file: path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default(),
        sha256: hex(&Sha256::digest(&data)),
        bytes: data.len() as u64,
    })
}

/// Checksums `files` (relative to `dir`) and writes the manifest.
pub fn write_manifest(
    dir: &Path,
    command: &str,
    config_sha256: &str,
    wall_time: Duration,
    files: &[String],
) -> CliResult<Manifest> {
    let mut names: Vec<&String> = files.iter().collect();
    names.sort();
    let artifacts = names.into_iter().map(|f| checksum(&dir.join(f))).collect::<CliResult<Vec<_>>>()?;
    let manifest = Manifest {
        command: command.to_string(),
        config_sha256: config_sha256.to_string(),
        cli_version: env!("CARGO_PKG_VERSION").to_string(),
        core_version: schottky_mem::VERSION.to_string(),
        wall_time_s: wall_time.as_secs_f64(),
        artifacts,
    };
    write_json(&dir.join(MANIFEST_FILE), &manifest)?;
    Ok(manifest)
}

pub fn read_manifest(dir: &Path) -> CliResult<Manifest> {
    let path: PathBuf = dir.join(MANIFEST_FILE);
    let text = fs::read_to_string(&path).map_err(|e| io_at(&path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}
