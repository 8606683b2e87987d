//! Run directories and manifests.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::{CliError, ENGINE_VERSION, OUT_ENV};

pub const MANIFEST_FILE: &str = "manifest.json";

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

pub fn unix_millis() -> u128 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_millis()).unwrap_or(0)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManifestFile {
    pub path: String,
    pub sha256: String,
    pub bytes: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub engine_version: String,
    pub command: String,
    /// SHA-256 of the config file bytes as read.
    pub config_sha256: String,
    pub root_seed: u64,
    pub started_unix_ms: u128,
    pub finished_unix_ms: u128,
    pub files: Vec<ManifestFile>,
}

impl RunManifest {
    pub fn new(command: &str, config_bytes: &[u8], root_seed: u64, started_unix_ms: u128) -> Self {
        Self {
            engine_version: ENGINE_VERSION.into(),
            command: command.into(),
            config_sha256: sha256_hex(config_bytes),
            root_seed,
            started_unix_ms,
            finished_unix_ms: 0,
            files: Vec::new(),
        }
    }
}

/// `--out`, then `execution.output_dir`, then `$SECTORSIM_OUT`, then
/// `runs/<config stem>`.
pub fn resolve_out_dir(flag: Option<&Path>, from_config: Option<&str>, config_path: &Path) -> PathBuf {
    if let Some(p) = flag {
        return p.to_path_buf();
    }
    if let Some(p) = from_config {
        return PathBuf::from(p);
    }
    let stem = config_path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "run".into());
    match std::env::var_os(OUT_ENV) {
        Some(base) if !base.is_empty() => PathBuf::from(base).join(stem),
        _ => PathBuf::from("runs").join(stem),
    }
}

/// Fails unless `dir` is absent or empty, or `force` is set.
pub fn claim_dir(dir: &Path, force: bool) -> Result<(), CliError> {
    if dir.exists() {
        if !dir.is_dir() {
            return Err(CliError::Usage(format!("{} exists and is not a directory", dir.display())));
        }
        if !force && fs::read_dir(dir)?.next().is_some() {
            return Err(CliError::Usage(format!(
                "{} is not empty; pass --force to overwrite",
                dir.display()
            )));
        }
    }
    Ok(())
}

/// Writes `files` (paths relative to `dir`) and then the manifest listing
/// them.
pub fn write_run(dir: &Path, files: &[(String, Vec<u8>)], mut manifest: RunManifest) -> Result<RunManifest, CliError> {
    fs::create_dir_all(dir)?;
    for (name, bytes) in files {
        let path = dir.join(name);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        fs::write(&path, bytes)?;
        manifest.files.push(ManifestFile {
            path: name.clone(),
            sha256: sha256_hex(bytes),
            bytes: bytes.len(),
        });
    }
    manifest.finished_unix_ms = unix_millis();
    let mut text = serde_json::to_vec_pretty(&manifest)?;
    text.push(b'\n');
    fs::write(dir.join(MANIFEST_FILE), text)?;
    Ok(manifest)
}
