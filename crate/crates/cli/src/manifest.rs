use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{Context, Result};
use poincare_core::digest::{file_sha256, sha256_hex};
use serde::Serialize;

/// Provenance record written next to every command's primary output.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub toolkit_version: String,
    pub seed: Option<u64>,
    pub threads: usize,
    pub config_digest: Option<String>,
    /// Input path → SHA-256 of its content.
    pub inputs: BTreeMap<String, String>,
    /// Output path → SHA-256 of its content.
    pub outputs: BTreeMap<String, String>,
    pub warnings: Vec<String>,
    /// Only present with `--record-wall-time`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_time_s: Option<f64>,
}

pub struct ManifestBuilder {
    manifest: RunManifest,
    started: Instant,
    record_wall_time: bool,
}

impl ManifestBuilder {
    pub fn new(command: &str, threads: usize, record_wall_time: bool) -> Self {
        Self {
            manifest: RunManifest {
                command: command.to_owned(),
                toolkit_version: env!("CARGO_PKG_VERSION").to_owned(),
                seed: None,
                threads,
                config_digest: None,
                inputs: BTreeMap::new(),
                outputs: BTreeMap::new(),
                warnings: Vec::new(),
                wall_time_s: None,
            },
            started: Instant::now(),
            record_wall_time,
        }
    }

    pub fn input(&mut self, path: &Path) -> Result<()> {
        let digest = file_sha256(path).with_context(|| format!("reading {}", path.display()))?;
        self.manifest
            .inputs
            .insert(path.display().to_string(), digest);
        Ok(())
    }

    pub fn config<T: Serialize>(&mut self, config: &T) -> Result<()> {
        self.manifest.config_digest = Some(sha256_hex(serde_json::to_vec(config)?));
        Ok(())
    }

    pub fn seed(&mut self, seed: u64) {
        self.manifest.seed = Some(seed);
    }

    pub fn warn(&mut self, message: String) {
        log::warn!("{message}");
        self.manifest.warnings.push(message);
    }

    /// Registers an output that has already been written.
    pub fn output(&mut self, path: &Path) -> Result<()> {
        let digest =
            file_sha256(path).with_context(|| format!("reading back {}", path.display()))?;
        self.manifest
            .outputs
            .insert(path.display().to_string(), digest);
        Ok(())
    }

    /// Writes `<primary>.manifest.json` and returns its path.
    pub fn finish(mut self, primary: &Path) -> Result<PathBuf> {
        if self.record_wall_time {
            self.manifest.wall_time_s = Some(self.started.elapsed().as_secs_f64());
        }
        let path = sidecar(primary, "manifest.json");
        let mut text = serde_json::to_string_pretty(&self.manifest)?;
        text.push('\n');
        std::fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
        Ok(path)
    }
}

/// `<path>.<suffix>`, e.g. `emb.tsv` → `emb.tsv.meta.json`.
pub fn sidecar(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".");
    s.push(suffix);
    PathBuf::from(s)
}
