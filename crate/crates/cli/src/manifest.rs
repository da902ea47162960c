//! Run manifests: what was invoked, with which settings, what it produced.
//! Written next to the outputs even when the command fails, with the error
//! recorded. Manifests carry wall-clock timing and are the one output class
//! exempt from byte-reproducibility.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::Result;
use serde::Serialize;

use crate::formats::{write_json, FORMAT_VERSION};

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub format_version: u32,
    pub command: String,
    pub tool_version: String,
    /// Resolved settings snapshot (flags after config-file merging).
    pub config: BTreeMap<String, String>,
    pub seeds: Vec<u64>,
    pub inputs: Vec<PathBuf>,
    pub outputs: Vec<PathBuf>,
    pub wall_clock_s: f64,
    pub error: Option<String>,
}

pub struct ManifestBuilder {
    manifest: RunManifest,
    started: Instant,
    path: PathBuf,
}

impl ManifestBuilder {
    pub fn new(command: &str, manifest_path: PathBuf) -> Self {
        ManifestBuilder {
            manifest: RunManifest {
                format_version: FORMAT_VERSION,
                command: command.to_string(),
                tool_version: env!("CARGO_PKG_VERSION").to_string(),
                config: BTreeMap::new(),
                seeds: Vec::new(),
                inputs: Vec::new(),
                outputs: Vec::new(),
                wall_clock_s: 0.0,
                error: None,
            },
            started: Instant::now(),
            path: manifest_path,
        }
    }

    pub fn setting(&mut self, key: &str, value: impl ToString) {
        self.manifest.config.insert(key.to_string(), value.to_string());
    }

    pub fn seeds(&mut self, seeds: impl IntoIterator<Item = u64>) {
        self.manifest.seeds.extend(seeds);
    }

    pub fn input(&mut self, path: impl AsRef<Path>) {
        self.manifest.inputs.push(path.as_ref().to_path_buf());
    }

    pub fn output(&mut self, path: impl AsRef<Path>) {
        self.manifest.outputs.push(path.as_ref().to_path_buf());
    }

    /// Record the outcome and write the manifest file.
    pub fn finish(mut self, error: Option<&anyhow::Error>) -> Result<()> {
        self.manifest.wall_clock_s = self.started.elapsed().as_secs_f64();
        self.manifest.error = error.map(|e| format!("{e:#}"));
        self.manifest.outputs.push(self.path.clone());
        if let Some(parent) = self.path.parent() {
            if !parent.as_os_str().is_empty() {
                std::fs::create_dir_all(parent)?;
            }
        }
        write_json(&self.path, &self.manifest)
    }
}
