//! Artifact writers for a run directory: NDJSON row streams, plot-ready CSV
//! files, binary snapshots, and a closing manifest that inventories every
//! artifact with a sha256 digest.
//!
//! All serialization here is deterministic: struct fields emit in declaration
//! order and floats print in shortest round-trip form, so rerunning an
//! identical config reproduces the files byte for byte.

use crate::error::{Error, Result};
use crate::field::SpectralField;
use crate::snapshot;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};

/// One verdict row in the stable check schema.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CheckReport {
    pub check_id: String,
    pub config_hash: String,
    /// Worst signed slack over the check's rows; nonnegative means the
    /// inequality held everywhere.
    pub slack_min: f64,
    /// The check's headline observable (a ratio, a fitted rate, a deviation).
    pub constant_observed: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ArtifactEntry {
    /// Path relative to the run directory.
    pub name: String,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub config_hash: String,
    pub scenario: String,
    /// Every config field that was filled from a default, as `path = value`.
    pub defaulted: Vec<String>,
    pub artifacts: Vec<ArtifactEntry>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(bytes);
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

/// Render serializable rows as NDJSON text, one object per line.
pub fn ndjson_string<T: Serialize>(rows: &[T]) -> Result<String> {
    let mut out = String::new();
    for row in rows {
        let line = serde_json::to_string(row)
            .map_err(|e| Error::Other(format!("ndjson encode failed: {e}")))?;
        out.push_str(&line);
        out.push('\n');
    }
    Ok(out)
}

/// Render `(t, value, bound)` triples as CSV with a fixed header.
pub fn csv_string(rows: &[(f64, f64, f64)]) -> String {
    let mut out = String::from("t,value,bound\n");
    for (t, value, bound) in rows {
        out.push_str(&format!("{t},{value},{bound}\n"));
    }
    out
}

/// Accumulates artifacts for a single run directory and closes with a
/// manifest. Every write lands under `dir` and is digested on the way out.
pub struct RunWriter {
    dir: PathBuf,
    config_hash: String,
    scenario: String,
    defaulted: Vec<String>,
    artifacts: Vec<ArtifactEntry>,
}

impl RunWriter {
    /// Create (or reuse) the run directory `root/<config_hash>`.
    pub fn create(
        root: &Path,
        config_hash: &str,
        scenario: &str,
        defaulted: Vec<String>,
    ) -> Result<Self> {
        let dir = root.join(config_hash);
        std::fs::create_dir_all(&dir)?;
        Ok(RunWriter {
            dir,
            config_hash: config_hash.to_string(),
            scenario: scenario.to_string(),
            defaulted,
            artifacts: Vec::new(),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn config_hash(&self) -> &str {
        &self.config_hash
    }

    fn record(&mut self, name: &str, bytes: &[u8]) -> Result<PathBuf> {
        let path = self.dir.join(name);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)?;
        }
        std::fs::write(&path, bytes)?;
        self.artifacts.push(ArtifactEntry {
            name: name.to_string(),
            bytes: bytes.len() as u64,
            sha256: sha256_hex(bytes),
        });
        Ok(path)
    }

    pub fn write_ndjson<T: Serialize>(&mut self, name: &str, rows: &[T]) -> Result<PathBuf> {
        let text = ndjson_string(rows)?;
        self.record(name, text.as_bytes())
    }

    pub fn write_csv(&mut self, name: &str, rows: &[(f64, f64, f64)]) -> Result<PathBuf> {
        let text = csv_string(rows);
        self.record(name, text.as_bytes())
    }

    /// A single JSON document (summary objects, fitted models).
    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<PathBuf> {
        let mut text = serde_json::to_string_pretty(value)
            .map_err(|e| Error::Other(format!("json encode failed: {e}")))?;
        text.push('\n');
        self.record(name, text.as_bytes())
    }

    pub fn write_text(&mut self, name: &str, text: &str) -> Result<PathBuf> {
        self.record(name, text.as_bytes())
    }

    pub fn write_spectral_snapshot(
        &mut self,
        name: &str,
        field: &SpectralField,
    ) -> Result<PathBuf> {
        let bytes = snapshot::encode_spectral(field);
        self.record(name, &bytes)
    }

    /// Write `manifest.json` and return the manifest. Artifacts are listed in
    /// name order so the manifest itself is reproducible.
    pub fn finish(mut self) -> Result<Manifest> {
        self.artifacts.sort_by(|a, b| a.name.cmp(&b.name));
        let manifest = Manifest {
            config_hash: self.config_hash.clone(),
            scenario: self.scenario.clone(),
            defaulted: self.defaulted.clone(),
            artifacts: self.artifacts.clone(),
        };
        let mut text = serde_json::to_string_pretty(&manifest)
            .map_err(|e| Error::Other(format!("manifest encode failed: {e}")))?;
        text.push('\n');
        std::fs::write(self.dir.join("manifest.json"), text.as_bytes())?;
        Ok(manifest)
    }
}
