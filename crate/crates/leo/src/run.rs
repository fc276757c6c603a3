//! Run directories and their manifests.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::corpus::sha256_hex;
use crate::error::{Error, Result};

pub const MANIFEST_FILE: &str = "manifest.json";

pub fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Artifact {
    pub sha256: String,
    /// False for files carrying wall-clock data, which can't be replayed.
    pub deterministic: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    /// Resolved `key=value` configuration.
    pub config: String,
    pub dataset_hash: Option<String>,
    pub world_hashes: BTreeMap<String, String>,
    /// Other input files by path, with their SHA-256.
    pub inputs: BTreeMap<String, String>,
    pub seed: u64,
    /// Paths relative to the run directory.
    pub artifacts: BTreeMap<String, Artifact>,
    pub tool_version: String,
    /// Set once every artifact is written.
    pub complete: bool,
}

/// A fresh `run_<unix seconds>_seed<seed>` directory.
#[derive(Debug)]
pub struct RunDir {
    pub path: PathBuf,
    pub manifest: RunManifest,
}

impl RunDir {
    /// Creates the directory under `out` and writes the initial manifest, so
    /// the run is reproducible even if it dies part way.
    pub fn create(out: &Path, command: &str, config: &str, seed: u64) -> Result<Self> {
        let secs = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        let base = format!("run_{secs}_seed{seed}");
        let mut path = out.join(&base);
        let mut k = 1;
        while path.exists() {
            path = out.join(format!("{base}_{k}"));
            k += 1;
        }
        fs::create_dir_all(&path).map_err(|e| Error::io(&path, e))?;
        let run = RunDir {
            path,
            manifest: RunManifest {
                command: command.into(),
                config: config.into(),
                dataset_hash: None,
                world_hashes: BTreeMap::new(),
                inputs: BTreeMap::new(),
                seed,
                artifacts: BTreeMap::new(),
                tool_version: concat!(env!("CARGO_PKG_NAME"), " ", env!("CARGO_PKG_VERSION")).into(),
                complete: false,
            },
        };
        run.write_manifest()?;
        Ok(run)
    }

    pub fn set_inputs(&mut self, dataset_hash: String, world_hashes: BTreeMap<String, String>) -> Result<()> {
        self.manifest.dataset_hash = Some(dataset_hash);
        self.manifest.world_hashes = world_hashes;
        self.write_manifest()
    }

    /// Writes `rel` inside the run and records its hash.
    pub fn write(&mut self, rel: &str, bytes: &[u8], deterministic: bool) -> Result<PathBuf> {
        let p = self.path.join(rel);
        write_file(&p, bytes)?;
        self.record(rel, bytes, deterministic);
        Ok(p)
    }

    pub fn add_input(&mut self, path: &Path, bytes: &[u8]) {
        self.manifest.inputs.insert(path.display().to_string(), sha256_hex(bytes));
    }

    /// Records a file written by other means.
    pub fn record(&mut self, rel: &str, bytes: &[u8], deterministic: bool) {
        self.manifest.artifacts.insert(
            rel.into(),
            Artifact {
                sha256: sha256_hex(bytes),
                deterministic,
            },
        );
    }

    pub fn write_manifest(&self) -> Result<()> {
        let mut s = serde_json::to_string_pretty(&self.manifest).expect("manifest serializes");
        s.push('\n');
        write_file(&self.path.join(MANIFEST_FILE), s.as_bytes())
    }

    pub fn finish(mut self) -> Result<PathBuf> {
        self.manifest.complete = true;
        self.write_manifest()?;
        Ok(self.path)
    }
}

pub fn read_manifest(run: &Path) -> Result<RunManifest> {
    let p = run.join(MANIFEST_FILE);
    let text = fs::read_to_string(&p).map_err(|e| Error::io(&p, e))?;
    serde_json::from_str(&text).map_err(|e| Error::parse(&p, e))
}
