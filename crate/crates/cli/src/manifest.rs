//! Run provenance: every command records what it read, what it wrote, and
//! how it was configured, so a run can be audited or reproduced later.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Duration;

use anyhow::Context;
use serde::Serialize;
use sha2::{Digest, Sha256};

/// A file the run touched, stamped with its content hash.
#[derive(Debug, Clone, Serialize)]
pub struct FileStamp {
    pub path: String,
    pub sha256: String,
}

/// Provenance record emitted once per command invocation.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    /// Resolved flag values after defaults were applied.
    pub config: serde_json::Value,
    pub seeds: Vec<u64>,
    pub inputs: Vec<FileStamp>,
    pub outputs: Vec<FileStamp>,
    pub timings_ms: BTreeMap<String, f64>,
}

impl RunManifest {
    pub fn new(command: &str, config: impl Serialize) -> anyhow::Result<Self> {
        Ok(RunManifest {
            command: command.to_string(),
            config: serde_json::to_value(config).context("serializing configuration")?,
            seeds: Vec::new(),
            inputs: Vec::new(),
            outputs: Vec::new(),
            timings_ms: BTreeMap::new(),
        })
    }

    pub fn seed(&mut self, seed: u64) {
        self.seeds.push(seed);
    }

    pub fn input(&mut self, path: &Path) -> anyhow::Result<()> {
        self.inputs.push(stamp(path)?);
        Ok(())
    }

    pub fn output(&mut self, path: &Path) -> anyhow::Result<()> {
        self.outputs.push(stamp(path)?);
        Ok(())
    }

    pub fn timing(&mut self, name: &str, elapsed: Duration) {
        self.timings_ms
            .insert(name.to_string(), elapsed.as_secs_f64() * 1_000.0);
    }

    /// Writes the manifest atomically; the run counts as complete only after
    /// this succeeds.
    pub fn write(&self, path: &Path) -> anyhow::Result<()> {
        let mut text = serde_json::to_string_pretty(self).context("serializing manifest")?;
        text.push('\n');
        l3watch::trace_io::write_atomic(path, text.as_bytes())
            .with_context(|| format!("writing manifest {}", path.display()))
    }
}

fn stamp(path: &Path) -> anyhow::Result<FileStamp> {
    use std::fmt::Write as _;

    let bytes =
        std::fs::read(path).with_context(|| format!("hashing {}", path.display()))?;
    let digest = Sha256::digest(&bytes);
    let mut sha256 = String::with_capacity(64);
    for byte in digest {
        write!(sha256, "{byte:02x}").expect("string write");
    }
    Ok(FileStamp {
        path: path.display().to_string(),
        sha256,
    })
}

/// Manifest location: beside the primary output when there is one, named
/// after the command in the working directory otherwise.
pub fn default_manifest_path(command: &str, primary_out: Option<&Path>) -> PathBuf {
    match primary_out {
        Some(out) => {
            let mut name = out
                .file_name()
                .map(|n| n.to_string_lossy().into_owned())
                .unwrap_or_else(|| command.to_string());
            name.push_str(".manifest.json");
            out.with_file_name(name)
        }
        None => PathBuf::from(format!("{command}.manifest.json")),
    }
}
