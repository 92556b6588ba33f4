use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use serde_json::Value;

pub const MANIFEST: &str = "manifest.json";

/// Writes artifacts into one directory, each through a temporary file that is
/// renamed into place.
pub struct ArtifactDir {
    dir: PathBuf,
    written: Vec<String>,
    /// Canonical paths of the run's input files, which are never overwritten.
    inputs: Vec<PathBuf>,
}

impl ArtifactDir {
    pub fn create(dir: &Path, inputs: &[PathBuf]) -> Result<Self> {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            written: Vec::new(),
            inputs: inputs.iter().filter_map(|p| p.canonicalize().ok()).collect(),
        })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    pub fn write(&mut self, name: &str, contents: &str) -> Result<()> {
        let path = self.path(name);
        if let Ok(target) = path.canonicalize() {
            if self.inputs.contains(&target) {
                bail!("refusing to overwrite input file {}; choose another --out", path.display());
            }
        }
        write_atomic(&path, contents)?;
        self.written.push(name.to_string());
        Ok(())
    }

    pub fn written(&self) -> &[String] {
        &self.written
    }
}

pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("artifact");
    let tmp = path.with_file_name(format!(".{name}.tmp{}", std::process::id()));
    fs::write(&tmp, contents).with_context(|| format!("writing {}", tmp.display()))?;
    fs::rename(&tmp, path).with_context(|| format!("renaming into {}", path.display()))?;
    Ok(())
}

#[derive(Debug, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub runs: Vec<RunRecord>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct RunRecord {
    pub command: String,
    pub argv: Vec<String>,
    pub inputs: Vec<PathBuf>,
    pub config: Value,
    pub seed: u64,
    pub artifacts: Vec<String>,
    pub timestamp_unix: u64,
}

/// Appends `run` to the directory's manifest, starting a new one if the file
/// is missing or unreadable.
pub fn record_run(dir: &Path, run: RunRecord) -> Result<()> {
    let path = dir.join(MANIFEST);
    let mut manifest = fs::read_to_string(&path)
        .ok()
        .and_then(|s| serde_json::from_str::<Manifest>(&s).ok())
        .unwrap_or_else(|| Manifest {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            runs: Vec::new(),
        });
    manifest.version = env!("CARGO_PKG_VERSION").to_string();
    manifest.runs.push(run);
    write_atomic(&path, &(serde_json::to_string_pretty(&manifest)? + "\n"))
}

pub fn now_unix() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}
