//! Data files, written atomically, and the run manifest.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::error::{LabError, Result};

/// Version of the manifest layout and data file formats.
pub const ARTIFACT_VERSION: u32 = 1;

/// Writes `bytes` to `dir/name` through a temporary file and a rename.
pub fn write_atomic(dir: &Path, name: &str, bytes: &[u8]) -> Result<PathBuf> {
    let target = dir.join(name);
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| LabError::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| LabError::io(&target, e))?;
    tmp.as_file().sync_all().map_err(|e| LabError::io(&target, e))?;
    tmp.persist(&target).map_err(|e| LabError::io(&target, e.error))?;
    Ok(target)
}

/// Minimal CSV table. Cells are plain numbers and identifiers, so no quoting.
#[derive(Clone, Debug)]
pub struct Csv {
    text: String,
    width: usize,
}

impl Csv {
    pub fn new(header: &[&str]) -> Self {
        Self { text: format!("{}\n", header.join(",")), width: header.len() }
    }

    pub fn row(&mut self, cells: &[String]) {
        assert_eq!(cells.len(), self.width, "row width must match header");
        self.text.push_str(&cells.join(","));
        self.text.push('\n');
    }

    pub fn as_bytes(&self) -> &[u8] {
        self.text.as_bytes()
    }
}

/// Shortest round-trip representation, so reruns compare byte for byte.
pub fn num(x: f64) -> String {
    format!("{x:?}")
}

#[derive(Clone, Debug, Serialize)]
pub struct PhaseTiming {
    pub phase: String,
    pub seconds: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct FileEntry {
    pub name: String,
    pub bytes: u64,
}

#[derive(Clone, Debug, Serialize)]
pub struct RunManifest {
    pub artifact_version: u32,
    pub tool_version: String,
    pub config: ExperimentConfig,
    pub timings: Vec<PhaseTiming>,
    pub files: Vec<FileEntry>,
    pub warnings: Vec<String>,
    /// Non-deterministic measurements kept out of the data files.
    pub measurements: serde_json::Value,
}

/// Collects data files, timings and warnings of one run.
pub struct RunOutput {
    dir: PathBuf,
    files: Vec<FileEntry>,
    timings: Vec<PhaseTiming>,
    pub warnings: Vec<String>,
    pub measurements: serde_json::Map<String, serde_json::Value>,
}

impl RunOutput {
    pub fn new(dir: &Path) -> Result<Self> {
        std::fs::create_dir_all(dir).map_err(|e| LabError::io(dir, e))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            files: Vec::new(),
            timings: Vec::new(),
            warnings: Vec::new(),
            measurements: serde_json::Map::new(),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        write_atomic(&self.dir, name, bytes)?;
        self.files.retain(|f| f.name != name);
        self.files.push(FileEntry { name: name.to_string(), bytes: bytes.len() as u64 });
        Ok(())
    }

    pub fn write_csv(&mut self, name: &str, csv: &Csv) -> Result<()> {
        self.write(name, csv.as_bytes())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value).map_err(|e| LabError::config(name, e.to_string()))?;
        text.push('\n');
        self.write(name, text.as_bytes())
    }

    /// Runs `f`, recording its wall-clock time under `phase`.
    pub fn phase<T>(&mut self, phase: &str, f: impl FnOnce(&mut Self) -> Result<T>) -> Result<T> {
        let start = Instant::now();
        let out = f(self);
        self.timings.push(PhaseTiming { phase: phase.to_string(), seconds: start.elapsed().as_secs_f64() });
        out
    }

    /// Writes `manifest.json` last, atomically.
    pub fn finish(self, config: &ExperimentConfig) -> Result<RunManifest> {
        let manifest = RunManifest {
            artifact_version: ARTIFACT_VERSION,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            config: config.clone(),
            timings: self.timings,
            files: self.files,
            warnings: self.warnings,
            measurements: serde_json::Value::Object(self.measurements),
        };
        let mut text = serde_json::to_string_pretty(&manifest).map_err(|e| LabError::config("manifest", e.to_string()))?;
        text.push('\n');
        write_atomic(&self.dir, "manifest.json", text.as_bytes())?;
        Ok(manifest)
    }
}
