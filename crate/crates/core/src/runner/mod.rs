//! Experiment runner: configuration, suites, output files and the
//! acceptance battery behind the `hnlab` binary.
//!
//! [`run`] executes one command, writes its data files into the output
//! directory through temp-then-rename, and finishes with `manifest.json`
//! listing every file with its SHA-256 digest.

pub mod acceptance;
pub mod config;
mod suites;
pub mod svg;

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub use acceptance::{verify_all, AcceptanceConfig, AcceptanceReport, CriterionOutcome};
pub use config::{Command, EnergyGrid, ExperimentConfig, Scale, Thresholds, OUT_DIR_ENV};
pub use svg::{emit_svg, Layer, LayerKind, Plot};

use crate::error::Result;

/// A data file produced by a suite, not yet written.
#[derive(Clone, Debug, PartialEq)]
pub struct Artifact {
    pub name: String,
    pub bytes: Vec<u8>,
}

impl Artifact {
    pub fn text(name: &str, text: String) -> Self {
        Artifact { name: name.into(), bytes: text.into_bytes() }
    }

    pub fn json<T: Serialize>(name: &str, value: &T) -> Result<Self> {
        let mut bytes = serde_json::to_vec_pretty(value)?;
        bytes.push(b'\n');
        Ok(Artifact { name: name.into(), bytes })
    }

    pub fn sha256(&self) -> String {
        sha256_hex(&self.bytes)
    }
}

/// Seed and stream of one independent task.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskSeed {
    pub task: String,
    pub seed: u64,
    pub stream: u64,
}

impl TaskSeed {
    pub fn new(task: impl Into<String>, seed: u64, stream: u64) -> Self {
        TaskSeed { task: task.into(), seed, stream }
    }
}

/// What a suite hands back to [`run`].
#[derive(Clone, Debug, Default)]
pub struct SuiteOutput {
    pub artifacts: Vec<Artifact>,
    pub tasks: Vec<TaskSeed>,
    /// `None` for commands that only produce data.
    pub passed: Option<bool>,
    /// Wall-clock per named stage; kept out of the data files.
    pub timings: Vec<(String, f64)>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub config: ExperimentConfig,
    pub code_version: String,
    pub generator: String,
    pub wall_clock_seconds: f64,
    pub timings: Vec<(String, f64)>,
    pub tasks: Vec<TaskSeed>,
    pub files: Vec<FileDigest>,
    pub passed: Option<bool>,
}

impl RunManifest {
    /// Recomputes every digest against the files in `dir`; returns the
    /// paths that are missing or differ.
    pub fn mismatches(&self, dir: &Path) -> Vec<String> {
        self.files
            .iter()
            .filter(|f| fs::read(dir.join(&f.path)).map_or(true, |b| sha256_hex(&b) != f.sha256))
            .map(|f| f.path.clone())
            .collect()
    }
}

pub const MANIFEST: &str = "manifest.json";

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Writes `bytes` to `dir/name` through a temporary file in the same
/// directory, so readers never see a partial file.
pub fn write_atomic(dir: &Path, name: &str, bytes: &[u8]) -> Result<PathBuf> {
    let target = dir.join(name);
    let tmp = dir.join(format!(".{name}.tmp-{}", std::process::id()));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, &target)?;
    Ok(target)
}

/// Runs the suite named by `config.command` without touching the disk.
pub fn execute(config: &ExperimentConfig) -> Result<SuiteOutput> {
    config.validate()?;
    suites::execute(config)
}

/// Runs the suite, writes its files and the manifest into the resolved
/// output directory (created if missing).
pub fn run(config: &ExperimentConfig) -> Result<RunManifest> {
    let start = Instant::now();
    let out = execute(config)?;
    let dir = config.resolved_out_dir();
    fs::create_dir_all(&dir)?;
    let mut files = Vec::with_capacity(out.artifacts.len());
    for a in &out.artifacts {
        write_atomic(&dir, &a.name, &a.bytes)?;
        files.push(FileDigest { path: a.name.clone(), sha256: a.sha256(), bytes: a.bytes.len() as u64 });
    }
    let manifest = RunManifest {
        config: config.clone(),
        code_version: format!("{} {}", env!("CARGO_PKG_NAME"), env!("CARGO_PKG_VERSION")),
        generator: crate::rng::GENERATOR.into(),
        wall_clock_seconds: start.elapsed().as_secs_f64(),
        timings: out.timings,
        tasks: out.tasks,
        files,
        passed: out.passed,
    };
    write_atomic(&dir, MANIFEST, &Artifact::json(MANIFEST, &manifest)?.bytes)?;
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn atomic_write_leaves_no_temp_files() {
        let dir = tempfile::tempdir().unwrap();
        write_atomic(dir.path(), "a.txt", b"one").unwrap();
        write_atomic(dir.path(), "a.txt", b"two").unwrap();
        let names: Vec<String> = fs::read_dir(dir.path()).unwrap().map(|e| e.unwrap().file_name().into_string().unwrap()).collect();
        assert_eq!(names, vec!["a.txt".to_string()]);
        assert_eq!(fs::read(dir.path().join("a.txt")).unwrap(), b"two");
    }

    #[test]
    fn digest_of_empty_input() {
        assert_eq!(sha256_hex(b""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    }
}
