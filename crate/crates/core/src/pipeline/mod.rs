//! End-to-end runs, stage execution and artifact formats.
//!
//! A run directory holds one artifact per stage output. Tables are
//! comma-separated with `# segprof kind=... version=...` header lines and
//! documents are JSON envelopes carrying the same kind and version; readers
//! reject other kinds and versions. Floats are written in their shortest
//! round-trip form so downstream stages read back exactly what was
//! computed.

pub mod artifact;
mod config;
pub mod demo;
mod export;
mod stages;
pub mod tables;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

pub use artifact::{RunLock, ARTIFACT_VERSION};
pub use config::{BinningConfig, InputConfig, OutputConfig, PipelineConfig, ScalingConfig, DEFAULT_SEED};
pub use export::{export_plot_data, PlotKind};
pub use stages::Stage;

use crate::clustering::Method;
use crate::error::Result;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Seeds {
    pub base: u64,
    pub scaling: u64,
    pub sweep: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageTiming {
    pub stage: String,
    pub seconds: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub version: String,
    pub artifact_version: u32,
    pub config_hash: String,
    pub seeds: Seeds,
    pub chosen_method: Method,
    pub chosen_k: usize,
    /// Wall-clock time per stage. Not part of the reproducible content.
    pub timings: Vec<StageTiming>,
    /// SHA-256 of every artifact, keyed by path relative to the run directory.
    pub artifacts: BTreeMap<String, String>,
}

/// Runs one stage against the artifacts in `dir` under the writer lock.
pub fn run_stage(stage: Stage, cfg: &PipelineConfig, dir: &Path) -> Result<()> {
    let _lock = RunLock::acquire(dir)?;
    stages::execute(stage, cfg, dir).map_err(|e| e.in_stage(stage.name()))
}

/// Runs every stage in order and writes `manifest.json`. A failing stage
/// stops the run; earlier artifacts stay in place.
pub fn run_pipeline(cfg: &PipelineConfig, dir: &Path) -> Result<Manifest> {
    cfg.validate()?;
    let _lock = RunLock::acquire(dir)?;
    let manifest_path = dir.join(tables::MANIFEST);
    if manifest_path.exists() {
        std::fs::remove_file(&manifest_path)?;
    }
    let mut timings = Vec::new();
    for stage in Stage::ALL {
        let start = Instant::now();
        log::info!("stage {stage}");
        stages::execute(stage, cfg, dir).map_err(|e| e.in_stage(stage.name()))?;
        timings.push(StageTiming { stage: stage.name().to_string(), seconds: start.elapsed().as_secs_f64() });
    }
    let grid = tables::read_grid(&dir.join(tables::GRID))?;
    let manifest = Manifest {
        version: VERSION.to_string(),
        artifact_version: ARTIFACT_VERSION,
        config_hash: cfg.hash(),
        seeds: Seeds { base: cfg.seed, scaling: cfg.scaling_seed(), sweep: cfg.sweep_seed() },
        chosen_method: grid.chosen.0,
        chosen_k: grid.chosen.1,
        timings,
        artifacts: artifact_hashes(dir)?,
    };
    artifact::write_json(&manifest_path, "manifest", &manifest)?;
    Ok(manifest)
}

/// SHA-256 of every stage artifact present in `dir`.
pub fn artifact_hashes(dir: &Path) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for stage in Stage::ALL {
        for name in stage.outputs() {
            let path = dir.join(name);
            if path.is_dir() {
                let mut files: Vec<PathBuf> = std::fs::read_dir(&path)?
                    .map(|e| e.map(|e| e.path()))
                    .collect::<std::io::Result<_>>()?;
                files.sort();
                for f in files {
                    let rel = format!("{name}/{}", f.file_name().expect("file entry").to_string_lossy());
                    out.insert(rel, artifact::sha256_file(&f)?);
                }
            } else if path.exists() {
                out.insert(name.to_string(), artifact::sha256_file(&path)?);
            }
        }
    }
    Ok(out)
}

pub fn read_manifest(dir: &Path) -> Result<Manifest> {
    artifact::read_json(&dir.join(tables::MANIFEST), "manifest")
}
