use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::ingest::{BinningScheme, RatioSpec, TableSchema, DEFAULT_SCHEME_NAME};
use crate::profiling::ProfileOptions;
use crate::scaling::HomalsOptions;
use crate::seed::derive_seed;
use crate::validation::SweepOptions;

pub const DEFAULT_SEED: u64 = 20_140_516;

const SCALING_STREAM: u64 = 1;
const SWEEP_STREAM: u64 = 2;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    /// Base seed; every stage derives its own from it.
    #[serde(default = "default_seed")]
    pub seed: u64,
    pub input: InputConfig,
    pub schema: TableSchema,
    pub ratios: Vec<RatioSpec>,
    #[serde(default)]
    pub binning: BinningConfig,
    #[serde(default)]
    pub scaling: ScalingConfig,
    #[serde(default)]
    pub sweep: SweepOptions,
    #[serde(default)]
    pub profiling: ProfileOptions,
    #[serde(default)]
    pub output: OutputConfig,
    /// Directory relative paths are resolved against.
    #[serde(skip)]
    pub base_dir: Option<PathBuf>,
}

fn default_seed() -> u64 {
    DEFAULT_SEED
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputConfig {
    pub path: PathBuf,
    #[serde(default = "default_delimiter")]
    pub delimiter: char,
}

fn default_delimiter() -> char {
    ','
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BinningConfig {
    /// Bundled scheme name or path to a scheme file.
    pub scheme: String,
}

impl Default for BinningConfig {
    fn default() -> Self {
        BinningConfig { scheme: DEFAULT_SCHEME_NAME.to_string() }
    }
}

/// Scaling options without the seed, which comes from the base seed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScalingConfig {
    pub dimensions: usize,
    pub tolerance: f64,
    pub score_tolerance: Option<f64>,
    pub max_iter: usize,
    pub restarts: usize,
    pub inner_iterations: usize,
}

impl Default for ScalingConfig {
    fn default() -> Self {
        let d = HomalsOptions::default();
        ScalingConfig {
            dimensions: d.dimensions,
            tolerance: d.tolerance,
            score_tolerance: d.score_tolerance,
            max_iter: d.max_iter,
            restarts: d.restarts,
            inner_iterations: d.inner_iterations,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig { dir: PathBuf::from("run") }
    }
}

impl PipelineConfig {
    /// Reads a TOML config and applies `key=value` overrides, where `key`
    /// is a dotted path such as `sweep.k_max` and `value` is a TOML value
    /// (bare words are taken as strings).
    pub fn load(path: &Path, overrides: &[String]) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        let mut cfg = Self::from_toml_str(&text, overrides)?;
        cfg.base_dir = Some(path.parent().map(Path::to_path_buf).unwrap_or_default());
        Ok(cfg)
    }

    pub fn from_toml_str(text: &str, overrides: &[String]) -> Result<Self> {
        let mut doc: toml::Table = toml::from_str(text).map_err(|e| Error::Config(format!("config: {e}")))?;
        for item in overrides {
            apply_override(&mut doc, item)?;
        }
        let cfg: PipelineConfig = doc.try_into().map_err(|e| Error::Config(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Checks that do not need the data.
    pub fn validate(&self) -> Result<()> {
        if !self.input.delimiter.is_ascii() {
            return Err(Error::Config("delimiter must be a single ASCII character".into()));
        }
        if self.ratios.is_empty() {
            return Err(Error::Config("at least one ratio must be declared".into()));
        }
        if self.ratios.iter().all(|r| r.supplementary) {
            return Err(Error::Config("every ratio is supplementary; nothing to cluster".into()));
        }
        let s = &self.sweep;
        if s.k_min < 2 || s.k_min > s.k_max {
            return Err(Error::Config(format!(
                "k range {}..={} must start at 2 or more and be non-empty",
                s.k_min, s.k_max
            )));
        }
        if s.methods.is_empty() {
            return Err(Error::Config("no clustering methods selected".into()));
        }
        if self.scaling.dimensions == 0 || self.scaling.restarts == 0 {
            return Err(Error::Config("scaling dimensions and restarts must be positive".into()));
        }
        Ok(())
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        match &self.base_dir {
            Some(dir) if p.is_relative() => dir.join(p),
            _ => p.to_path_buf(),
        }
    }

    pub fn input_path(&self) -> PathBuf {
        self.resolve(&self.input.path)
    }

    pub fn output_dir(&self) -> PathBuf {
        self.resolve(&self.output.dir)
    }

    pub fn scheme(&self) -> Result<BinningScheme> {
        BinningScheme::resolve(&self.binning.scheme, self.base_dir.as_deref())
    }

    pub fn scaling_seed(&self) -> u64 {
        derive_seed(self.seed, SCALING_STREAM)
    }

    pub fn sweep_seed(&self) -> u64 {
        derive_seed(self.seed, SWEEP_STREAM)
    }

    pub fn homals_options(&self) -> HomalsOptions {
        let s = &self.scaling;
        HomalsOptions {
            dimensions: s.dimensions,
            tolerance: s.tolerance,
            score_tolerance: s.score_tolerance,
            max_iter: s.max_iter,
            restarts: s.restarts,
            seed: self.scaling_seed(),
            inner_iterations: s.inner_iterations,
        }
    }

    /// SHA-256 of the canonical JSON form, ignoring where the config file
    /// lives and where the run is written.
    pub fn hash(&self) -> String {
        let mut canonical = self.clone();
        canonical.output = OutputConfig::default();
        let json = serde_json::to_vec(&canonical).expect("config serializes");
        hex::encode(Sha256::digest(&json))
    }
}

fn apply_override(doc: &mut toml::Table, item: &str) -> Result<()> {
    let (key, raw) = item
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("override `{item}` is not key=value")))?;
    let key = key.trim();
    let raw = raw.trim();
    let value = toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()));
    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(Error::Config(format!("override key `{key}` is malformed")));
    }
    let mut table = doc;
    for part in &parts[..parts.len() - 1] {
        let entry = table
            .entry(part.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        table = entry
            .as_table_mut()
            .ok_or_else(|| Error::Config(format!("override `{key}`: `{part}` is not a table")))?;
    }
    table.insert(parts[parts.len() - 1].to_string(), value);
    Ok(())
}
