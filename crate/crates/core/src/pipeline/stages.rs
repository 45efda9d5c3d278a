use std::fmt;
use std::fs::{self, File};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use super::config::PipelineConfig;
use super::tables::*;
use crate::clustering::dissimilarity;
use crate::error::{Error, Result};
use crate::ingest::{bin_continuous, clean, compute_ratios, load_table};
use crate::profiling::build_report;
use crate::scaling::{category_points, homals_fit};
use crate::validation::{pick_best, score_grid, silhouette, CellFit, ModelSelectionGrid};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Stage {
    Clean,
    Bin,
    Scale,
    Cluster,
    Select,
    Profile,
}

impl Stage {
    pub const ALL: [Stage; 6] = [Stage::Clean, Stage::Bin, Stage::Scale, Stage::Cluster, Stage::Select, Stage::Profile];

    pub fn name(self) -> &'static str {
        match self {
            Stage::Clean => "clean",
            Stage::Bin => "bin",
            Stage::Scale => "scale",
            Stage::Cluster => "cluster",
            Stage::Select => "select",
            Stage::Profile => "profile",
        }
    }

    /// Run-directory files this stage reads, with the stage producing each.
    pub fn inputs(self) -> &'static [(&'static str, Stage)] {
        match self {
            Stage::Clean => &[],
            Stage::Bin => &[(TABLE, Stage::Clean)],
            Stage::Scale => &[(CODED, Stage::Bin)],
            Stage::Cluster => &[(SCORES, Stage::Scale)],
            Stage::Select => &[(SCORES, Stage::Scale), (FITS, Stage::Cluster)],
            Stage::Profile => &[(TABLE, Stage::Clean), (GRID, Stage::Select), (FITS, Stage::Cluster)],
        }
    }

    /// Files and directories this stage (re)creates.
    pub fn outputs(self) -> &'static [&'static str] {
        match self {
            Stage::Clean => &[TABLE, CLEANING_LOG],
            Stage::Bin => &[CODED],
            Stage::Scale => &[SCORES, CATEGORIES, SCALING],
            Stage::Cluster => &[FITS, PARTITIONS_DIR],
            Stage::Select => &[GRID, SILHOUETTE],
            Stage::Profile => &[PROFILE, PROFILE_MEANS, PROFILE_FREQUENCY, PROFILE_LIFT],
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Stage {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Stage::ALL
            .into_iter()
            .find(|st| st.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown stage `{s}`")))
    }
}

pub(crate) fn require(dir: &Path, stage: &str, file: &str, producer: &str) -> Result<PathBuf> {
    let path = dir.join(file);
    if path.exists() {
        Ok(path)
    } else {
        Err(Error::MissingArtifact {
            stage: stage.to_string(),
            artifact: path,
            producer: producer.to_string(),
        })
    }
}

pub(crate) fn remove_outputs(dir: &Path, stage: Stage) -> Result<()> {
    for out in stage.outputs() {
        let path = dir.join(out);
        if path.is_dir() {
            fs::remove_dir_all(&path)?;
        } else if path.exists() {
            fs::remove_file(&path)?;
        }
    }
    Ok(())
}

/// Runs one stage on the artifacts already in `dir`.
pub(crate) fn execute(stage: Stage, cfg: &PipelineConfig, dir: &Path) -> Result<()> {
    for (file, producer) in stage.inputs() {
        require(dir, stage.name(), file, producer.name())?;
    }
    remove_outputs(dir, stage)?;
    match stage {
        Stage::Clean => run_clean(cfg, dir),
        Stage::Bin => run_bin(cfg, dir),
        Stage::Scale => run_scale(cfg, dir),
        Stage::Cluster => run_cluster(cfg, dir),
        Stage::Select => run_select(cfg, dir),
        Stage::Profile => run_profile(cfg, dir),
    }
}

fn run_clean(cfg: &PipelineConfig, dir: &Path) -> Result<()> {
    let input = cfg.input_path();
    let file = File::open(&input).map_err(|e| Error::Input(format!("cannot open {}: {e}", input.display())))?;
    let records = load_table(file, &cfg.schema, cfg.input.delimiter as u8)?;
    let (table, log) = clean(&records, &cfg.schema)?;
    log::info!("cleaning kept {} of {} records", log.retained, log.input);
    let table = compute_ratios(&table, &cfg.schema.income, &cfg.ratios)?;
    write_mixed_table(&dir.join(TABLE), &table)?;
    super::artifact::write_json(&dir.join(CLEANING_LOG), "cleaning-log", &log)
}

fn run_bin(cfg: &PipelineConfig, dir: &Path) -> Result<()> {
    let table = read_mixed_table(&dir.join(TABLE))?;
    let out = bin_continuous(&table, &cfg.scheme()?)?;
    write_coded(&dir.join(CODED), &out.coded, &out.warnings)
}

fn run_scale(cfg: &PipelineConfig, dir: &Path) -> Result<()> {
    let (coded, _) = read_coded(&dir.join(CODED))?;
    let sol = homals_fit(&coded, &cfg.homals_options())?;
    if !sol.converged {
        log::warn!("scaling stopped after {} iterations without converging", sol.iterations);
    }
    write_scores(&dir.join(SCORES), &sol.ids, &sol.x)?;
    write_category_points(&dir.join(CATEGORIES), &category_points(&sol, true)?, sol.converged)?;
    write_scaling(&dir.join(SCALING), &sol)
}

fn run_cluster(cfg: &PipelineConfig, dir: &Path) -> Result<()> {
    let (ids, x) = read_scores(&dir.join(SCORES))?;
    let d = dissimilarity(&x)?;
    let cells = crate::validation::fit_grid(&x, &d, &cfg.sweep, cfg.sweep_seed())?;
    write_fits(dir, &ids, &cells)
}

/// Cells of the fitted grid that the current sweep settings select.
fn selected_cells(cfg: &PipelineConfig, dir: &Path, cells: Vec<CellFit>) -> Result<Vec<CellFit>> {
    let s = &cfg.sweep;
    let mut wanted: Vec<(crate::clustering::Method, usize)> = Vec::new();
    let mut methods = s.methods.clone();
    methods.sort();
    methods.dedup();
    for m in methods {
        for k in s.k_min..=s.k_max {
            wanted.push((m, k));
        }
    }
    let mut out = Vec::with_capacity(wanted.len());
    let mut pool = cells;
    for (m, k) in wanted {
        match pool.iter().position(|c| c.method == m && c.k == k) {
            Some(at) => out.push(pool.swap_remove(at)),
            None => {
                return Err(Error::MissingArtifact {
                    stage: Stage::Select.name().into(),
                    artifact: dir.join(partition_file(m, k)),
                    producer: Stage::Cluster.name().into(),
                })
            }
        }
    }
    Ok(out)
}

fn run_select(cfg: &PipelineConfig, dir: &Path) -> Result<()> {
    let (ids, x) = read_scores(&dir.join(SCORES))?;
    let (fit_ids, cells) = read_fits(dir)?;
    if !fit_ids.is_empty() && fit_ids != ids {
        return Err(Error::artifact(dir.join(FITS), "partitions do not match the object scores"));
    }
    let cells = selected_cells(cfg, dir, cells)?;
    let d = dissimilarity(&x)?;
    let entries = score_grid(&d, &cells)?;
    let chosen = pick_best(&entries)?;
    log::info!("selected {} with k = {}", chosen.0, chosen.1);
    let fit = cells
        .iter()
        .find(|c| (c.method, c.k) == chosen)
        .and_then(|c| c.fit.as_ref())
        .expect("chosen cell was fitted");
    let s = silhouette(&d, &fit.labels)?;
    write_grid(&dir.join(GRID), &ModelSelectionGrid { entries, chosen })?;
    write_silhouette(&dir.join(SILHOUETTE), &ids, &fit.labels, &s, chosen)
}

fn run_profile(cfg: &PipelineConfig, dir: &Path) -> Result<()> {
    let table = read_mixed_table(&dir.join(TABLE))?;
    let grid = read_grid(&dir.join(GRID))?;
    let (method, k) = grid.chosen;
    let file = require(dir, Stage::Profile.name(), &partition_file(method, k), Stage::Cluster.name())?;
    let (ids, labels, _) = read_labels(&file, method, k)?;
    if ids != table.ids {
        return Err(Error::artifact(file, "partition records do not match the cleaned table"));
    }
    let report = build_report(&table, &labels, &cfg.profiling)?;
    for w in &report.warnings {
        log::warn!("{w}");
    }
    write_profile(dir, &report)
}
