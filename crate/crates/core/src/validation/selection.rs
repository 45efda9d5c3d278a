use std::cmp::Ordering;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::silhouette::silhouette;
use crate::clustering::{
    clara, dissimilarity, fanny, kmeans, pam, ClaraOptions, DissimilarityMatrix, FannyOptions, KmeansOptions,
    Method, PamOptions, PartitionResult,
};
use crate::error::{Error, Result};
use crate::seed::derive_seed;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepOptions {
    pub methods: Vec<Method>,
    pub k_min: usize,
    pub k_max: usize,
    pub kmeans: KmeansOptions,
    pub pam: PamOptions,
    pub clara: ClaraOptions,
    pub fanny: FannyOptions,
}

impl Default for SweepOptions {
    fn default() -> Self {
        SweepOptions {
            methods: Method::ALL.to_vec(),
            k_min: 2,
            k_max: 8,
            kmeans: KmeansOptions::default(),
            pam: PamOptions::default(),
            clara: ClaraOptions::default(),
            fanny: FannyOptions::default(),
        }
    }
}

impl SweepOptions {
    /// Checks the grid definition against the number of observations.
    pub fn validate(&self, n: usize) -> Result<()> {
        if self.methods.is_empty() {
            return Err(Error::Config("no clustering methods selected".into()));
        }
        if self.k_min < 2 || self.k_min > self.k_max || self.k_max + 1 > n {
            return Err(Error::Config(format!(
                "k range {}..={} must lie within 2..={}",
                self.k_min,
                self.k_max,
                n.saturating_sub(1)
            )));
        }
        Ok(())
    }

    /// Distinct methods in tie-break order.
    fn method_list(&self) -> Vec<Method> {
        let mut m = self.methods.clone();
        m.sort();
        m.dedup();
        m
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CellStatus {
    Converged,
    /// Iteration cap reached; excluded from selection.
    NotConverged,
    /// The hard partition left a cluster empty; excluded from selection.
    Degenerate,
}

impl CellStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            CellStatus::Converged => "converged",
            CellStatus::NotConverged => "not-converged",
            CellStatus::Degenerate => "degenerate",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        [CellStatus::Converged, CellStatus::NotConverged, CellStatus::Degenerate]
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| Error::Input(format!("unknown cell status `{s}`")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridEntry {
    pub method: Method,
    pub k: usize,
    /// Present only for converged cells.
    pub avg_silhouette: Option<f64>,
    pub status: CellStatus,
}

impl GridEntry {
    pub fn converged(&self) -> bool {
        self.status == CellStatus::Converged
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelSelectionGrid {
    pub entries: Vec<GridEntry>,
    pub chosen: (Method, usize),
}

pub struct SweepOutput {
    pub grid: ModelSelectionGrid,
    /// Fit for each grid entry, `None` where the cell was degenerate.
    pub fits: Vec<Option<PartitionResult>>,
}

impl SweepOutput {
    pub fn chosen_fit(&self) -> &PartitionResult {
        let at = self
            .grid
            .entries
            .iter()
            .position(|e| (e.method, e.k) == self.grid.chosen)
            .expect("chosen entry is in the grid");
        self.fits[at].as_ref().expect("chosen entry converged")
    }
}

/// Per-cell seed so that the grid does not depend on scheduling.
pub fn cell_seed(base: u64, method: Method, k: usize) -> u64 {
    derive_seed(base, ((method as u64) << 32) | k as u64)
}

/// Outcome of fitting one grid cell.
#[derive(Clone, Debug, PartialEq)]
pub struct CellFit {
    pub method: Method,
    pub k: usize,
    /// `None` when the hardened partition left a cluster empty.
    pub fit: Option<PartitionResult>,
}

/// Fits every (method, k) cell, scores converged fits by average
/// silhouette and picks the best cell.
pub fn sweep(x: &DMatrix<f64>, opts: &SweepOptions, seed: u64) -> Result<SweepOutput> {
    opts.validate(x.nrows())?;
    let d = dissimilarity(x)?;
    sweep_with(x, &d, opts, seed)
}

/// As [`sweep`], reusing a dissimilarity matrix computed from `x`.
pub fn sweep_with(x: &DMatrix<f64>, d: &DissimilarityMatrix, opts: &SweepOptions, seed: u64) -> Result<SweepOutput> {
    let cells = fit_grid(x, d, opts, seed)?;
    let entries = score_grid(d, &cells)?;
    let chosen = pick_best(&entries)?;
    Ok(SweepOutput {
        grid: ModelSelectionGrid { entries, chosen },
        fits: cells.into_iter().map(|c| c.fit).collect(),
    })
}

/// Fits every cell of the grid, methods in tie-break order and k ascending.
pub fn fit_grid(x: &DMatrix<f64>, d: &DissimilarityMatrix, opts: &SweepOptions, seed: u64) -> Result<Vec<CellFit>> {
    opts.validate(x.nrows())?;
    let cells: Vec<(Method, usize)> = opts
        .method_list()
        .into_iter()
        .flat_map(|m| (opts.k_min..=opts.k_max).map(move |k| (m, k)))
        .collect();
    cells
        .par_iter()
        .map(|&(method, k)| {
            let fit = match method {
                Method::Kmeans => kmeans(x, k, &opts.kmeans, cell_seed(seed, method, k)),
                Method::Pam => pam(d, k, &opts.pam),
                Method::Clara => clara(x, k, &opts.clara, cell_seed(seed, method, k)),
                Method::Fanny => fanny(d, k, &opts.fanny),
            };
            match fit {
                Ok(fit) => Ok(CellFit { method, k, fit: Some(fit) }),
                Err(Error::Degenerate(msg)) => {
                    log::debug!("{method} k={k}: {msg}");
                    Ok(CellFit { method, k, fit: None })
                }
                Err(e) => Err(e),
            }
        })
        .collect()
}

/// Grid entries for fitted cells: the average silhouette of converged
/// fits, a marker for the rest.
pub fn score_grid(d: &DissimilarityMatrix, cells: &[CellFit]) -> Result<Vec<GridEntry>> {
    cells
        .par_iter()
        .map(|c| {
            let (status, avg) = match &c.fit {
                None => (CellStatus::Degenerate, None),
                Some(f) if !f.converged => (CellStatus::NotConverged, None),
                Some(f) => (CellStatus::Converged, Some(silhouette(d, &f.labels)?.average)),
            };
            Ok(GridEntry { method: c.method, k: c.k, avg_silhouette: avg, status })
        })
        .collect()
}

/// Converged entry with the largest average silhouette; ties go to the
/// smaller k, then to the earlier method in kmeans, pam, clara, fanny.
pub fn pick_best(entries: &[GridEntry]) -> Result<(Method, usize)> {
    if entries.is_empty() {
        return Err(Error::contract("model selection grid is empty"));
    }
    entries
        .iter()
        .filter_map(|e| match (e.status, e.avg_silhouette) {
            (CellStatus::Converged, Some(s)) => Some((s, e.k, e.method)),
            _ => None,
        })
        .min_by(|a, b| match b.0.total_cmp(&a.0) {
            Ordering::Equal => (a.1, a.2).cmp(&(b.1, b.2)),
            o => o,
        })
        .map(|(_, k, m)| (m, k))
        .ok_or_else(|| Error::Selection("no grid entry converged".into()))
}
