//! Silhouette widths and model selection over a (method, k) grid.

mod selection;
mod silhouette;

pub use selection::{
    cell_seed, fit_grid, pick_best, score_grid, sweep, sweep_with, CellFit, CellStatus, GridEntry, ModelSelectionGrid, SweepOptions, SweepOutput,
};
pub use silhouette::{silhouette, SilhouetteReport};
