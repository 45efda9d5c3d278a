use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use super::artifact::{fmt_f64, Table};
use super::stages::require;
use super::tables::*;
use crate::error::{Error, Result};
use crate::ingest::{summarize_continuous, QUARTILE_CONVENTION};

pub const PLOTS_DIR: &str = "plots";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PlotKind {
    /// Five-number summaries of every ratio column.
    Boxplot,
    /// Object scores, category points and ordinal arrows.
    JointMap,
    /// Average silhouette per method and k.
    SilhouetteCurve,
}

impl PlotKind {
    pub const ALL: [PlotKind; 3] = [PlotKind::Boxplot, PlotKind::JointMap, PlotKind::SilhouetteCurve];

    pub fn as_str(self) -> &'static str {
        match self {
            PlotKind::Boxplot => "boxplot",
            PlotKind::JointMap => "joint-map",
            PlotKind::SilhouetteCurve => "silhouette-curve",
        }
    }
}

impl fmt::Display for PlotKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PlotKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        PlotKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown figure kind `{s}`")))
    }
}

/// Writes tidy plot tables under `<dir>/plots` and returns their paths.
pub fn export_plot_data(dir: &Path, kind: PlotKind) -> Result<Vec<PathBuf>> {
    let stage = format!("export-plot {kind}");
    let out = dir.join(PLOTS_DIR);
    match kind {
        PlotKind::Boxplot => {
            let table = read_mixed_table(&require(dir, &stage, TABLE, "clean")?)?;
            let header = [
                "variable", "n", "min", "q1", "median", "q3", "max", "lower_fence", "upper_fence", "below_fence",
                "above_fence",
            ]
            .map(String::from)
            .to_vec();
            let mut t = Table::new("plot-boxplot", header).with_meta("quartiles", QUARTILE_CONVENTION);
            for s in summarize_continuous(&table)? {
                t.rows.push(vec![
                    s.variable.clone(),
                    s.n.to_string(),
                    fmt_f64(s.min),
                    fmt_f64(s.q1),
                    fmt_f64(s.median),
                    fmt_f64(s.q3),
                    fmt_f64(s.max),
                    fmt_f64(s.lower_fence),
                    fmt_f64(s.upper_fence),
                    s.below_fence.to_string(),
                    s.above_fence.to_string(),
                ]);
            }
            let path = out.join("boxplot.csv");
            t.write(&path)?;
            Ok(vec![path])
        }
        PlotKind::JointMap => {
            let (ids, x) = read_scores(&require(dir, &stage, SCORES, "scale")?)?;
            let points = read_category_points(&require(dir, &stage, CATEGORIES, "scale")?)?;
            let p = x.ncols();
            let dims: Vec<String> = (1..=p).map(|d| format!("dim{d}")).collect();

            // colour objects by the selected partition when there is one
            let labels = match read_grid(&dir.join(GRID)) {
                Ok(grid) => {
                    let (m, k) = grid.chosen;
                    let (_, labels, _) = read_labels(&dir.join(partition_file(m, k)), m, k)?;
                    Some(labels)
                }
                Err(_) => None,
            };
            let mut header = vec!["id".to_string(), "cluster".to_string()];
            header.extend(dims.iter().cloned());
            let mut objects = Table::new("plot-joint-map-objects", header);
            for (i, id) in ids.iter().enumerate() {
                let mut row = vec![id.clone(), labels.as_ref().map(|l| l[i].to_string()).unwrap_or_default()];
                row.extend(x.row(i).iter().map(|v| fmt_f64(*v)));
                objects.rows.push(row);
            }

            let mut header: Vec<String> = ["variable", "level", "label", "ordinal"].map(String::from).to_vec();
            header.extend(dims.iter().cloned());
            let mut cats = Table::new("plot-joint-map-categories", header);
            for pt in &points {
                let mut row = vec![pt.variable.clone(), pt.level.to_string(), pt.label.clone(), pt.ordinal.to_string()];
                row.extend(pt.coords.iter().map(|v| fmt_f64(*v)));
                cats.rows.push(row);
            }

            // arrows run from the first to the last level of each ordinal variable
            let mut header = vec!["variable".to_string()];
            header.extend(dims.iter().map(|d| format!("from_{d}")));
            header.extend(dims.iter().map(|d| format!("to_{d}")));
            let mut arrows = Table::new("plot-joint-map-arrows", header);
            let mut seen: Vec<&str> = Vec::new();
            for pt in points.iter().filter(|p| p.ordinal) {
                if seen.contains(&pt.variable.as_str()) {
                    continue;
                }
                seen.push(&pt.variable);
                let levels: Vec<_> = points.iter().filter(|q| q.variable == pt.variable).collect();
                let first = levels.iter().min_by_key(|q| q.level).expect("non-empty");
                let last = levels.iter().max_by_key(|q| q.level).expect("non-empty");
                let mut row = vec![pt.variable.clone()];
                row.extend(first.coords.iter().map(|v| fmt_f64(*v)));
                row.extend(last.coords.iter().map(|v| fmt_f64(*v)));
                arrows.rows.push(row);
            }
            let paths = vec![
                out.join("joint-map-objects.csv"),
                out.join("joint-map-categories.csv"),
                out.join("joint-map-arrows.csv"),
            ];
            objects.write(&paths[0])?;
            cats.write(&paths[1])?;
            arrows.write(&paths[2])?;
            Ok(paths)
        }
        PlotKind::SilhouetteCurve => {
            let grid = read_grid(&require(dir, &stage, GRID, "select")?)?;
            let header = ["method", "k", "avg_silhouette", "status"].map(String::from).to_vec();
            let mut t = Table::new("plot-silhouette-curve", header)
                .with_meta("chosen", format!("{}:{}", grid.chosen.0, grid.chosen.1));
            for e in &grid.entries {
                t.rows.push(vec![
                    e.method.to_string(),
                    e.k.to_string(),
                    e.avg_silhouette.map(fmt_f64).unwrap_or_default(),
                    e.status.as_str().to_string(),
                ]);
            }
            let path = out.join("silhouette-curve.csv");
            t.write(&path)?;
            Ok(vec![path])
        }
    }
}
