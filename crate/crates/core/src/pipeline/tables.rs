//! On-disk forms of the stage outputs.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::artifact::{fmt_f64, parse_f64, parse_usize, read_json, write_json, Table};
use crate::clustering::{Method, PartitionResult};
use crate::error::{Error, Result};
use crate::ingest::{CategoricalColumn, CodedMatrix, CodedVariable, ColumnRole, MixedTable, NumericColumn, VariableKind};
use crate::profiling::ProfileReport;
use crate::scaling::{CategoryPoint, Quantification, ScalingSolution, VariableQuantification};
use crate::validation::{CellFit, CellStatus, GridEntry, ModelSelectionGrid, SilhouetteReport};

pub const TABLE: &str = "table.csv";
pub const CLEANING_LOG: &str = "cleaning_log.json";
pub const CODED: &str = "coded.csv";
pub const SCORES: &str = "scores.csv";
pub const CATEGORIES: &str = "categories.csv";
pub const SCALING: &str = "scaling.json";
pub const FITS: &str = "fits.json";
pub const PARTITIONS_DIR: &str = "partitions";
pub const GRID: &str = "grid.csv";
pub const SILHOUETTE: &str = "silhouette.csv";
pub const PROFILE: &str = "profile.json";
pub const PROFILE_MEANS: &str = "profile_means.csv";
pub const PROFILE_FREQUENCY: &str = "profile_frequency.csv";
pub const PROFILE_LIFT: &str = "profile_lift.csv";
pub const MANIFEST: &str = "manifest.json";

fn json_meta<T: Serialize>(v: &T) -> String {
    serde_json::to_string(v).expect("metadata serializes")
}

fn parse_meta<T: for<'de> Deserialize<'de>>(path: &Path, t: &Table, key: &str) -> Result<T> {
    serde_json::from_str(t.meta(path, key)?).map_err(|e| Error::artifact(path, format!("metadata `{key}`: {e}")))
}

fn check_width(path: &Path, t: &Table) -> Result<()> {
    match t.rows.iter().position(|r| r.len() != t.header.len()) {
        Some(i) => Err(Error::artifact(path, format!("row {} has the wrong number of fields", i + 1))),
        None => Ok(()),
    }
}

#[derive(Serialize, Deserialize)]
struct ColumnMeta {
    name: String,
    role: ColumnRole,
}

#[derive(Serialize, Deserialize)]
struct LevelMeta {
    name: String,
    levels: Vec<String>,
}

pub fn write_mixed_table(path: &Path, table: &MixedTable) -> Result<()> {
    let mut header = vec!["id".to_string()];
    header.extend(table.numeric.iter().map(|c| c.name.clone()));
    header.extend(table.categorical.iter().map(|c| c.name.clone()));
    let columns: Vec<ColumnMeta> = table
        .numeric
        .iter()
        .map(|c| ColumnMeta { name: c.name.clone(), role: c.role })
        .collect();
    let levels: Vec<LevelMeta> = table
        .categorical
        .iter()
        .map(|c| LevelMeta { name: c.name.clone(), levels: c.levels.clone() })
        .collect();
    let mut t = Table::new("mixed-table", header)
        .with_meta("numeric", json_meta(&columns))
        .with_meta("categorical", json_meta(&levels));
    for i in 0..table.len() {
        let mut row = vec![table.ids[i].clone()];
        row.extend(table.numeric.iter().map(|c| fmt_f64(c.values[i])));
        row.extend(table.categorical.iter().map(|c| c.values[i].clone()));
        t.rows.push(row);
    }
    t.write(path)
}

pub fn read_mixed_table(path: &Path) -> Result<MixedTable> {
    let t = Table::read(path, "mixed-table")?;
    check_width(path, &t)?;
    let columns: Vec<ColumnMeta> = parse_meta(path, &t, "numeric")?;
    let levels: Vec<LevelMeta> = parse_meta(path, &t, "categorical")?;
    let id = t.column(path, "id")?;
    let mut numeric = Vec::new();
    for c in columns {
        let at = t.column(path, &c.name)?;
        let values = t.rows.iter().map(|r| parse_f64(path, &r[at])).collect::<Result<_>>()?;
        numeric.push(NumericColumn { name: c.name, role: c.role, values });
    }
    let mut categorical = Vec::new();
    for c in levels {
        let at = t.column(path, &c.name)?;
        categorical.push(CategoricalColumn {
            name: c.name,
            levels: c.levels,
            values: t.rows.iter().map(|r| r[at].clone()).collect(),
        });
    }
    let table = MixedTable { ids: t.rows.iter().map(|r| r[id].clone()).collect(), numeric, categorical };
    table.validate()?;
    Ok(table)
}

#[derive(Serialize, Deserialize)]
struct VariableMeta {
    name: String,
    kind: VariableKind,
    labels: Vec<String>,
}

pub fn write_coded(path: &Path, coded: &CodedMatrix, warnings: &[String]) -> Result<()> {
    let mut header = vec!["id".to_string()];
    header.extend(coded.variables.iter().map(|v| v.name.clone()));
    let vars: Vec<VariableMeta> = coded
        .variables
        .iter()
        .map(|v| VariableMeta { name: v.name.clone(), kind: v.kind, labels: v.labels.clone() })
        .collect();
    let mut t = Table::new("coded-matrix", header)
        .with_meta("variables", json_meta(&vars))
        .with_meta("warnings", json_meta(&warnings));
    for i in 0..coded.n_records() {
        let mut row = vec![coded.ids[i].clone()];
        row.extend(coded.variables.iter().map(|v| v.codes[i].to_string()));
        t.rows.push(row);
    }
    t.write(path)
}

pub fn read_coded(path: &Path) -> Result<(CodedMatrix, Vec<String>)> {
    let t = Table::read(path, "coded-matrix")?;
    check_width(path, &t)?;
    let vars: Vec<VariableMeta> = parse_meta(path, &t, "variables")?;
    let warnings: Vec<String> = parse_meta(path, &t, "warnings")?;
    let id = t.column(path, "id")?;
    let mut variables = Vec::new();
    for v in vars {
        let at = t.column(path, &v.name)?;
        let codes = t
            .rows
            .iter()
            .map(|r| r[at].parse::<u32>().map_err(|_| Error::artifact(path, format!("bad code `{}`", r[at]))))
            .collect::<Result<_>>()?;
        variables.push(CodedVariable { name: v.name, kind: v.kind, codes, labels: v.labels });
    }
    let coded = CodedMatrix { ids: t.rows.iter().map(|r| r[id].clone()).collect(), variables };
    coded.validate()?;
    Ok((coded, warnings))
}

fn dim_names(p: usize) -> Vec<String> {
    (1..=p).map(|d| format!("dim{d}")).collect()
}

/// Object scores, one row per record.
pub fn write_scores(path: &Path, ids: &[String], x: &DMatrix<f64>) -> Result<()> {
    let mut header = vec!["id".to_string()];
    header.extend(dim_names(x.ncols()));
    let mut t = Table::new("object-scores", header).with_meta("dimensions", x.ncols().to_string());
    for (i, id) in ids.iter().enumerate() {
        let mut row = vec![id.clone()];
        row.extend(x.row(i).iter().map(|v| fmt_f64(*v)));
        t.rows.push(row);
    }
    t.write(path)
}

pub fn read_scores(path: &Path) -> Result<(Vec<String>, DMatrix<f64>)> {
    let t = Table::read(path, "object-scores")?;
    check_width(path, &t)?;
    let p = parse_usize(path, t.meta(path, "dimensions")?)?;
    let cols = dim_names(p).iter().map(|d| t.column(path, d)).collect::<Result<Vec<_>>>()?;
    let id = t.column(path, "id")?;
    let mut values = Vec::with_capacity(t.rows.len() * p);
    for r in &t.rows {
        for &c in &cols {
            values.push(parse_f64(path, &r[c])?);
        }
    }
    let ids = t.rows.iter().map(|r| r[id].clone()).collect();
    Ok((ids, DMatrix::from_row_slice(t.rows.len(), p, &values)))
}

pub fn write_category_points(path: &Path, points: &[CategoryPoint], converged: bool) -> Result<()> {
    let p = points.first().map_or(0, |pt| pt.coords.len());
    let mut header: Vec<String> = ["variable", "level", "label", "ordinal"].map(String::from).to_vec();
    header.extend(dim_names(p));
    let mut t = Table::new("category-points", header)
        .with_meta("dimensions", p.to_string())
        .with_meta("converged", converged.to_string());
    for pt in points {
        let mut row = vec![pt.variable.clone(), pt.level.to_string(), pt.label.clone(), pt.ordinal.to_string()];
        row.extend(pt.coords.iter().map(|v| fmt_f64(*v)));
        t.rows.push(row);
    }
    t.write(path)
}

pub fn read_category_points(path: &Path) -> Result<Vec<CategoryPoint>> {
    let t = Table::read(path, "category-points")?;
    check_width(path, &t)?;
    let p = parse_usize(path, t.meta(path, "dimensions")?)?;
    let cols = dim_names(p).iter().map(|d| t.column(path, d)).collect::<Result<Vec<_>>>()?;
    let [var, level, label, ordinal] = ["variable", "level", "label", "ordinal"].map(|c| t.column(path, c));
    let (var, level, label, ordinal) = (var?, level?, label?, ordinal?);
    t.rows
        .iter()
        .map(|r| {
            Ok(CategoryPoint {
                variable: r[var].clone(),
                level: parse_usize(path, &r[level])?,
                label: r[label].clone(),
                ordinal: parse_bool(path, &r[ordinal])?,
                coords: cols.iter().map(|&c| parse_f64(path, &r[c])).collect::<Result<_>>()?,
            })
        })
        .collect()
}

fn parse_bool(path: &Path, s: &str) -> Result<bool> {
    s.parse().map_err(|_| Error::artifact(path, format!("`{s}` is not true/false")))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct ScalingDoc {
    loss_history: Vec<f64>,
    converged: bool,
    iterations: usize,
    restart: usize,
    seed: u64,
    variables: Vec<QuantificationDoc>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct QuantificationDoc {
    name: String,
    kind: VariableKind,
    labels: Vec<String>,
    counts: Vec<f64>,
    /// Rows of `Y_j` for nominal variables.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    y: Option<Vec<Vec<f64>>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    o: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    beta: Option<Vec<f64>>,
}

/// Writes everything but the object scores, which go to [`write_scores`].
pub fn write_scaling(path: &Path, sol: &ScalingSolution) -> Result<()> {
    let variables = sol
        .variables
        .iter()
        .map(|v| {
            let (y, o, beta) = match &v.quantification {
                Quantification::Nominal { y } => (
                    Some(y.row_iter().map(|r| r.iter().copied().collect()).collect()),
                    None,
                    None,
                ),
                Quantification::Ordinal { o, beta } => {
                    (None, Some(o.iter().copied().collect()), Some(beta.iter().copied().collect()))
                }
            };
            QuantificationDoc {
                name: v.name.clone(),
                kind: v.quantification.kind(),
                labels: v.labels.clone(),
                counts: v.counts.clone(),
                y,
                o,
                beta,
            }
        })
        .collect();
    let doc = ScalingDoc {
        loss_history: sol.loss_history.clone(),
        converged: sol.converged,
        iterations: sol.iterations,
        restart: sol.restart,
        seed: sol.seed,
        variables,
    };
    write_json(path, "scaling-solution", &doc)
}

pub fn read_solution(scaling: &Path, scores: &Path) -> Result<ScalingSolution> {
    let doc: ScalingDoc = read_json(scaling, "scaling-solution")?;
    let (ids, x) = read_scores(scores)?;
    let p = x.ncols();
    let variables = doc
        .variables
        .into_iter()
        .map(|v| {
            let k = v.labels.len();
            let quantification = match (v.kind, v.y, v.o, v.beta) {
                (VariableKind::Nominal, Some(y), None, None) if y.len() == k && y.iter().all(|r| r.len() == p) => {
                    Quantification::Nominal { y: DMatrix::from_fn(k, p, |r, c| y[r][c]) }
                }
                (VariableKind::Ordinal, None, Some(o), Some(beta)) if o.len() == k && beta.len() == p => {
                    Quantification::Ordinal { o: DVector::from_vec(o), beta: DVector::from_vec(beta) }
                }
                _ => {
                    return Err(Error::artifact(scaling, format!("variable `{}` has malformed quantifications", v.name)))
                }
            };
            Ok(VariableQuantification { name: v.name, labels: v.labels, counts: v.counts, quantification })
        })
        .collect::<Result<_>>()?;
    Ok(ScalingSolution {
        ids,
        x,
        variables,
        loss_history: doc.loss_history,
        converged: doc.converged,
        iterations: doc.iterations,
        restart: doc.restart,
        seed: doc.seed,
    })
}

pub fn partition_file(method: Method, k: usize) -> String {
    format!("{PARTITIONS_DIR}/{method}-k{k}.csv")
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct FitDoc {
    method: Method,
    k: usize,
    degenerate: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    fit: Option<FitMeta>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct FitMeta {
    objective: f64,
    objective_history: Vec<f64>,
    converged: bool,
    iterations: usize,
    seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    medoids: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    centers: Option<Vec<Vec<f64>>>,
    labels: String,
}

/// Writes the fit summaries plus one labels table per fitted cell.
pub fn write_fits(dir: &Path, ids: &[String], cells: &[CellFit]) -> Result<()> {
    let mut docs = Vec::with_capacity(cells.len());
    for c in cells {
        let fit = match &c.fit {
            None => None,
            Some(f) => {
                let file = partition_file(c.method, c.k);
                write_labels(&dir.join(&file), ids, f)?;
                Some(FitMeta {
                    objective: f.objective,
                    objective_history: f.objective_history.clone(),
                    converged: f.converged,
                    iterations: f.iterations,
                    seed: f.seed,
                    medoids: f.medoids.clone(),
                    centers: f.centers.as_ref().map(|m| m.row_iter().map(|r| r.iter().copied().collect()).collect()),
                    labels: file,
                })
            }
        };
        docs.push(FitDoc { method: c.method, k: c.k, degenerate: c.fit.is_none(), fit });
    }
    write_json(&dir.join(FITS), "partition-fits", &docs)
}

fn write_labels(path: &Path, ids: &[String], f: &PartitionResult) -> Result<()> {
    let mut header = vec!["id".to_string(), "cluster".to_string()];
    if f.memberships.is_some() {
        header.extend((1..=f.k).map(|c| format!("u{c}")));
    }
    let mut t = Table::new("partition", header)
        .with_meta("method", f.method.as_str())
        .with_meta("k", f.k.to_string());
    for (i, id) in ids.iter().enumerate() {
        let mut row = vec![id.clone(), f.labels[i].to_string()];
        if let Some(u) = &f.memberships {
            row.extend(u.row(i).iter().map(|v| fmt_f64(*v)));
        }
        t.rows.push(row);
    }
    t.write(path)
}

/// Reads the fitted cells. Returns the record ids of the labels tables
/// (empty when every cell is degenerate).
pub fn read_fits(dir: &Path) -> Result<(Vec<String>, Vec<CellFit>)> {
    let path = dir.join(FITS);
    let docs: Vec<FitDoc> = read_json(&path, "partition-fits")?;
    let mut ids: Option<Vec<String>> = None;
    let mut cells = Vec::with_capacity(docs.len());
    for d in docs {
        let fit = match (d.degenerate, d.fit) {
            (true, None) => None,
            (false, Some(meta)) => {
                let (row_ids, labels, memberships) = read_labels(&dir.join(&meta.labels), d.method, d.k)?;
                match &ids {
                    Some(prev) if *prev != row_ids => {
                        return Err(Error::artifact(dir.join(&meta.labels), "record ids differ from other partitions"))
                    }
                    _ => ids = Some(row_ids),
                }
                let centers = meta.centers.map(|rows| {
                    let p = rows.first().map_or(0, Vec::len);
                    DMatrix::from_fn(rows.len(), p, |r, c| rows[r][c])
                });
                Some(PartitionResult {
                    method: d.method,
                    k: d.k,
                    labels,
                    memberships,
                    centers,
                    medoids: meta.medoids,
                    objective: meta.objective,
                    objective_history: meta.objective_history,
                    converged: meta.converged,
                    iterations: meta.iterations,
                    seed: meta.seed,
                })
            }
            _ => return Err(Error::artifact(&path, format!("{} k={} is inconsistent", d.method, d.k))),
        };
        cells.push(CellFit { method: d.method, k: d.k, fit });
    }
    Ok((ids.unwrap_or_default(), cells))
}

type Labels = (Vec<String>, Vec<u32>, Option<DMatrix<f64>>);

pub fn read_labels(path: &Path, method: Method, k: usize) -> Result<Labels> {
    let t = Table::read(path, "partition")?;
    check_width(path, &t)?;
    if t.meta(path, "method")? != method.as_str() || t.meta(path, "k")? != k.to_string() {
        return Err(Error::artifact(path, format!("does not hold the {method} k={k} partition")));
    }
    let (id, cluster) = (t.column(path, "id")?, t.column(path, "cluster")?);
    let labels = t
        .rows
        .iter()
        .map(|r| match r[cluster].parse::<u32>() {
            Ok(l) if l >= 1 && l as usize <= k => Ok(l),
            _ => Err(Error::artifact(path, format!("bad cluster label `{}`", r[cluster]))),
        })
        .collect::<Result<_>>()?;
    let memberships = if t.header.len() > 2 {
        let cols = (1..=k).map(|c| t.column(path, &format!("u{c}"))).collect::<Result<Vec<_>>>()?;
        let mut u = DMatrix::zeros(t.rows.len(), k);
        for (i, r) in t.rows.iter().enumerate() {
            for (c, &at) in cols.iter().enumerate() {
                u[(i, c)] = parse_f64(path, &r[at])?;
            }
        }
        Some(u)
    } else {
        None
    };
    Ok((t.rows.iter().map(|r| r[id].clone()).collect(), labels, memberships))
}

pub fn write_grid(path: &Path, grid: &ModelSelectionGrid) -> Result<()> {
    let header = ["method", "k", "avg_silhouette", "converged", "status"].map(String::from).to_vec();
    let mut t = Table::new("model-selection-grid", header)
        .with_meta("chosen_method", grid.chosen.0.as_str())
        .with_meta("chosen_k", grid.chosen.1.to_string());
    for e in &grid.entries {
        t.rows.push(vec![
            e.method.to_string(),
            e.k.to_string(),
            e.avg_silhouette.map(fmt_f64).unwrap_or_default(),
            e.converged().to_string(),
            e.status.as_str().to_string(),
        ]);
    }
    t.write(path)
}

pub fn read_grid(path: &Path) -> Result<ModelSelectionGrid> {
    let t = Table::read(path, "model-selection-grid")?;
    check_width(path, &t)?;
    let [m, k, s, st] = ["method", "k", "avg_silhouette", "status"].map(|c| t.column(path, c));
    let (m, k, s, st) = (m?, k?, s?, st?);
    let entries = t
        .rows
        .iter()
        .map(|r| {
            Ok(GridEntry {
                method: r[m].parse()?,
                k: parse_usize(path, &r[k])?,
                avg_silhouette: if r[s].is_empty() { None } else { Some(parse_f64(path, &r[s])?) },
                status: CellStatus::parse(&r[st])?,
            })
        })
        .collect::<Result<_>>()?;
    let chosen = (t.meta(path, "chosen_method")?.parse()?, parse_usize(path, t.meta(path, "chosen_k")?)?);
    Ok(ModelSelectionGrid { entries, chosen })
}

pub fn write_silhouette(path: &Path, ids: &[String], labels: &[u32], s: &SilhouetteReport, chosen: (Method, usize)) -> Result<()> {
    let mut t = Table::new("silhouette", ["id", "cluster", "s"].map(String::from).to_vec())
        .with_meta("method", chosen.0.as_str())
        .with_meta("k", chosen.1.to_string())
        .with_meta("average", fmt_f64(s.average))
        .with_meta("cluster_means", json_meta(&s.cluster_means));
    for (i, id) in ids.iter().enumerate() {
        t.rows.push(vec![id.clone(), labels[i].to_string(), fmt_f64(s.values[i])]);
    }
    t.write(path)
}

pub fn write_profile(dir: &Path, report: &ProfileReport) -> Result<()> {
    write_json(&dir.join(PROFILE), "profile-report", report)?;
    let clusters: Vec<String> = (1..=report.k).map(|c| format!("cluster_{c}")).collect();

    let mut header = vec!["variable".to_string(), "role".to_string()];
    header.extend(clusters.iter().cloned());
    header.push("overall".into());
    let mut means = Table::new("profile-means", header);
    for row in &report.means {
        let mut r = vec![
            row.variable.clone(),
            if row.supplementary { "supplementary" } else { "clustering" }.to_string(),
        ];
        r.extend(row.by_cluster.iter().map(|v| format!("{v:.4}")));
        r.push(format!("{:.4}", row.overall));
        means.rows.push(r);
    }
    means.write(&dir.join(PROFILE_MEANS))?;

    let mut header = vec!["variable".to_string(), "level".to_string(), "n".to_string()];
    header.extend(clusters.iter().cloned());
    let mut freq = Table::new("profile-frequency", header.clone()).with_meta("unit", "percent");
    let mut lift = Table::new("profile-lift", header);
    for (f, l) in report.frequencies.iter().zip(&report.lifts) {
        for (level, lifts) in f.levels.iter().zip(&l.lift) {
            let lead = vec![f.variable.clone(), level.level.clone(), level.count.to_string()];
            let mut fr = lead.clone();
            fr.extend(level.frequencies.iter().map(|v| format!("{:.1}", 100.0 * v)));
            freq.rows.push(fr);
            let mut lr = lead;
            lr.extend(lifts.iter().map(|v| format!("{v:.3}")));
            lift.rows.push(lr);
        }
    }
    let mut total = vec!["Total".to_string(), String::new(), report.n.to_string()];
    total.extend(report.shares.iter().map(|v| format!("{:.1}", 100.0 * v)));
    freq.rows.push(total);
    freq.write(&dir.join(PROFILE_FREQUENCY))?;
    lift.write(&dir.join(PROFILE_LIFT))
}

pub fn read_profile(dir: &Path) -> Result<ProfileReport> {
    read_json(&dir.join(PROFILE), "profile-report")
}
