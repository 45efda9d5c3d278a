//! Cluster profiles: shares, mean ratios, level frequencies and lift.
//!
//! Frequencies are `P(cluster | level)`, so each level's row sums to one,
//! and lift divides a frequency by the cluster's share of all records.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{ColumnRole, MixedTable};

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProfileOptions {
    /// Ratio columns to average. `None` means every ratio column, clustering
    /// inputs first, then supplementary ones.
    pub variables: Option<Vec<String>>,
    /// Categorical columns to tabulate. `None` means all of them.
    pub categorical: Option<Vec<String>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeanRow {
    pub variable: String,
    pub supplementary: bool,
    /// Mean per cluster, cluster 1 first.
    pub by_cluster: Vec<f64>,
    pub overall: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelRow {
    pub level: String,
    /// Records at this level.
    pub count: usize,
    pub cluster_counts: Vec<usize>,
    /// `P(cluster | level)`.
    pub frequencies: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrequencyTable {
    pub variable: String,
    pub levels: Vec<LevelRow>,
    pub cluster_sizes: Vec<usize>,
    pub shares: Vec<f64>,
    /// Declared levels that no record takes.
    pub warnings: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LiftTable {
    pub variable: String,
    pub levels: Vec<String>,
    /// One row per level, one column per cluster.
    pub lift: Vec<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProfileReport {
    pub n: usize,
    pub k: usize,
    pub cluster_sizes: Vec<usize>,
    pub shares: Vec<f64>,
    pub means: Vec<MeanRow>,
    pub frequencies: Vec<FrequencyTable>,
    pub lifts: Vec<LiftTable>,
    pub warnings: Vec<String>,
}

/// Cluster sizes for 1-based labels; every cluster up to the largest label
/// must be non-empty.
fn cluster_sizes(n: usize, labels: &[u32]) -> Result<Vec<usize>> {
    if labels.len() != n {
        return Err(Error::contract(format!("{} labels for {n} records", labels.len())));
    }
    if labels.contains(&0) {
        return Err(Error::contract("cluster labels start at 1"));
    }
    let k = labels.iter().copied().max().unwrap_or(0) as usize;
    let mut sizes = vec![0; k];
    for &l in labels {
        sizes[l as usize - 1] += 1;
    }
    if let Some(c) = sizes.iter().position(|&s| s == 0) {
        return Err(Error::contract(format!("cluster {} is empty", c + 1)));
    }
    Ok(sizes)
}

fn shares_of(sizes: &[usize]) -> Vec<f64> {
    let n: usize = sizes.iter().sum();
    sizes.iter().map(|&s| s as f64 / n as f64).collect()
}

/// Mean of each variable within each cluster and overall.
pub fn cluster_means(table: &MixedTable, labels: &[u32], variables: &[String]) -> Result<Vec<MeanRow>> {
    let sizes = cluster_sizes(table.len(), labels)?;
    variables
        .iter()
        .map(|name| {
            let col = table
                .numeric_column(name)
                .ok_or_else(|| Error::Config(format!("unknown profiling variable `{name}`")))?;
            let mut sums = vec![0.0; sizes.len()];
            for (v, &l) in col.values.iter().zip(labels) {
                sums[l as usize - 1] += v;
            }
            let overall = col.values.iter().sum::<f64>() / col.values.len() as f64;
            Ok(MeanRow {
                variable: name.clone(),
                supplementary: col.role == ColumnRole::SupplementaryRatio,
                by_cluster: sums.iter().zip(&sizes).map(|(s, &m)| s / m as f64).collect(),
                overall,
            })
        })
        .collect()
}

/// Relative frequency of each cluster among the records at each level.
pub fn level_frequencies(table: &MixedTable, labels: &[u32], variable: &str) -> Result<FrequencyTable> {
    let sizes = cluster_sizes(table.len(), labels)?;
    let col = table
        .categorical_column(variable)
        .ok_or_else(|| Error::Config(format!("unknown categorical variable `{variable}`")))?;
    let mut order: Vec<String> = col.levels.clone();
    let mut extra: Vec<&String> = col.values.iter().filter(|v| !order.contains(v)).collect();
    extra.sort();
    extra.dedup();
    order.extend(extra.into_iter().cloned());

    let mut warnings = Vec::new();
    let mut levels = Vec::new();
    for level in order {
        let mut counts = vec![0usize; sizes.len()];
        for (v, &l) in col.values.iter().zip(labels) {
            if *v == level {
                counts[l as usize - 1] += 1;
            }
        }
        let count: usize = counts.iter().sum();
        if count == 0 {
            warnings.push(format!("variable `{variable}`: level `{level}` does not occur and is omitted"));
            continue;
        }
        levels.push(LevelRow {
            level,
            count,
            frequencies: counts.iter().map(|&c| c as f64 / count as f64).collect(),
            cluster_counts: counts,
        });
    }
    Ok(FrequencyTable {
        variable: variable.to_string(),
        levels,
        shares: shares_of(&sizes),
        cluster_sizes: sizes,
        warnings,
    })
}

/// `frequency / share` per cluster.
pub fn lift(frequencies: &[f64], shares: &[f64]) -> Result<Vec<f64>> {
    if frequencies.len() != shares.len() {
        return Err(Error::contract(format!(
            "{} frequencies for {} clusters",
            frequencies.len(),
            shares.len()
        )));
    }
    if let Some(s) = shares.iter().find(|s| !(**s > 0.0 && s.is_finite())) {
        return Err(Error::contract(format!("cluster shares must be positive, found {s}")));
    }
    Ok(frequencies.iter().zip(shares).map(|(f, s)| f / s).collect())
}

/// Lift table for a frequency table.
pub fn lift_table(freq: &FrequencyTable) -> Result<LiftTable> {
    Ok(LiftTable {
        variable: freq.variable.clone(),
        levels: freq.levels.iter().map(|l| l.level.clone()).collect(),
        lift: freq
            .levels
            .iter()
            .map(|l| lift(&l.frequencies, &freq.shares))
            .collect::<Result<_>>()?,
    })
}

/// Assembles shares, means, frequencies and lifts.
pub fn build_report(table: &MixedTable, labels: &[u32], opts: &ProfileOptions) -> Result<ProfileReport> {
    let sizes = cluster_sizes(table.len(), labels)?;
    let variables = match &opts.variables {
        Some(v) => v.clone(),
        None => table
            .columns_with_role(ColumnRole::ContinuousRatio)
            .chain(table.columns_with_role(ColumnRole::SupplementaryRatio))
            .map(|c| c.name.clone())
            .collect(),
    };
    let categorical = match &opts.categorical {
        Some(v) => v.clone(),
        None => table.categorical.iter().map(|c| c.name.clone()).collect(),
    };
    let means = cluster_means(table, labels, &variables)?;
    let frequencies = categorical
        .iter()
        .map(|v| level_frequencies(table, labels, v))
        .collect::<Result<Vec<_>>>()?;
    let lifts = frequencies.iter().map(lift_table).collect::<Result<Vec<_>>>()?;
    let warnings = frequencies.iter().flat_map(|f| f.warnings.iter().cloned()).collect();
    Ok(ProfileReport {
        n: table.len(),
        k: sizes.len(),
        shares: shares_of(&sizes),
        cluster_sizes: sizes,
        means,
        frequencies,
        lifts,
        warnings,
    })
}
