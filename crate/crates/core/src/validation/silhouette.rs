use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::clustering::DissimilarityMatrix;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SilhouetteReport {
    /// `s(i)` per observation.
    pub values: Vec<f64>,
    /// Mean of `s(i)` over each cluster's members, cluster 1 first.
    pub cluster_means: Vec<f64>,
    pub average: f64,
}

/// Silhouette widths `s(i) = (b(i) - a(i)) / max(a(i), b(i))` for 1-based
/// labels. Members of singleton clusters get `s(i) = 0`.
pub fn silhouette(d: &DissimilarityMatrix, labels: &[u32]) -> Result<SilhouetteReport> {
    let n = d.n();
    if labels.len() != n {
        return Err(Error::contract(format!("{} labels for {n} objects", labels.len())));
    }
    let k = labels.iter().copied().max().unwrap_or(0) as usize;
    if labels.contains(&0) {
        return Err(Error::contract("cluster labels start at 1"));
    }
    let mut size = vec![0usize; k];
    for &l in labels {
        size[l as usize - 1] += 1;
    }
    if let Some(c) = size.iter().position(|&s| s == 0) {
        return Err(Error::contract(format!("cluster {} has no members", c + 1)));
    }
    if k < 2 {
        return Err(Error::contract("silhouette needs at least two clusters"));
    }

    let values: Vec<f64> = (0..n)
        .into_par_iter()
        .map_init(
            || vec![0.0; k],
            |sums, i| {
                sums.iter_mut().for_each(|s| *s = 0.0);
                for (j, &v) in d.column(i).iter().enumerate() {
                    sums[labels[j] as usize - 1] += v;
                }
                let own = labels[i] as usize - 1;
                if size[own] == 1 {
                    return 0.0;
                }
                let a = sums[own] / (size[own] - 1) as f64;
                let b = (0..k)
                    .filter(|&c| c != own)
                    .map(|c| sums[c] / size[c] as f64)
                    .fold(f64::INFINITY, f64::min);
                let scale = a.max(b);
                if scale == 0.0 {
                    0.0
                } else {
                    (b - a) / scale
                }
            },
        )
        .collect();

    let mut cluster_sums = vec![0.0; k];
    for (s, &l) in values.iter().zip(labels) {
        cluster_sums[l as usize - 1] += s;
    }
    let cluster_means = cluster_sums.iter().zip(&size).map(|(s, &m)| s / m as f64).collect();
    let average = values.iter().sum::<f64>() / n as f64;
    Ok(SilhouetteReport { values, cluster_means, average })
}
