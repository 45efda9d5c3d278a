use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Partitioning technique. The declaration order is the tie-break order
/// used by model selection.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Kmeans,
    Pam,
    Clara,
    Fanny,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Kmeans, Method::Pam, Method::Clara, Method::Fanny];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Kmeans => "kmeans",
            Method::Pam => "pam",
            Method::Clara => "clara",
            Method::Fanny => "fanny",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.as_str().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::Config(format!("unknown clustering method `{s}`")))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PartitionResult {
    pub method: Method,
    pub k: usize,
    /// Hard labels in `1..=k`.
    pub labels: Vec<u32>,
    /// N×k row-stochastic memberships (fanny only).
    pub memberships: Option<DMatrix<f64>>,
    /// k×p cluster centers in score space (kmeans, clara).
    pub centers: Option<DMatrix<f64>>,
    /// Row indices of the medoids (pam, clara).
    pub medoids: Option<Vec<usize>>,
    pub objective: f64,
    /// Objective after initialization and after every iteration.
    pub objective_history: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
    pub seed: u64,
}

impl PartitionResult {
    pub fn n(&self) -> usize {
        self.labels.len()
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &l in &self.labels {
            sizes[l as usize - 1] += 1;
        }
        sizes
    }
}

/// Maps raw 0-based cluster indices to canonical ones: clusters ordered by
/// descending size, ties by their smallest member index.
pub(crate) fn canonical_order(raw: &[usize], k: usize) -> Result<Vec<usize>> {
    let mut size = vec![0usize; k];
    let mut first = vec![usize::MAX; k];
    for (i, &c) in raw.iter().enumerate() {
        size[c] += 1;
        first[c] = first[c].min(i);
    }
    if let Some(empty) = size.iter().position(|&s| s == 0) {
        return Err(Error::Degenerate(format!("cluster {} of {k} is empty", empty + 1)));
    }
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by_key(|&c| (std::cmp::Reverse(size[c]), first[c]));
    let mut new_of = vec![0; k];
    for (new, &old) in order.iter().enumerate() {
        new_of[old] = new;
    }
    Ok(new_of)
}

/// Builds a canonicalized result from raw 0-based labels. Centers are k×p
/// rows, memberships N×k columns, both indexed by raw cluster.
pub(crate) struct RawPartition {
    pub method: Method,
    pub k: usize,
    pub labels: Vec<usize>,
    pub memberships: Option<DMatrix<f64>>,
    pub centers: Option<DMatrix<f64>>,
    pub medoids: Option<Vec<usize>>,
    pub objective: f64,
    pub objective_history: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
    pub seed: u64,
}

impl RawPartition {
    pub fn canonicalize(self) -> Result<PartitionResult> {
        let k = self.k;
        let new_of = canonical_order(&self.labels, k)?;
        let mut old_of = vec![0; k];
        for (old, &new) in new_of.iter().enumerate() {
            old_of[new] = old;
        }
        let centers = self
            .centers
            .map(|c| DMatrix::from_fn(k, c.ncols(), |r, col| c[(old_of[r], col)]));
        let medoids = self.medoids.map(|m| old_of.iter().map(|&o| m[o]).collect());
        let (labels, memberships) = match self.memberships {
            Some(u) => {
                let u = DMatrix::from_fn(u.nrows(), k, |i, c| u[(i, old_of[c])]);
                (argmax_labels(&u), Some(u))
            }
            None => (self.labels.iter().map(|&c| new_of[c] as u32 + 1).collect(), None),
        };
        Ok(PartitionResult {
            method: self.method,
            k,
            labels,
            memberships,
            centers,
            medoids,
            objective: self.objective,
            objective_history: self.objective_history,
            converged: self.converged,
            iterations: self.iterations,
            seed: self.seed,
        })
    }
}

/// 1-based row argmax, ties to the lowest column.
pub(crate) fn argmax_labels(u: &DMatrix<f64>) -> Vec<u32> {
    (0..u.nrows())
        .map(|i| {
            let mut best = 0;
            for c in 1..u.ncols() {
                if u[(i, c)] > u[(i, best)] {
                    best = c;
                }
            }
            best as u32 + 1
        })
        .collect()
}

pub(crate) fn check_k(k: usize, n: usize) -> Result<()> {
    if k < 2 || k > n {
        return Err(Error::contract(format!("k = {k} must satisfy 2 <= k <= N = {n}")));
    }
    Ok(())
}
