use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::partition::{check_k, Method, PartitionResult, RawPartition};
use crate::error::{Error, Result};
use crate::seed::derive_seed;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KmeansOptions {
    pub restarts: usize,
    pub max_iter: usize,
}

impl Default for KmeansOptions {
    fn default() -> Self {
        KmeansOptions { restarts: 10, max_iter: 300 }
    }
}

struct Fit {
    labels: Vec<usize>,
    centers: Vec<f64>,
    history: Vec<f64>,
    converged: bool,
    iterations: usize,
}

/// Lloyd's algorithm from k-means++ seeds, best of `restarts` runs by
/// within-cluster sum of squares.
pub fn kmeans(x: &DMatrix<f64>, k: usize, opts: &KmeansOptions, seed: u64) -> Result<PartitionResult> {
    let n = x.nrows();
    let p = x.ncols();
    check_k(k, n)?;
    if opts.restarts == 0 {
        return Err(Error::contract("kmeans needs at least one restart"));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::contract("object scores contain non-finite values"));
    }
    let rows: Vec<f64> = (0..n).flat_map(|i| (0..p).map(move |c| x[(i, c)])).collect();
    let fits: Vec<Fit> = (0..opts.restarts)
        .into_par_iter()
        .map(|r| lloyd(&rows, p, k, opts.max_iter, derive_seed(seed, r as u64)))
        .collect();
    let mut best = 0;
    for (r, fit) in fits.iter().enumerate() {
        if last(&fit.history) < last(&fits[best].history) {
            best = r;
        }
    }
    let fit = fits.into_iter().nth(best).expect("at least one restart");
    RawPartition {
        method: Method::Kmeans,
        k,
        labels: fit.labels,
        memberships: None,
        centers: Some(DMatrix::from_row_slice(k, p, &fit.centers)),
        medoids: None,
        objective: last(&fit.history),
        objective_history: fit.history,
        converged: fit.converged,
        iterations: fit.iterations,
        seed,
    }
    .canonicalize()
}

fn last(h: &[f64]) -> f64 {
    *h.last().expect("history is never empty")
}

#[inline]
fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(u, v)| (u - v) * (u - v)).sum()
}

fn seed_centers(rows: &[f64], p: usize, k: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let n = rows.len() / p;
    let mut centers = Vec::with_capacity(k * p);
    let first = rng.random_range(0..n);
    centers.extend_from_slice(&rows[first * p..(first + 1) * p]);
    let mut chosen = vec![false; n];
    chosen[first] = true;
    let mut d2: Vec<f64> = (0..n).map(|i| sq_dist(&rows[i * p..(i + 1) * p], &centers[..p])).collect();
    for _ in 1..k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut pick = n - 1;
            for (i, &w) in d2.iter().enumerate() {
                if w > 0.0 && target < w {
                    pick = i;
                    break;
                }
                target -= w;
            }
            // rounding can run past the end; fall back to the last positive weight
            if d2[pick] == 0.0 {
                pick = d2.iter().rposition(|&w| w > 0.0).expect("total is positive");
            }
            pick
        } else {
            // every point coincides with a center
            (0..n).find(|&i| !chosen[i]).expect("k <= N")
        };
        chosen[pick] = true;
        let c = &rows[pick * p..(pick + 1) * p];
        centers.extend_from_slice(c);
        for (i, w) in d2.iter_mut().enumerate() {
            *w = w.min(sq_dist(&rows[i * p..(i + 1) * p], c));
        }
    }
    centers
}

fn lloyd(rows: &[f64], p: usize, k: usize, max_iter: usize, seed: u64) -> Fit {
    let n = rows.len() / p;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centers = seed_centers(rows, p, k, &mut rng);
    let mut labels = vec![usize::MAX; n];
    let mut history = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    let mut dist = vec![0.0; n];
    while iterations < max_iter {
        let mut changed = false;
        for i in 0..n {
            let xi = &rows[i * p..(i + 1) * p];
            let mut best = 0;
            let mut best_d = f64::INFINITY;
            for c in 0..k {
                let d = sq_dist(xi, &centers[c * p..(c + 1) * p]);
                if d < best_d {
                    best_d = d;
                    best = c;
                }
            }
            if labels[i] != best {
                labels[i] = best;
                changed = true;
            }
            dist[i] = best_d;
        }
        changed |= repair_empty(&mut labels, &mut dist, k);
        if !changed && !history.is_empty() {
            converged = true;
            break;
        }
        iterations += 1;
        centers = means(rows, p, k, &labels);
        let obj = (0..n)
            .map(|i| sq_dist(&rows[i * p..(i + 1) * p], &centers[labels[i] * p..(labels[i] + 1) * p]))
            .sum();
        history.push(obj);
    }
    Fit { labels, centers, history, converged, iterations }
}

/// Moves the point farthest from its center into each empty cluster.
fn repair_empty(labels: &mut [usize], dist: &mut [f64], k: usize) -> bool {
    let mut size = vec![0usize; k];
    for &l in labels.iter() {
        size[l] += 1;
    }
    let mut changed = false;
    for c in 0..k {
        if size[c] > 0 {
            continue;
        }
        let mut far = None;
        for i in 0..labels.len() {
            if size[labels[i]] > 1 && far.is_none_or(|f: usize| dist[i] > dist[f]) {
                far = Some(i);
            }
        }
        let i = far.expect("k <= N leaves a cluster with two members");
        size[labels[i]] -= 1;
        labels[i] = c;
        size[c] = 1;
        dist[i] = 0.0;
        changed = true;
    }
    changed
}

fn means(rows: &[f64], p: usize, k: usize, labels: &[usize]) -> Vec<f64> {
    let mut sums = vec![0.0; k * p];
    let mut counts = vec![0usize; k];
    for (i, &l) in labels.iter().enumerate() {
        counts[l] += 1;
        for c in 0..p {
            sums[l * p + c] += rows[i * p + c];
        }
    }
    for l in 0..k {
        for c in 0..p {
            sums[l * p + c] /= counts[l] as f64;
        }
    }
    sums
}
