use nalgebra::DMatrix;
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::dissimilarity::dissimilarity;
use super::pam::pam_weighted;
use super::partition::{check_k, Method, PartitionResult, RawPartition};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClaraOptions {
    pub samples: usize,
    /// Defaults to `40 + 2k`.
    pub sample_size: Option<usize>,
    pub max_swaps: usize,
}

impl Default for ClaraOptions {
    fn default() -> Self {
        ClaraOptions { samples: 5, sample_size: None, max_swaps: 1000 }
    }
}

/// PAM on random subsamples; the medoid set with the lowest full-data cost
/// wins. With `N` at most the sample size this is PAM on all points.
pub fn clara(x: &DMatrix<f64>, k: usize, opts: &ClaraOptions, seed: u64) -> Result<PartitionResult> {
    let n = x.nrows();
    check_k(k, n)?;
    if opts.samples == 0 {
        return Err(Error::contract("clara needs at least one sample"));
    }
    let size = opts.sample_size.unwrap_or(40 + 2 * k).min(n);
    if size < k {
        return Err(Error::contract(format!("sample size {size} is smaller than k = {k}")));
    }
    let draws = if size == n { 1 } else { opts.samples };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<Candidate> = None;
    let mut history = Vec::with_capacity(draws);
    let mut all_converged = true;
    let mut swaps = 0;
    for _ in 0..draws {
        let mut idx: Vec<usize> = if size == n { (0..n).collect() } else { sample(&mut rng, n, size).into_vec() };
        idx.sort_unstable();
        let sub = sub_scores(x, &idx);
        let fit = pam_weighted(&dissimilarity(&sub)?, &vec![1.0; size], k, opts.max_swaps);
        all_converged &= fit.converged;
        swaps += fit.swaps;
        let medoids: Vec<usize> = fit.state.medoids.iter().map(|&m| idx[m]).collect();
        let cand = assign(x, medoids);
        history.push(cand.cost);
        if best.as_ref().is_none_or(|b| cand.cost < b.cost) {
            best = Some(cand);
        }
    }
    let best = best.expect("at least one sample");
    let centers = sub_scores(x, &best.medoids);
    RawPartition {
        method: Method::Clara,
        k,
        labels: best.labels,
        memberships: None,
        centers: Some(centers),
        medoids: Some(best.medoids),
        objective: best.cost,
        objective_history: history,
        converged: all_converged,
        iterations: swaps,
        seed,
    }
    .canonicalize()
}

struct Candidate {
    medoids: Vec<usize>,
    labels: Vec<usize>,
    cost: f64,
}

fn sub_scores(x: &DMatrix<f64>, idx: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(idx.len(), x.ncols(), |r, c| x[(idx[r], c)])
}

fn assign(x: &DMatrix<f64>, medoids: Vec<usize>) -> Candidate {
    let n = x.nrows();
    let mut labels = vec![0; n];
    let mut cost = 0.0;
    for (i, label) in labels.iter_mut().enumerate() {
        let mut best = (f64::INFINITY, 0);
        for (pos, &m) in medoids.iter().enumerate() {
            let d = (x.row(i) - x.row(m)).norm();
            if d < best.0 {
                best = (d, pos);
            }
        }
        // a medoid always belongs to its own cluster
        if let Some(pos) = medoids.iter().position(|&m| m == i) {
            best = (0.0, pos);
        }
        *label = best.1;
        cost += best.0;
    }
    Candidate { medoids, labels, cost }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clustering::{pam, DissimilarityMatrix, PamOptions};

    fn full_cost(d: &DissimilarityMatrix, medoids: &[usize]) -> f64 {
        (0..d.n())
            .map(|o| medoids.iter().map(|&m| d.get(o, m)).fold(f64::INFINITY, f64::min))
            .sum()
    }

    fn clumps() -> DMatrix<f64> {
        // three clumps: a heavily repeated centre plus a few neighbours
        let centres = [(0.0, 0.0), (10.0, 0.0), (0.0, 10.0)];
        let mut rows = Vec::new();
        for (g, &(cx, cy)) in centres.iter().enumerate() {
            for _ in 0..30 {
                rows.push((cx, cy));
            }
            for t in 0..10 {
                let a = (t + 3 * g) as f64;
                rows.push((cx + 0.3 * a.cos(), cy + 0.3 * a.sin()));
            }
        }
        DMatrix::from_fn(rows.len(), 2, |i, j| if j == 0 { rows[i].0 } else { rows[i].1 })
    }

    #[test]
    fn small_n_equals_pam() {
        let x = DMatrix::from_fn(30, 2, |i, j| ((i * 7 + j * 3) as f64 * 0.9).sin());
        let c = clara(&x, 3, &ClaraOptions::default(), 8).unwrap();
        let p = pam(&dissimilarity(&x).unwrap(), 3, &PamOptions::default()).unwrap();
        assert_eq!(c.labels, p.labels);
        assert_eq!(c.medoids, p.medoids);
        assert!((c.objective - p.objective).abs() < 1e-12);
    }

    #[test]
    fn separated_clumps_match_pam_objective() {
        let x = clumps();
        let c = clara(&x, 3, &ClaraOptions::default(), 21).unwrap();
        let p = pam(&dissimilarity(&x).unwrap(), 3, &PamOptions::default()).unwrap();
        assert!((c.objective - p.objective).abs() < 1e-9, "{} vs {}", c.objective, p.objective);
    }

    #[test]
    fn fixed_seed_is_bit_identical() {
        let x = clumps();
        let a = clara(&x, 4, &ClaraOptions::default(), 3).unwrap();
        let b = clara(&x, 4, &ClaraOptions::default(), 3).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn full_cost_matches_objective() {
        let x = clumps();
        let c = clara(&x, 3, &ClaraOptions::default(), 2).unwrap();
        let d = dissimilarity(&x).unwrap();
        assert!((full_cost(&d, c.medoids.as_ref().unwrap()) - c.objective).abs() < 1e-9);
    }
}
