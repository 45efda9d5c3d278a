use serde::{Deserialize, Serialize};

use super::dissimilarity::DissimilarityMatrix;
use super::partition::{check_k, Method, PartitionResult, RawPartition};
use crate::error::Result;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PamOptions {
    /// Upper bound on SWAP iterations; hitting it clears `converged`.
    pub max_swaps: usize,
}

impl Default for PamOptions {
    fn default() -> Self {
        PamOptions { max_swaps: 1000 }
    }
}

/// Partitioning around medoids: greedy BUILD, then repeatedly the single
/// medoid/non-medoid exchange that lowers `Σ_i d(i, nearest medoid)` most.
pub fn pam(d: &DissimilarityMatrix, k: usize, opts: &PamOptions) -> Result<PartitionResult> {
    check_k(k, d.n())?;
    let weights = vec![1.0; d.n()];
    let fit = pam_weighted(d, &weights, k, opts.max_swaps);
    RawPartition {
        method: Method::Pam,
        k,
        labels: fit.state.nearest.clone(),
        memberships: None,
        centers: None,
        medoids: Some(fit.state.medoids.clone()),
        objective: fit.history[fit.history.len() - 1],
        objective_history: fit.history,
        converged: fit.converged,
        iterations: fit.swaps,
        seed: 0,
    }
    .canonicalize()
}

pub(crate) struct PamFit {
    pub state: Assignment,
    pub history: Vec<f64>,
    pub converged: bool,
    pub swaps: usize,
}

/// Nearest and second-nearest medoid bookkeeping.
pub(crate) struct Assignment {
    pub medoids: Vec<usize>,
    /// Position in `medoids` of each object's nearest medoid.
    pub nearest: Vec<usize>,
    pub d1: Vec<f64>,
    pub d2: Vec<f64>,
}

impl Assignment {
    fn new(d: &DissimilarityMatrix, medoids: Vec<usize>) -> Self {
        let n = d.n();
        let mut a = Assignment {
            medoids,
            nearest: vec![0; n],
            d1: vec![0.0; n],
            d2: vec![0.0; n],
        };
        a.refresh(d);
        a
    }

    fn refresh(&mut self, d: &DissimilarityMatrix) {
        let n = d.n();
        let cols: Vec<&[f64]> = self.medoids.iter().map(|&m| d.column(m)).collect();
        for o in 0..n {
            let (mut b1, mut b2, mut at) = (f64::INFINITY, f64::INFINITY, 0);
            for (pos, col) in cols.iter().enumerate() {
                let v = col[o];
                if v < b1 {
                    b2 = b1;
                    b1 = v;
                    at = pos;
                } else if v < b2 {
                    b2 = v;
                }
            }
            self.nearest[o] = at;
            self.d1[o] = b1;
            self.d2[o] = b2;
        }
    }

    fn cost(&self, w: &[f64]) -> f64 {
        self.d1.iter().zip(w).map(|(d, w)| d * w).sum()
    }
}

/// Weighted BUILD: the first medoid minimizes total distance, each further
/// one maximizes the reduction it brings.
pub(crate) fn build(d: &DissimilarityMatrix, w: &[f64], k: usize) -> Vec<usize> {
    let n = d.n();
    let mut medoids = Vec::with_capacity(k);
    let mut is_medoid = vec![false; n];
    let mut best = (f64::INFINITY, 0);
    for c in 0..n {
        let total: f64 = d.column(c).iter().zip(w).map(|(v, w)| v * w).sum();
        if total < best.0 {
            best = (total, c);
        }
    }
    medoids.push(best.1);
    is_medoid[best.1] = true;
    let mut d1: Vec<f64> = d.column(best.1).to_vec();
    while medoids.len() < k {
        let mut best = (f64::NEG_INFINITY, usize::MAX);
        for c in (0..n).filter(|&c| !is_medoid[c]) {
            let gain: f64 = d
                .column(c)
                .iter()
                .zip(&d1)
                .zip(w)
                .map(|((v, cur), w)| if v < cur { (cur - v) * w } else { 0.0 })
                .sum();
            if gain > best.0 {
                best = (gain, c);
            }
        }
        let c = best.1;
        medoids.push(c);
        is_medoid[c] = true;
        for (cur, v) in d1.iter_mut().zip(d.column(c)) {
            *cur = cur.min(*v);
        }
    }
    medoids
}

pub(crate) fn pam_weighted(d: &DissimilarityMatrix, w: &[f64], k: usize, max_swaps: usize) -> PamFit {
    let n = d.n();
    let mut state = Assignment::new(d, build(d, w, k));
    let mut history = vec![state.cost(w)];
    let mut is_medoid = vec![false; n];
    for &m in &state.medoids {
        is_medoid[m] = true;
    }
    let mut swaps = 0;
    let mut converged = false;
    let mut delta = vec![0.0; k];
    loop {
        let current = history[history.len() - 1];
        let threshold = -1e-12 * (1.0 + current.abs());
        let mut best = (threshold, usize::MAX, usize::MAX);
        for c in (0..n).filter(|&c| !is_medoid[c]) {
            // change shared by every removal, plus a per-medoid correction
            delta.iter_mut().for_each(|v| *v = 0.0);
            let mut shared = 0.0;
            for (o, &doc) in d.column(c).iter().enumerate() {
                let (d1, wo) = (state.d1[o], w[o]);
                if doc < d1 {
                    shared += (doc - d1) * wo;
                } else {
                    delta[state.nearest[o]] += (doc.min(state.d2[o]) - d1) * wo;
                }
            }
            for (pos, &extra) in delta.iter().enumerate() {
                if shared + extra < best.0 {
                    best = (shared + extra, c, pos);
                }
            }
        }
        if best.1 == usize::MAX {
            converged = true;
            break;
        }
        if swaps == max_swaps {
            break;
        }
        let (_, c, pos) = best;
        is_medoid[state.medoids[pos]] = false;
        is_medoid[c] = true;
        state.medoids[pos] = c;
        state.refresh(d);
        history.push(state.cost(w));
        swaps += 1;
    }
    PamFit { state, history, converged, swaps }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clustering::dissimilarity;
    use nalgebra::DMatrix;

    fn line(v: &[f64]) -> DissimilarityMatrix {
        dissimilarity(&DMatrix::from_column_slice(v.len(), 1, v)).unwrap()
    }

    #[test]
    fn two_pairs_on_a_line() {
        let r = pam(&line(&[0.0, 1.0, 9.0, 10.0]), 2, &PamOptions::default()).unwrap();
        assert_eq!(r.objective, 2.0);
        assert_eq!(r.labels, vec![1, 1, 2, 2]);
        let m = r.medoids.unwrap();
        assert!(m[0] < 2 && m[1] >= 2);
    }

    #[test]
    fn k_equal_n_uses_every_point() {
        let r = pam(&line(&[4.0, -2.0, 7.0, 0.5]), 4, &PamOptions::default()).unwrap();
        assert_eq!(r.objective, 0.0);
        let mut m = r.medoids.unwrap();
        m.sort();
        assert_eq!(m, vec![0, 1, 2, 3]);
    }

    #[test]
    fn swap_reaches_local_optimum() {
        let x = DMatrix::from_fn(40, 2, |i, j| ((i * 31 + j * 17) as f64 * 0.61).sin() * 3.0);
        let d = dissimilarity(&x).unwrap();
        let r = pam(&d, 4, &PamOptions::default()).unwrap();
        assert!(r.converged);
        let medoids = r.medoids.clone().unwrap();
        let cost = |m: &[usize]| -> f64 {
            (0..d.n()).map(|o| m.iter().map(|&c| d.get(o, c)).fold(f64::INFINITY, f64::min)).sum()
        };
        assert!((cost(&medoids) - r.objective).abs() < 1e-9);
        for pos in 0..4 {
            for c in (0..d.n()).filter(|c| !medoids.contains(c)) {
                let mut m = medoids.clone();
                m[pos] = c;
                assert!(cost(&m) >= r.objective - 1e-9);
            }
        }
        for w in r.objective_history.windows(2) {
            assert!(w[1] < w[0]);
        }
    }

    #[test]
    fn build_picks_the_most_central_point_first() {
        let d = line(&[0.0, 1.0, 2.0, 10.0]);
        assert_eq!(build(&d, &[1.0; 4], 1), vec![1]);
        assert_eq!(build(&d, &[1.0; 4], 2), vec![1, 3]);
        // weights shift the centre
        assert_eq!(build(&d, &[1.0, 1.0, 1.0, 10.0], 1), vec![3]);
    }
}
