use std::borrow::Cow;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::dissimilarity::{duplicate_groups, DissimilarityMatrix};
use super::pam::build;
use super::partition::{argmax_labels, check_k, Method, PartitionResult, RawPartition};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FannyOptions {
    /// Membership exponent `r > 1`.
    pub exponent: f64,
    /// Stop once a step lowers the objective by less than this fraction.
    pub tolerance: f64,
    pub max_iter: usize,
}

impl Default for FannyOptions {
    fn default() -> Self {
        FannyOptions { exponent: 2.0, tolerance: 1e-9, max_iter: 500 }
    }
}

/// Fuzzy analysis clustering.
///
/// Minimizes `Σ_v Σ_{i,j} u_iv^r u_jv^r d(i,j) / (2 Σ_j u_jv^r)` over
/// row-stochastic memberships. With
/// `T_iv = Σ_j u_jv^r d(i,j)`, `S_v = Σ_j u_jv^r` and `W_v = Σ_i u_iv^r T_iv`
/// each step sets
///
/// ```text
/// e_iv = T_iv / S_v - W_v / (2 S_v²),    u_iv ∝ e_iv^(-1/(r-1))
/// ```
///
/// `e_iv` is the squared distance from object `i` to the fuzzy centre of
/// cluster `v` in the embedding whose squared distances are `d`, so each
/// step is a fuzzy c-means step there and the objective never increases.
/// Starting memberships come from BUILD medoids. Objects at distance zero
/// from each other share memberships and are folded into weights.
///
/// Reaching `max_iter` returns the current fit with `converged = false`.
/// Hard labels are the row argmax; a fit whose hardened partition leaves a
/// cluster empty is reported as [`Error::Degenerate`].
pub fn fanny(d: &DissimilarityMatrix, k: usize, opts: &FannyOptions) -> Result<PartitionResult> {
    let n = d.n();
    check_k(k, n)?;
    if !(opts.exponent > 1.0 && opts.exponent.is_finite()) {
        return Err(Error::contract(format!("fanny exponent must exceed 1, got {}", opts.exponent)));
    }
    if !(opts.tolerance >= 0.0) {
        return Err(Error::contract("fanny tolerance must be non-negative"));
    }
    let (reps, group) = duplicate_groups(d);
    let m = reps.len();
    if m < k {
        return Err(Error::Degenerate(format!("{m} distinct objects cannot fill {k} clusters")));
    }
    let mut w = vec![0.0; m];
    for &g in &group {
        w[g] += 1.0;
    }
    let dc: Cow<DissimilarityMatrix> = if m == n { Cow::Borrowed(d) } else { Cow::Owned(d.submatrix(&reps)) };
    let fit = iterate(&dc, &w, k, opts);

    let u = DMatrix::from_fn(n, k, |i, v| fit.u[(group[i], v)]);
    let labels = argmax_labels(&u).into_iter().map(|l| l as usize - 1).collect();
    RawPartition {
        method: Method::Fanny,
        k,
        labels,
        memberships: Some(u),
        centers: None,
        medoids: None,
        objective: fit.history[fit.history.len() - 1],
        objective_history: fit.history,
        converged: fit.converged,
        iterations: fit.iterations,
        seed: 0,
    }
    .canonicalize()
}

struct Fit {
    u: DMatrix<f64>,
    history: Vec<f64>,
    converged: bool,
    iterations: usize,
}

fn iterate(d: &DissimilarityMatrix, w: &[f64], k: usize, opts: &FannyOptions) -> Fit {
    let m = d.n();
    let r = opts.exponent;
    let power = -1.0 / (r - 1.0);
    let medoids = build(d, w, k);
    let mut e = DMatrix::from_fn(m, k, |i, v| d.get(i, medoids[v]));
    let mut u = DMatrix::zeros(m, k);
    update_memberships(&e, power, &mut u);

    let mut v = DMatrix::zeros(m, k);
    let mut t = DMatrix::zeros(m, k);
    let mut s = vec![0.0; k];
    let mut wv = vec![0.0; k];
    let objective = |u: &DMatrix<f64>, v: &mut DMatrix<f64>, t: &mut DMatrix<f64>, s: &mut [f64], wv: &mut [f64]| {
        for c in 0..k {
            for i in 0..m {
                v[(i, c)] = w[i] * u[(i, c)].powf(r);
            }
        }
        d.as_matrix().mul_to(v, t);
        let mut total = 0.0;
        for c in 0..k {
            s[c] = v.column(c).sum();
            wv[c] = v.column(c).dot(&t.column(c));
            total += wv[c] / (2.0 * s[c]);
        }
        total
    };

    let mut history = vec![objective(&u, &mut v, &mut t, &mut s, &mut wv)];
    let mut converged = false;
    let mut iterations = 0;
    while iterations < opts.max_iter {
        for c in 0..k {
            let offset = wv[c] / (2.0 * s[c] * s[c]);
            for i in 0..m {
                e[(i, c)] = (t[(i, c)] / s[c] - offset).max(0.0);
            }
        }
        update_memberships(&e, power, &mut u);
        iterations += 1;
        let prev = history[history.len() - 1];
        let cur = objective(&u, &mut v, &mut t, &mut s, &mut wv);
        history.push(cur);
        if prev - cur <= opts.tolerance * prev.abs() {
            converged = true;
            break;
        }
    }
    Fit { u, history, converged, iterations }
}

/// `u_iv ∝ e_iv^power`; rows with zero entries split evenly among them.
fn update_memberships(e: &DMatrix<f64>, power: f64, u: &mut DMatrix<f64>) {
    let k = e.ncols();
    for i in 0..e.nrows() {
        let zeros = (0..k).filter(|&c| e[(i, c)] < f64::MIN_POSITIVE).count();
        if zeros > 0 {
            for c in 0..k {
                u[(i, c)] = if e[(i, c)] < f64::MIN_POSITIVE { 1.0 / zeros as f64 } else { 0.0 };
            }
            continue;
        }
        let mut total = 0.0;
        for c in 0..k {
            let a = e[(i, c)].powf(power);
            u[(i, c)] = a;
            total += a;
        }
        for c in 0..k {
            u[(i, c)] /= total;
        }
    }
}
