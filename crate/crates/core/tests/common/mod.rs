//! Independent reference computations shared by the integration suites.
#![allow(dead_code)]

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use segprof::ingest::{CodedMatrix, CodedVariable, VariableKind};

/// Random coded matrix in which every level of every variable occurs.
pub fn random_coded(rng: &mut ChaCha8Rng, n: usize, ks: &[usize], kind: VariableKind) -> CodedMatrix {
    CodedMatrix {
        ids: (0..n).map(|i| format!("r{i}")).collect(),
        variables: ks
            .iter()
            .enumerate()
            .map(|(j, &k)| {
                let mut codes: Vec<u32> = (0..n).map(|_| rng.random_range(1..=k as u32)).collect();
                // plant every level at a random row
                for l in 1..=k as u32 {
                    let at = rng.random_range(0..n);
                    if !codes.contains(&l) {
                        codes[at] = l;
                    }
                }
                if (1..=k as u32).all(|l| codes.contains(&l)) {
                    CodedVariable {
                        name: format!("v{j}"),
                        kind,
                        codes,
                        labels: (1..=k).map(|l| format!("L{l}")).collect(),
                    }
                } else {
                    let mut codes = codes;
                    for l in 0..k {
                        codes[l] = l as u32 + 1;
                    }
                    CodedVariable {
                        name: format!("v{j}"),
                        kind,
                        codes,
                        labels: (1..=k).map(|l| format!("L{l}")).collect(),
                    }
                }
            })
            .collect(),
    }
}

/// Eigen-decomposition of `(1/J) Σ_j G_j D_j⁻¹ G_j'` restricted to the
/// centered subspace. Returns eigenvalues (descending) and eigenvectors.
pub fn homogeneity_eigen(coded: &CodedMatrix) -> (Vec<f64>, DMatrix<f64>) {
    let n = coded.n_records();
    let j = coded.n_variables() as f64;
    let mut m = DMatrix::<f64>::zeros(n, n);
    for var in &coded.variables {
        let k = var.level_count();
        let mut counts = vec![0.0; k];
        for &c in &var.codes {
            counts[c as usize - 1] += 1.0;
        }
        for a in 0..n {
            for b in 0..n {
                if var.codes[a] == var.codes[b] {
                    m[(a, b)] += 1.0 / counts[var.codes[a] as usize - 1] / j;
                }
            }
        }
    }
    let center = DMatrix::<f64>::identity(n, n) - DMatrix::from_element(n, n, 1.0 / n as f64);
    let mc = &center * m * &center;
    let eig = SymmetricEigen::new(mc);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    (values, vectors)
}

/// Sine of the largest principal angle between span(a) and span(b).
/// Both inputs must have orthonormal columns.
pub fn max_principal_angle_sine(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    let residual = a - b * (b.transpose() * a);
    residual.svd(false, false).singular_values.max()
}

/// Best non-decreasing weighted fit among all contiguous poolings.
pub fn isotonic_by_pooling(v: &[f64], w: &[f64]) -> Vec<f64> {
    let n = v.len();
    let mut best: Option<(f64, Vec<f64>)> = None;
    for mask in 0u32..(1 << (n - 1)) {
        let mut fit = Vec::with_capacity(n);
        let mut start = 0;
        for end in 1..=n {
            if end == n || mask & (1 << (end - 1)) != 0 {
                let sw: f64 = w[start..end].iter().sum();
                let m = v[start..end].iter().zip(&w[start..end]).map(|(a, b)| a * b).sum::<f64>() / sw;
                fit.extend(std::iter::repeat_n(m, end - start));
                start = end;
            }
        }
        if fit.windows(2).any(|p| p[0] > p[1] + 1e-12) {
            continue;
        }
        let obj: f64 = fit.iter().zip(v).zip(w).map(|((f, x), w)| w * (x - f).powi(2)).sum();
        if best.as_ref().is_none_or(|(b, _)| obj < *b) {
            best = Some((obj, fit));
        }
    }
    best.expect("the single pool is always feasible").1
}

/// Silhouette widths by the textbook triple loop over a full distance matrix.
/// Singleton clusters get 0.
pub fn naive_silhouette(d: &[Vec<f64>], labels: &[usize]) -> Vec<f64> {
    let n = labels.len();
    let k = *labels.iter().max().unwrap();
    (0..n)
        .map(|i| {
            let own = labels[i];
            let mut a_sum = 0.0;
            let mut a_cnt = 0;
            for j in 0..n {
                if j != i && labels[j] == own {
                    a_sum += d[i][j];
                    a_cnt += 1;
                }
            }
            if a_cnt == 0 {
                return 0.0;
            }
            let a = a_sum / a_cnt as f64;
            let mut b = f64::INFINITY;
            for c in 1..=k {
                if c == own {
                    continue;
                }
                let mut s = 0.0;
                let mut cnt = 0;
                for j in 0..n {
                    if labels[j] == c {
                        s += d[i][j];
                        cnt += 1;
                    }
                }
                if cnt > 0 {
                    b = b.min(s / cnt as f64);
                }
            }
            if a.max(b) == 0.0 {
                0.0
            } else {
                (b - a) / a.max(b)
            }
        })
        .collect()
}

/// Minimum of Σ_i min_m d(i, m) over all medoid sets of size k.
pub fn exhaustive_medoid_cost(d: &[Vec<f64>], k: usize) -> f64 {
    let n = d.len();
    let mut best = f64::INFINITY;
    let mut set = Vec::with_capacity(k);
    fn rec(d: &[Vec<f64>], k: usize, start: usize, set: &mut Vec<usize>, best: &mut f64) {
        if set.len() == k {
            let cost: f64 = (0..d.len()).map(|i| set.iter().map(|&m| d[i][m]).fold(f64::INFINITY, f64::min)).sum();
            *best = best.min(cost);
            return;
        }
        for m in start..d.len() {
            set.push(m);
            rec(d, k, m + 1, set, best);
            set.pop();
        }
    }
    rec(d, k, 0, &mut set, &mut best);
    let _ = n;
    best
}

/// Euclidean distances by a plain double loop.
pub fn naive_distances(rows: &[Vec<f64>]) -> Vec<Vec<f64>> {
    rows.iter()
        .map(|a| rows.iter().map(|b| a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()).collect())
        .collect()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
