use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{Error, Result};

/// Symmetric matrix of Euclidean distances between object-score rows.
///
/// Stored densely in column-major order, so `column(j)` is a contiguous
/// slice holding `d(·, j)`.
#[derive(Clone, Debug, PartialEq)]
pub struct DissimilarityMatrix {
    d: DMatrix<f64>,
}

impl DissimilarityMatrix {
    /// Wraps a precomputed matrix after checking it is a valid dissimilarity.
    pub fn from_matrix(d: DMatrix<f64>) -> Result<Self> {
        let n = d.nrows();
        if d.ncols() != n {
            return Err(Error::contract(format!("dissimilarity must be square, got {}x{}", n, d.ncols())));
        }
        for j in 0..n {
            if d[(j, j)] != 0.0 {
                return Err(Error::contract(format!("non-zero diagonal at {j}")));
            }
            for i in 0..j {
                let v = d[(i, j)];
                if !v.is_finite() || v < 0.0 || v != d[(j, i)] {
                    return Err(Error::contract(format!("entry ({i}, {j}) is not a symmetric non-negative value")));
                }
            }
        }
        Ok(DissimilarityMatrix { d })
    }

    pub fn n(&self) -> usize {
        self.d.nrows()
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.d[(i, j)]
    }

    #[inline]
    pub fn column(&self, j: usize) -> &[f64] {
        let n = self.n();
        &self.d.as_slice()[j * n..(j + 1) * n]
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.d
    }

    /// Distances among a subset of the objects, in the given order.
    pub fn submatrix(&self, idx: &[usize]) -> DissimilarityMatrix {
        let m = idx.len();
        DissimilarityMatrix {
            d: DMatrix::from_fn(m, m, |a, b| self.d[(idx[a], idx[b])]),
        }
    }
}

/// Euclidean distances between the rows of `x`.
pub fn dissimilarity(x: &DMatrix<f64>) -> Result<DissimilarityMatrix> {
    let n = x.nrows();
    if n < 2 {
        return Err(Error::contract(format!("need at least 2 rows, got {n}")));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::contract("object scores contain non-finite values"));
    }
    // row-major copy keeps each row's coordinates adjacent
    let p = x.ncols();
    let rows: Vec<f64> = (0..n).flat_map(|i| (0..p).map(move |c| x[(i, c)])).collect();
    let mut data = vec![0.0; n * n];
    data.par_chunks_mut(n).enumerate().for_each(|(j, col)| {
        let xj = &rows[j * p..(j + 1) * p];
        for (i, out) in col.iter_mut().enumerate() {
            if i != j {
                let xi = &rows[i * p..(i + 1) * p];
                *out = xi.iter().zip(xj).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
            }
        }
    });
    Ok(DissimilarityMatrix {
        d: DMatrix::from_vec(n, n, data),
    })
}

/// Groups objects at distance zero from each other. Returns one
/// representative per group (its first member) and each object's group.
pub(crate) fn duplicate_groups(d: &DissimilarityMatrix) -> (Vec<usize>, Vec<usize>) {
    let n = d.n();
    let mut group = vec![usize::MAX; n];
    let mut reps = Vec::new();
    for i in 0..n {
        if group[i] != usize::MAX {
            continue;
        }
        let g = reps.len();
        reps.push(i);
        let col = d.column(i);
        for j in i..n {
            if group[j] == usize::MAX && col[j] == 0.0 {
                group[j] = g;
            }
        }
    }
    (reps, group)
}
