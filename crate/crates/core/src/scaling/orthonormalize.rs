use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};

/// Projects raw scores onto `{X : X'X = N·I, 1'X = 0}`.
///
/// Columns are centered and then replaced by the closest feasible matrix,
/// `√N · Z (Z'Z)^{-1/2}`. This keeps the column span and maximizes
/// `tr(X'Z)`, which makes it the exact score update of the ALS sweep.
pub fn orthonormalize(x_raw: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let (n, p) = x_raw.shape();
    if p == 0 || n <= p {
        return Err(Error::contract(format!("orthonormalize needs N > p >= 1, got N={n}, p={p}")));
    }
    if x_raw.iter().any(|v| !v.is_finite()) {
        return Err(Error::Degenerate("scores contain non-finite values".into()));
    }
    let mut x = center(x_raw);
    // the second pass polishes rounding left by the first
    for _ in 0..2 {
        x = polar(&x, n)?;
        x = center(&x);
    }
    Ok(x)
}

fn center(x: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = x.clone();
    let n = x.nrows() as f64;
    for mut col in out.column_iter_mut() {
        let mean = col.sum() / n;
        col.add_scalar_mut(-mean);
    }
    out
}

fn polar(z: &DMatrix<f64>, n: usize) -> Result<DMatrix<f64>> {
    let gram = z.transpose() * z;
    let eig = SymmetricEigen::new(gram);
    let max = eig.eigenvalues.max();
    let min = eig.eigenvalues.min();
    if !(max > 0.0) || min <= 1e-12 * max {
        return Err(Error::Degenerate(format!(
            "centered scores have rank < {} (eigenvalues {min:e}..{max:e})",
            z.ncols()
        )));
    }
    let inv_sqrt = DMatrix::from_diagonal(&eig.eigenvalues.map(|l| 1.0 / l.sqrt()));
    let w = &eig.eigenvectors * inv_sqrt * eig.eigenvectors.transpose();
    Ok(z * w * (n as f64).sqrt())
}
