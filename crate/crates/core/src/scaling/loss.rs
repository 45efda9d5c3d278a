use nalgebra::DMatrix;

use super::IndicatorExpansion;
use crate::error::{Error, Result};

/// Homogeneity loss `(1/J) Σ_j tr[(X − G_j Y_j)'(X − G_j Y_j)]`.
pub fn loss(x: &DMatrix<f64>, quantifications: &[DMatrix<f64>], expansion: &IndicatorExpansion) -> Result<f64> {
    let (n, p) = x.shape();
    if n != expansion.n {
        return Err(Error::contract(format!("X has {n} rows, expansion has {}", expansion.n)));
    }
    if quantifications.len() != expansion.blocks.len() || expansion.blocks.is_empty() {
        return Err(Error::contract(format!(
            "{} quantification matrices for {} variables",
            quantifications.len(),
            expansion.blocks.len()
        )));
    }
    let mut total = 0.0;
    for (y, block) in quantifications.iter().zip(&expansion.blocks) {
        if y.shape() != (block.level_count(), p) {
            return Err(Error::contract(format!(
                "Y has shape {:?}, expected {:?}",
                y.shape(),
                (block.level_count(), p)
            )));
        }
        total += residual(x, y, &block.codes);
    }
    Ok(total / expansion.blocks.len() as f64)
}

pub(crate) fn residual(x: &DMatrix<f64>, y: &DMatrix<f64>, codes: &[usize]) -> f64 {
    let mut sum = 0.0;
    for d in 0..x.ncols() {
        let xc = x.column(d);
        let yc = y.column(d);
        for (i, &c) in codes.iter().enumerate() {
            let r = xc[i] - yc[c];
            sum += r * r;
        }
    }
    sum
}
