use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::ingest::CodedMatrix;

/// Indicator matrix `G_j` of one variable, kept in coded-column form.
#[derive(Clone, Debug, PartialEq)]
pub struct IndicatorBlock {
    /// 0-based category of every observation: the column holding the 1.
    pub codes: Vec<usize>,
    /// Diagonal of `D_j = G_j'G_j`: occurrences of each category.
    pub counts: Vec<f64>,
}

impl IndicatorBlock {
    pub fn from_codes(codes: Vec<usize>, level_count: usize) -> Result<Self> {
        let mut counts = vec![0.0; level_count];
        for &c in &codes {
            *counts
                .get_mut(c)
                .ok_or_else(|| Error::contract(format!("code {} outside 1..={level_count}", c + 1)))? += 1.0;
        }
        if let Some(l) = counts.iter().position(|c| *c == 0.0) {
            return Err(Error::Internal(format!("category {} has zero frequency", l + 1)));
        }
        Ok(IndicatorBlock { codes, counts })
    }

    pub fn level_count(&self) -> usize {
        self.counts.len()
    }

    /// `D⁻¹G'X`: the mean score of each category.
    pub fn centroids(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        let p = x.ncols();
        let mut out = DMatrix::zeros(self.level_count(), p);
        for d in 0..p {
            let col = x.column(d);
            for (i, &c) in self.codes.iter().enumerate() {
                out[(c, d)] += col[i];
            }
            for (c, n) in self.counts.iter().enumerate() {
                out[(c, d)] /= n;
            }
        }
        out
    }

    /// The N×k 0/1 matrix.
    pub fn dense(&self) -> DMatrix<f64> {
        let mut g = DMatrix::zeros(self.codes.len(), self.level_count());
        for (i, &c) in self.codes.iter().enumerate() {
            g[(i, c)] = 1.0;
        }
        g
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct IndicatorExpansion {
    pub n: usize,
    pub blocks: Vec<IndicatorBlock>,
}

pub fn expand_indicators(coded: &CodedMatrix) -> Result<IndicatorExpansion> {
    let n = coded.n_records();
    let blocks = coded
        .variables
        .iter()
        .map(|v| {
            if v.codes.len() != n {
                return Err(Error::contract(format!("variable `{}` is not aligned with the ids", v.name)));
            }
            let codes = v
                .codes
                .iter()
                .map(|&c| (c as usize).checked_sub(1).ok_or_else(|| Error::contract("category code 0")))
                .collect::<Result<Vec<_>>>()?;
            IndicatorBlock::from_codes(codes, v.level_count()).map_err(|e| match e {
                Error::Internal(m) => Error::Internal(format!("variable `{}`: {m}", v.name)),
                e => e,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(IndicatorExpansion { n, blocks })
}

#[cfg(test)]
mod tests {
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::ingest::{CodedVariable, VariableKind};

    fn coded(cols: Vec<(Vec<u32>, usize)>) -> CodedMatrix {
        let n = cols[0].0.len();
        CodedMatrix {
            ids: (0..n).map(|i| i.to_string()).collect(),
            variables: cols
                .into_iter()
                .enumerate()
                .map(|(j, (codes, k))| CodedVariable {
                    name: format!("v{j}"),
                    kind: VariableKind::Nominal,
                    codes,
                    labels: (1..=k).map(|l| l.to_string()).collect(),
                })
                .collect(),
        }
    }

    #[test]
    fn small_column() {
        let e = expand_indicators(&coded(vec![(vec![1, 2, 1], 2)])).unwrap();
        let g = e.blocks[0].dense();
        assert_eq!(g, DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 1.0, 1.0, 0.0]));
        assert_eq!(e.blocks[0].counts, vec![2.0, 1.0]);
    }

    #[test]
    fn single_record() {
        let e = expand_indicators(&coded(vec![(vec![1], 1), (vec![1], 1)])).unwrap();
        for b in &e.blocks {
            assert_eq!(b.dense(), DMatrix::from_element(1, 1, 1.0));
        }
    }

    #[test]
    fn zero_frequency_level_is_internal_error() {
        let err = expand_indicators(&coded(vec![(vec![1, 1], 2)])).unwrap_err();
        assert!(matches!(err, Error::Internal(_)));
    }

    #[test]
    fn counts_sum_to_n() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let cols = (0..3)
            .map(|_| {
                let k = 4;
                let mut codes: Vec<u32> = (0..50).map(|_| rng.random_range(1..=k)).collect();
                // make sure every level occurs
                for l in 1..=k {
                    codes[l as usize] = l;
                }
                (codes, k as usize)
            })
            .collect();
        let e = expand_indicators(&coded(cols)).unwrap();
        for b in &e.blocks {
            // counting oracle on the dense matrix
            let g = b.dense();
            for i in 0..50 {
                assert_eq!(g.row(i).sum(), 1.0);
            }
            for c in 0..b.level_count() {
                assert_eq!(g.column(c).sum(), b.counts[c]);
            }
            assert_eq!(b.counts.iter().sum::<f64>(), 50.0);
        }
    }
}
