use crate::error::{Error, Result};

/// Weighted isotonic regression by pool-adjacent-violators.
///
/// Returns the non-decreasing `f` minimizing `Σ w_i (v_i − f_i)²`. The fit is
/// constant on pooled runs and each run takes the weighted mean of its
/// values, so the weighted sum of the input is preserved.
pub fn pava(values: &[f64], weights: &[f64]) -> Result<Vec<f64>> {
    if values.is_empty() {
        return Err(Error::contract("pava needs at least one value"));
    }
    if values.len() != weights.len() {
        return Err(Error::contract(format!("{} values but {} weights", values.len(), weights.len())));
    }
    if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w > 0.0)) {
        return Err(Error::contract(format!("pava weights must be positive, got {w}")));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::contract("pava values must be finite"));
    }

    // (weighted sum, total weight, length) per pooled block
    let mut blocks: Vec<(f64, f64, usize)> = Vec::with_capacity(values.len());
    for (&v, &w) in values.iter().zip(weights) {
        blocks.push((v * w, w, 1));
        while blocks.len() > 1 {
            let (s1, w1, _) = blocks[blocks.len() - 2];
            let (s2, w2, _) = blocks[blocks.len() - 1];
            if s1 / w1 <= s2 / w2 {
                break;
            }
            let (_, _, n2) = blocks.pop().expect("len > 1");
            let last = blocks.last_mut().expect("len > 0");
            last.0 += s2;
            last.1 += w2;
            last.2 += n2;
        }
    }
    let mut fitted = Vec::with_capacity(values.len());
    for (s, w, n) in blocks {
        fitted.extend(std::iter::repeat_n(s / w, n));
    }
    Ok(fitted)
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;

    /// Best non-decreasing fit among all contiguous poolings.
    fn pooling_oracle(v: &[f64], w: &[f64]) -> Vec<f64> {
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
        best.unwrap().1
    }

    #[test]
    fn already_monotone() {
        assert_eq!(pava(&[1.0, 2.0, 3.0], &[1.0; 3]).unwrap(), vec![1.0, 2.0, 3.0]);
    }

    #[test]
    fn full_pool() {
        assert_eq!(pava(&[3.0, 1.0, 2.0], &[1.0; 3]).unwrap(), vec![2.0, 2.0, 2.0]);
        assert_eq!(pooling_oracle(&[3.0, 1.0, 2.0], &[1.0; 3]), vec![2.0, 2.0, 2.0]);
    }

    #[test]
    fn weighted_pool() {
        let f = pava(&[1.0, 3.0, 2.0], &[1.0, 1.0, 2.0]).unwrap();
        let o = pooling_oracle(&[1.0, 3.0, 2.0], &[1.0, 1.0, 2.0]);
        for (a, b) in f.iter().zip([1.0, 7.0 / 3.0, 7.0 / 3.0]) {
            assert!((a - b).abs() < 1e-15);
        }
        assert_eq!(f, o);
    }

    #[test]
    fn contract_errors() {
        assert!(pava(&[], &[]).is_err());
        assert!(pava(&[1.0], &[0.0]).is_err());
        assert!(pava(&[1.0, 2.0], &[1.0]).is_err());
    }

    proptest! {
        #[test]
        fn matches_pooling_oracle(
            vw in prop::collection::vec((-10.0f64..10.0, 1u32..9, 1u32..5), 1..8)
        ) {
            let v: Vec<f64> = vw.iter().map(|t| t.0).collect();
            let w: Vec<f64> = vw.iter().map(|t| t.1 as f64 / t.2 as f64).collect();
            let f = pava(&v, &w).unwrap();
            prop_assert!(f.windows(2).all(|p| p[0] <= p[1]));
            for (a, b) in f.iter().zip(pooling_oracle(&v, &w)) {
                prop_assert!((a - b).abs() < 1e-9);
            }
            let s_in: f64 = v.iter().zip(&w).map(|(a, b)| a * b).sum();
            let s_out: f64 = f.iter().zip(&w).map(|(a, b)| a * b).sum();
            prop_assert!((s_in - s_out).abs() < 1e-9);
        }
    }
}
