use serde::{Deserialize, Serialize};

use super::{Quantification, ScalingSolution};
use crate::error::{Error, Result};

/// One category placed on the joint map.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CategoryPoint {
    pub variable: String,
    /// 1-based level.
    pub level: usize,
    pub label: String,
    pub coords: Vec<f64>,
    /// Ordinal categories are drawn as an arrow from the first to the last level.
    pub ordinal: bool,
}

/// Rows of every `Y_j` as map coordinates.
pub fn category_points(solution: &ScalingSolution, allow_unconverged: bool) -> Result<Vec<CategoryPoint>> {
    if !solution.converged && !allow_unconverged {
        return Err(Error::contract("scaling did not converge; pass allow_unconverged to plot anyway"));
    }
    let mut points = Vec::new();
    for v in &solution.variables {
        let y = v.quantification.y();
        let ordinal = matches!(v.quantification, Quantification::Ordinal { .. });
        for (l, label) in v.labels.iter().enumerate() {
            points.push(CategoryPoint {
                variable: v.name.clone(),
                level: l + 1,
                label: label.clone(),
                coords: y.row(l).iter().copied().collect(),
                ordinal,
            });
        }
    }
    Ok(points)
}

#[cfg(test)]
mod tests {
    use nalgebra::{DMatrix, DVector};

    use super::*;
    use crate::ingest::{CodedMatrix, CodedVariable, VariableKind};
    use crate::scaling::{homals_fit, HomalsOptions, VariableQuantification};

    fn solution_with(q: Quantification) -> ScalingSolution {
        ScalingSolution {
            ids: vec![],
            x: DMatrix::zeros(0, 2),
            variables: vec![VariableQuantification {
                name: "v".into(),
                labels: vec!["a".into(), "b".into(), "c".into()],
                counts: vec![1.0; 3],
                quantification: q,
            }],
            loss_history: vec![0.0],
            converged: true,
            iterations: 1,
            restart: 0,
            seed: 0,
        }
    }

    #[test]
    fn ordinal_points_are_collinear() {
        let sol = solution_with(Quantification::Ordinal {
            o: DVector::from_vec(vec![-1.0, 0.0, 1.0]),
            beta: DVector::from_vec(vec![2.0, 0.0]),
        });
        let pts = category_points(&sol, false).unwrap();
        let coords: Vec<Vec<f64>> = pts.iter().map(|p| p.coords.clone()).collect();
        assert_eq!(coords, vec![vec![-2.0, 0.0], vec![0.0, 0.0], vec![2.0, 0.0]]);
        assert!(pts.iter().all(|p| p.ordinal));
    }

    #[test]
    fn unconverged_needs_permission() {
        let mut sol = solution_with(Quantification::Nominal { y: DMatrix::zeros(3, 2) });
        sol.converged = false;
        assert!(category_points(&sol, false).is_err());
        assert_eq!(category_points(&sol, true).unwrap().len(), 3);
    }

    fn fitted() -> (CodedMatrix, ScalingSolution) {
        let codes = |m: u32| (0..40u32).map(|i| (i * 7 + i / m) % 3 + 1).collect::<Vec<_>>();
        let var = |name: &str, kind, codes| CodedVariable {
            name: name.into(),
            kind,
            codes,
            labels: vec!["x".into(), "y".into(), "z".into()],
        };
        let coded = CodedMatrix {
            ids: (0..40).map(|i| i.to_string()).collect(),
            variables: vec![
                var("a", VariableKind::Nominal, codes(5)),
                var("b", VariableKind::Ordinal, codes(3)),
                var("c", VariableKind::Ordinal, codes(7)),
            ],
        };
        let sol = homals_fit(&coded, &HomalsOptions::default()).unwrap();
        (coded, sol)
    }

    #[test]
    fn nominal_points_are_centroids() {
        let (coded, sol) = fitted();
        let pts = category_points(&sol, false).unwrap();
        for level in 1..=3u32 {
            let members: Vec<usize> = (0..40).filter(|&i| coded.variables[0].codes[i] == level).collect();
            for d in 0..2 {
                let mean = members.iter().map(|&i| sol.x[(i, d)]).sum::<f64>() / members.len() as f64;
                assert!((pts[level as usize - 1].coords[d] - mean).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn weighted_category_means_are_at_origin() {
        let (_, sol) = fitted();
        let pts = category_points(&sol, false).unwrap();
        for (j, v) in sol.variables.iter().enumerate() {
            for d in 0..2 {
                let s: f64 = (0..3).map(|l| v.counts[l] * pts[j * 3 + l].coords[d]).sum();
                assert!(s.abs() < 1e-8, "{} {s}", v.name);
            }
        }
    }
}
