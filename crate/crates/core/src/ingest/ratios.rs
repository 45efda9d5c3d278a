use serde::{Deserialize, Serialize};

use super::{ColumnRole, MixedTable, NumericColumn};
use crate::error::{Error, Result};

/// A ratio column: the sum of `numerators` divided by income.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RatioSpec {
    pub name: String,
    pub numerators: Vec<String>,
    /// Supplementary ratios are profiled but never clustered.
    #[serde(default)]
    pub supplementary: bool,
}

/// Appends one ratio column per spec, `sum(numerators) / income`.
pub fn compute_ratios(table: &MixedTable, income_field: &str, specs: &[RatioSpec]) -> Result<MixedTable> {
    let income = table
        .numeric_column(income_field)
        .ok_or_else(|| Error::Config(format!("unknown income field `{income_field}`")))?;
    if let Some(v) = income.values.iter().find(|v| !(**v > 0.0)) {
        return Err(Error::contract(format!("income must be positive, found {v}")));
    }
    let mut out = table.clone();
    for spec in specs {
        if out.has_column(&spec.name) {
            return Err(Error::Config(format!("ratio `{}` clashes with an existing column", spec.name)));
        }
        if spec.numerators.is_empty() {
            return Err(Error::Config(format!("ratio `{}` has no numerator", spec.name)));
        }
        let cols = spec
            .numerators
            .iter()
            .map(|f| {
                table
                    .numeric_column(f)
                    .filter(|c| c.role == ColumnRole::Amount)
                    .ok_or_else(|| Error::Config(format!("ratio `{}`: unknown amount field `{f}`", spec.name)))
            })
            .collect::<Result<Vec<_>>>()?;
        let values = income
            .values
            .iter()
            .enumerate()
            .map(|(i, inc)| cols.iter().map(|c| c.values[i]).sum::<f64>() / inc)
            .collect();
        out.numeric.push(NumericColumn {
            name: spec.name.clone(),
            role: if spec.supplementary {
                ColumnRole::SupplementaryRatio
            } else {
                ColumnRole::ContinuousRatio
            },
            values,
        });
    }
    Ok(out)
}
