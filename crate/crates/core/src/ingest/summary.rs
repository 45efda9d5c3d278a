use serde::{Deserialize, Serialize};

use super::MixedTable;
use crate::error::{Error, Result};

/// Quartiles are Tukey's hinges: the medians of the lower and upper halves,
/// each half including the overall median when the count is odd.
pub const QUARTILE_CONVENTION: &str = "tukey-hinges";

/// Boxplot statistics of one ratio column.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FiveNumberSummary {
    pub variable: String,
    pub n: usize,
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
    pub lower_fence: f64,
    pub upper_fence: f64,
    pub below_fence: usize,
    pub above_fence: usize,
}

impl FiveNumberSummary {
    pub fn iqr(&self) -> f64 {
        self.q3 - self.q1
    }

    pub fn of(variable: &str, values: &[f64]) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::contract(format!("cannot summarize empty column `{variable}`")));
        }
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        let n = sorted.len();
        let lower = &sorted[..n.div_ceil(2)];
        let upper = &sorted[n / 2..];
        let (q1, q3) = (median(lower), median(upper));
        let lower_fence = q1 - 1.5 * (q3 - q1);
        let upper_fence = q3 + 1.5 * (q3 - q1);
        Ok(FiveNumberSummary {
            variable: variable.to_string(),
            n,
            min: sorted[0],
            q1,
            median: median(&sorted),
            q3,
            max: sorted[n - 1],
            lower_fence,
            upper_fence,
            below_fence: sorted.iter().filter(|v| **v < lower_fence).count(),
            above_fence: sorted.iter().filter(|v| **v > upper_fence).count(),
        })
    }
}

fn median(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
    }
}

/// Five-number summary and 1.5 IQR fences of every ratio column.
pub fn summarize_continuous(table: &MixedTable) -> Result<Vec<FiveNumberSummary>> {
    if table.is_empty() {
        return Err(Error::contract("cannot summarize an empty table"));
    }
    table
        .numeric
        .iter()
        .filter(|c| c.role.is_ratio())
        .map(|c| FiveNumberSummary::of(&c.name, &c.values))
        .collect()
}
