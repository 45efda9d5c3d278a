//! Loading, cleaning and transforming raw mixed-type records.
//!
//! Raw rows carry an income, spending amounts by type, debt amounts by type
//! and a few categorical fields. Cleaning removes duplicates and records
//! whose ratios are undefined; [`compute_ratios`] divides amounts by income
//! and [`bin_continuous`] maps each ratio to an ordinal level using a
//! [`BinningScheme`].

mod binning;
mod clean;
mod load;
mod ratios;
mod summary;

use serde::{Deserialize, Serialize};

pub use binning::{bin_continuous, BinOutput, BinningScheme, VariableBins, DEFAULT_SCHEME_NAME};
pub use clean::{clean, CleaningLog};
pub use load::{load_table, CategoricalField, RawRecord, TableSchema};
pub use ratios::{compute_ratios, RatioSpec};
pub use summary::{summarize_continuous, FiveNumberSummary, QUARTILE_CONVENTION};

use crate::error::{Error, Result};

/// Role of a numeric column of a [`MixedTable`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ColumnRole {
    /// Raw currency amount (income, spending or debt).
    Amount,
    /// Ratio used as a clustering input; it must be binned.
    ContinuousRatio,
    /// Ratio kept for profiling only.
    SupplementaryRatio,
}

impl ColumnRole {
    pub fn as_str(self) -> &'static str {
        match self {
            ColumnRole::Amount => "amount",
            ColumnRole::ContinuousRatio => "continuous-ratio",
            ColumnRole::SupplementaryRatio => "supplementary-ratio",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "amount" => Some(ColumnRole::Amount),
            "continuous-ratio" => Some(ColumnRole::ContinuousRatio),
            "supplementary-ratio" => Some(ColumnRole::SupplementaryRatio),
            _ => None,
        }
    }

    pub fn is_ratio(self) -> bool {
        !matches!(self, ColumnRole::Amount)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct NumericColumn {
    pub name: String,
    pub role: ColumnRole,
    pub values: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CategoricalColumn {
    pub name: String,
    /// Declared level order. Empty when the schema did not declare one.
    pub levels: Vec<String>,
    pub values: Vec<String>,
}

/// Cleaned records stored column by column.
///
/// Row `i` of every column belongs to `ids[i]`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct MixedTable {
    pub ids: Vec<String>,
    pub numeric: Vec<NumericColumn>,
    pub categorical: Vec<CategoricalColumn>,
}

impl MixedTable {
    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn numeric_column(&self, name: &str) -> Option<&NumericColumn> {
        self.numeric.iter().find(|c| c.name == name)
    }

    pub fn categorical_column(&self, name: &str) -> Option<&CategoricalColumn> {
        self.categorical.iter().find(|c| c.name == name)
    }

    pub fn columns_with_role(&self, role: ColumnRole) -> impl Iterator<Item = &NumericColumn> {
        self.numeric.iter().filter(move |c| c.role == role)
    }

    pub fn has_column(&self, name: &str) -> bool {
        name == "id" || self.numeric_column(name).is_some() || self.categorical_column(name).is_some()
    }

    /// Checks the table invariants: unique ids, aligned columns, finite
    /// non-negative ratios.
    pub fn validate(&self) -> Result<()> {
        let n = self.ids.len();
        let mut seen = std::collections::HashSet::with_capacity(n);
        for id in &self.ids {
            if id.is_empty() {
                return Err(Error::Input("empty record id".into()));
            }
            if !seen.insert(id.as_str()) {
                return Err(Error::Input(format!("duplicate record id `{id}`")));
            }
        }
        for col in &self.numeric {
            if col.values.len() != n {
                return Err(Error::Internal(format!("column `{}` has {} rows, expected {n}", col.name, col.values.len())));
            }
            if let Some(v) = col.values.iter().find(|v| !v.is_finite() || **v < 0.0) {
                return Err(Error::Input(format!("column `{}` holds invalid value {v}", col.name)));
            }
        }
        for col in &self.categorical {
            if col.values.len() != n {
                return Err(Error::Internal(format!("column `{}` has {} rows, expected {n}", col.name, col.values.len())));
            }
            if col.values.iter().any(String::is_empty) {
                return Err(Error::Input(format!("column `{}` has missing levels", col.name)));
            }
        }
        Ok(())
    }
}

/// Measurement level of a coded variable.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VariableKind {
    Ordinal,
    Nominal,
}

impl VariableKind {
    pub fn as_str(self) -> &'static str {
        match self {
            VariableKind::Ordinal => "ordinal",
            VariableKind::Nominal => "nominal",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "ordinal" => Some(VariableKind::Ordinal),
            "nominal" => Some(VariableKind::Nominal),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CodedVariable {
    pub name: String,
    pub kind: VariableKind,
    /// Category codes in `1..=labels.len()`.
    pub codes: Vec<u32>,
    pub labels: Vec<String>,
}

impl CodedVariable {
    pub fn level_count(&self) -> usize {
        self.labels.len()
    }
}

/// N records coded on J categorical or categorized variables.
#[derive(Clone, Debug, PartialEq)]
pub struct CodedMatrix {
    pub ids: Vec<String>,
    pub variables: Vec<CodedVariable>,
}

impl CodedMatrix {
    pub fn n_records(&self) -> usize {
        self.ids.len()
    }

    pub fn n_variables(&self) -> usize {
        self.variables.len()
    }

    pub fn level_counts(&self) -> Vec<usize> {
        self.variables.iter().map(CodedVariable::level_count).collect()
    }

    /// Checks that every code is in range and every level is used.
    pub fn validate(&self) -> Result<()> {
        let n = self.ids.len();
        for var in &self.variables {
            if var.codes.len() != n {
                return Err(Error::Internal(format!("variable `{}` has {} codes, expected {n}", var.name, var.codes.len())));
            }
            let k = var.labels.len();
            if k == 0 {
                return Err(Error::Input(format!("variable `{}` has no levels", var.name)));
            }
            let mut used = vec![false; k];
            for &c in &var.codes {
                if c == 0 || c as usize > k {
                    return Err(Error::Input(format!("variable `{}`: code {c} outside 1..={k}", var.name)));
                }
                used[c as usize - 1] = true;
            }
            if let Some(l) = used.iter().position(|u| !u) {
                return Err(Error::Input(format!("variable `{}`: level {} never occurs", var.name, l + 1)));
            }
        }
        Ok(())
    }
}
