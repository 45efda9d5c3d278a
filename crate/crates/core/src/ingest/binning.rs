use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{CodedMatrix, CodedVariable, ColumnRole, MixedTable, VariableKind};
use crate::error::{Error, Result};

/// Name under which the bundled scheme can be referenced from config files.
pub const DEFAULT_SCHEME_NAME: &str = "table2.default";

const DEFAULT_SCHEME: &str = include_str!("../../schemes/table2.default.toml");

/// Half-open interval edges for one ratio variable.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VariableBins {
    pub name: String,
    pub breakpoints: Vec<f64>,
}

impl VariableBins {
    pub fn level_count(&self) -> usize {
        self.breakpoints.len() + 1
    }

    /// 1-based level of a non-negative ratio.
    pub fn level_of(&self, ratio: f64) -> u32 {
        self.breakpoints.partition_point(|&b| b <= ratio) as u32 + 1
    }

    pub fn labels(&self) -> Vec<String> {
        let mut lo = 0.0;
        let mut labels = Vec::with_capacity(self.level_count());
        for &b in &self.breakpoints {
            labels.push(format!("[{lo},{b})"));
            lo = b;
        }
        labels.push(format!("[{lo},inf)"));
        labels
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BinningScheme {
    #[serde(rename = "variable")]
    pub variables: Vec<VariableBins>,
}

impl BinningScheme {
    /// The bundled default scheme.
    pub fn table2_default() -> Self {
        Self::from_toml(DEFAULT_SCHEME).expect("bundled scheme is valid")
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let scheme: BinningScheme = toml::from_str(text).map_err(|e| Error::Config(format!("binning scheme: {e}")))?;
        scheme.validate()?;
        Ok(scheme)
    }

    /// Resolves a scheme reference: the bundled name or a file path.
    pub fn resolve(reference: &str, base_dir: Option<&Path>) -> Result<Self> {
        if reference == DEFAULT_SCHEME_NAME {
            return Ok(Self::table2_default());
        }
        let path = match base_dir {
            Some(dir) if Path::new(reference).is_relative() => dir.join(reference),
            _ => Path::new(reference).to_path_buf(),
        };
        let text = std::fs::read_to_string(&path)
            .map_err(|e| Error::Config(format!("binning scheme {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> Result<()> {
        for v in &self.variables {
            if v.breakpoints.iter().any(|b| !b.is_finite() || *b <= 0.0) {
                return Err(Error::Config(format!("scheme `{}`: breakpoints must be finite and positive", v.name)));
            }
            if v.breakpoints.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::Config(format!("scheme `{}`: breakpoints must be strictly increasing", v.name)));
            }
        }
        Ok(())
    }

    pub fn get(&self, name: &str) -> Option<&VariableBins> {
        self.variables.iter().find(|v| v.name == name)
    }
}

#[derive(Clone, Debug)]
pub struct BinOutput {
    pub coded: CodedMatrix,
    /// One message per pruned level.
    pub warnings: Vec<String>,
}

/// Codes every clustering ratio as an ordinal variable and every categorical
/// column as a nominal one. Levels that never occur are dropped and the
/// remaining ones renumbered, keeping their order.
pub fn bin_continuous(table: &MixedTable, scheme: &BinningScheme) -> Result<BinOutput> {
    let mut variables = Vec::new();
    let mut warnings = Vec::new();
    for col in table.columns_with_role(ColumnRole::ContinuousRatio) {
        let bins = scheme
            .get(&col.name)
            .ok_or_else(|| Error::Config(format!("no binning scheme for variable `{}`", col.name)))?;
        let codes = col
            .values
            .iter()
            .map(|&r| {
                if r.is_finite() && r >= 0.0 {
                    Ok(bins.level_of(r))
                } else {
                    Err(Error::Input(format!("variable `{}`: ratio {r} cannot be binned", col.name)))
                }
            })
            .collect::<Result<Vec<_>>>()?;
        variables.push(prune(col.name.clone(), VariableKind::Ordinal, codes, bins.labels(), &mut warnings));
    }
    for col in &table.categorical {
        let codes = col
            .values
            .iter()
            .map(|v| {
                col.levels
                    .iter()
                    .position(|l| l == v)
                    .map(|p| p as u32 + 1)
                    .ok_or_else(|| Error::Input(format!("variable `{}`: undeclared level `{v}`", col.name)))
            })
            .collect::<Result<Vec<_>>>()?;
        variables.push(prune(col.name.clone(), VariableKind::Nominal, codes, col.levels.clone(), &mut warnings));
    }
    for w in &warnings {
        log::warn!("{w}");
    }
    let coded = CodedMatrix {
        ids: table.ids.clone(),
        variables,
    };
    coded.validate()?;
    Ok(BinOutput { coded, warnings })
}

fn prune(name: String, kind: VariableKind, mut codes: Vec<u32>, labels: Vec<String>, warnings: &mut Vec<String>) -> CodedVariable {
    let mut used = vec![false; labels.len()];
    for &c in &codes {
        used[c as usize - 1] = true;
    }
    if used.iter().all(|u| *u) {
        return CodedVariable { name, kind, codes, labels };
    }
    let mut renumber = vec![0u32; labels.len()];
    let mut kept = Vec::new();
    for (i, label) in labels.into_iter().enumerate() {
        if used[i] {
            kept.push(label);
            renumber[i] = kept.len() as u32;
        } else {
            warnings.push(format!("variable `{name}`: level {} `{label}` never occurs and was dropped", i + 1));
        }
    }
    for c in &mut codes {
        *c = renumber[*c as usize - 1];
    }
    CodedVariable {
        name,
        kind,
        codes,
        labels: kept,
    }
}
