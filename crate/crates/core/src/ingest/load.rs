use std::collections::BTreeMap;
use std::io::Read;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Column declaration of a raw input table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TableSchema {
    pub id: String,
    pub income: String,
    pub spending: Vec<String>,
    #[serde(default)]
    pub debts: Vec<String>,
    #[serde(default)]
    pub categorical: Vec<CategoricalField>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CategoricalField {
    pub name: String,
    /// Optional level order; observed levels not listed here are appended
    /// in sorted order.
    #[serde(default)]
    pub levels: Vec<String>,
}

impl TableSchema {
    fn declared_columns(&self) -> impl Iterator<Item = &str> {
        std::iter::once(self.id.as_str())
            .chain(std::iter::once(self.income.as_str()))
            .chain(self.spending.iter().map(String::as_str))
            .chain(self.debts.iter().map(String::as_str))
            .chain(self.categorical.iter().map(|c| c.name.as_str()))
    }
}

/// One input row before cleaning.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RawRecord {
    pub id: String,
    /// Annual income.
    pub income: Option<f64>,
    pub spend_amounts: BTreeMap<String, f64>,
    pub debt_amounts: BTreeMap<String, f64>,
    pub categorical_fields: BTreeMap<String, String>,
    /// Declared columns whose cell was empty or unparseable.
    pub missing: Vec<String>,
}

/// Reads a delimited table with a header row into raw records.
///
/// Empty, non-numeric, negative or non-finite amounts become missing cells;
/// only a header lacking a declared column is an error.
pub fn load_table<R: Read>(source: R, schema: &TableSchema, delimiter: u8) -> Result<Vec<RawRecord>> {
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(delimiter)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(source);
    let headers = reader.headers()?.clone();
    let position = |name: &str| headers.iter().position(|h| h == name);

    let absent: Vec<&str> = schema.declared_columns().filter(|c| position(c).is_none()).collect();
    if !absent.is_empty() {
        return Err(Error::Schema(format!("header is missing declared column(s): {}", absent.join(", "))));
    }
    let col = |name: &str| position(name).expect("checked above");
    let id_col = col(&schema.id);
    let income_col = col(&schema.income);
    let spend_cols: Vec<(&str, usize)> = schema.spending.iter().map(|s| (s.as_str(), col(s))).collect();
    let debt_cols: Vec<(&str, usize)> = schema.debts.iter().map(|s| (s.as_str(), col(s))).collect();
    let cat_cols: Vec<(&str, usize)> = schema.categorical.iter().map(|c| (c.name.as_str(), col(&c.name))).collect();

    let mut records = Vec::new();
    for row in reader.records() {
        let row = row?;
        let cell = |i: usize| row.get(i).unwrap_or("");
        let mut rec = RawRecord {
            id: cell(id_col).to_string(),
            ..RawRecord::default()
        };
        match parse_amount(cell(income_col)) {
            Some(v) => rec.income = Some(v),
            None => rec.missing.push(schema.income.clone()),
        }
        for &(name, i) in &spend_cols {
            match parse_amount(cell(i)) {
                Some(v) => {
                    rec.spend_amounts.insert(name.to_string(), v);
                }
                None => rec.missing.push(name.to_string()),
            }
        }
        for &(name, i) in &debt_cols {
            match parse_amount(cell(i)) {
                Some(v) => {
                    rec.debt_amounts.insert(name.to_string(), v);
                }
                None => rec.missing.push(name.to_string()),
            }
        }
        for &(name, i) in &cat_cols {
            let v = cell(i);
            if v.is_empty() {
                rec.missing.push(name.to_string());
            } else {
                rec.categorical_fields.insert(name.to_string(), v.to_string());
            }
        }
        records.push(rec);
    }
    Ok(records)
}

fn parse_amount(s: &str) -> Option<f64> {
    s.parse::<f64>().ok().filter(|v| v.is_finite() && *v >= 0.0)
}
