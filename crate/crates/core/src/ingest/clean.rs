use std::collections::{BTreeSet, HashSet};

use serde::{Deserialize, Serialize};

use super::{CategoricalColumn, ColumnRole, MixedTable, NumericColumn, RawRecord, TableSchema};
use crate::error::{Error, Result};

/// Removal counts per reason. Reasons are checked in the listed order and a
/// record is counted under the first one that applies.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CleaningLog {
    pub input: usize,
    pub duplicates: usize,
    pub missing_id: usize,
    pub no_spending: usize,
    pub bad_income: usize,
    pub missing_categorical: usize,
    pub retained: usize,
}

/// Deduplicates and filters raw records into a [`MixedTable`] of amounts
/// and categorical levels.
///
/// Duplicate ids keep their first occurrence. A record is dropped when it
/// has no spending information at all, when income is missing or not
/// positive, or when a categorical field is missing. Spending and debt types
/// absent from a retained record count as zero.
pub fn clean(records: &[RawRecord], schema: &TableSchema) -> Result<(MixedTable, CleaningLog)> {
    let mut log = CleaningLog {
        input: records.len(),
        ..CleaningLog::default()
    };
    let mut seen = HashSet::with_capacity(records.len());
    let mut kept: Vec<&RawRecord> = Vec::with_capacity(records.len());
    for rec in records {
        if !rec.id.is_empty() && !seen.insert(rec.id.as_str()) {
            log.duplicates += 1;
            continue;
        }
        if rec.id.is_empty() {
            log.missing_id += 1;
        } else if rec.spend_amounts.is_empty() {
            log.no_spending += 1;
        } else if !rec.income.is_some_and(|v| v > 0.0) {
            log.bad_income += 1;
        } else if schema
            .categorical
            .iter()
            .any(|c| rec.categorical_fields.get(&c.name).is_none_or(|v| v.is_empty()))
        {
            log.missing_categorical += 1;
        } else {
            kept.push(rec);
        }
    }
    log.retained = kept.len();
    if kept.is_empty() {
        return Err(Error::Input(format!("no records left after cleaning ({log:?})")));
    }

    let amount = |name: &str, values: Vec<f64>| NumericColumn {
        name: name.to_string(),
        role: ColumnRole::Amount,
        values,
    };
    let mut numeric = vec![amount(&schema.income, kept.iter().map(|r| r.income.unwrap_or(0.0)).collect())];
    for s in &schema.spending {
        numeric.push(amount(s, kept.iter().map(|r| r.spend_amounts.get(s).copied().unwrap_or(0.0)).collect()));
    }
    for d in &schema.debts {
        numeric.push(amount(d, kept.iter().map(|r| r.debt_amounts.get(d).copied().unwrap_or(0.0)).collect()));
    }
    let categorical = schema
        .categorical
        .iter()
        .map(|field| {
            let values: Vec<String> = kept.iter().map(|r| r.categorical_fields[&field.name].clone()).collect();
            let mut levels = field.levels.clone();
            let declared: HashSet<&str> = levels.iter().map(String::as_str).collect();
            let extra: BTreeSet<&str> = values.iter().map(String::as_str).filter(|v| !declared.contains(v)).collect();
            levels.extend(extra.into_iter().map(str::to_string));
            CategoricalColumn {
                name: field.name.clone(),
                levels,
                values,
            }
        })
        .collect();

    let table = MixedTable {
        ids: kept.iter().map(|r| r.id.clone()).collect(),
        numeric,
        categorical,
    };
    Ok((table, log))
}

impl MixedTable {
    /// Turns the amount and categorical columns back into raw records.
    pub fn to_raw_records(&self, schema: &TableSchema) -> Vec<RawRecord> {
        let get = |name: &str, i: usize| self.numeric_column(name).map(|c| c.values[i]);
        (0..self.len())
            .map(|i| RawRecord {
                id: self.ids[i].clone(),
                income: get(&schema.income, i),
                spend_amounts: schema.spending.iter().filter_map(|s| Some((s.clone(), get(s, i)?))).collect(),
                debt_amounts: schema.debts.iter().filter_map(|s| Some((s.clone(), get(s, i)?))).collect(),
                categorical_fields: self.categorical.iter().map(|c| (c.name.clone(), c.values[i].clone())).collect(),
                missing: Vec::new(),
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeMap;

    use proptest::prelude::*;

    use super::*;
    use crate::ingest::CategoricalField;

    fn schema() -> TableSchema {
        TableSchema {
            id: "id".into(),
            income: "income".into(),
            spending: vec!["food".into(), "housing".into()],
            debts: vec!["card".into()],
            categorical: vec![CategoricalField {
                name: "hstatus".into(),
                levels: vec!["renter".into(), "owner".into()],
            }],
        }
    }

    fn rec(id: &str, income: Option<f64>, food: Option<f64>, housing: Option<f64>, h: Option<&str>) -> RawRecord {
        let mut spend = BTreeMap::new();
        if let Some(f) = food {
            spend.insert("food".to_string(), f);
        }
        if let Some(f) = housing {
            spend.insert("housing".to_string(), f);
        }
        RawRecord {
            id: id.into(),
            income,
            spend_amounts: spend,
            debt_amounts: BTreeMap::new(),
            categorical_fields: h.map(|h| [("hstatus".to_string(), h.to_string())].into()).unwrap_or_default(),
            missing: vec![],
        }
    }

    #[test]
    fn duplicates_keep_first_occurrence() {
        let recs = vec![
            rec("a", Some(100.0), Some(10.0), None, Some("renter")),
            rec("a", Some(999.0), Some(10.0), None, Some("owner")),
        ];
        let (t, log) = clean(&recs, &schema()).unwrap();
        assert_eq!(log.duplicates, 1);
        assert_eq!(t.len(), 1);
        assert_eq!(t.numeric_column("income").unwrap().values, vec![100.0]);
        assert_eq!(t.categorical_column("hstatus").unwrap().values, vec!["renter"]);
    }

    #[test]
    fn no_spending_is_dropped() {
        let recs = vec![
            rec("a", Some(100.0), None, None, Some("renter")),
            rec("b", Some(100.0), Some(1.0), None, Some("renter")),
        ];
        let (t, log) = clean(&recs, &schema()).unwrap();
        assert_eq!(log.no_spending, 1);
        assert_eq!(t.ids, vec!["b"]);
        // absent spending type of a retained record counts as zero
        assert_eq!(t.numeric_column("housing").unwrap().values, vec![0.0]);
    }

    #[test]
    fn zero_or_missing_income_is_dropped() {
        let recs = vec![
            rec("a", Some(0.0), Some(1.0), None, Some("renter")),
            rec("b", None, Some(1.0), None, Some("renter")),
            rec("c", Some(5.0), Some(1.0), None, Some("renter")),
        ];
        let (t, log) = clean(&recs, &schema()).unwrap();
        assert_eq!(log.bad_income, 2);
        assert_eq!(t.ids, vec!["c"]);
    }

    #[test]
    fn missing_categorical_is_dropped() {
        let recs = vec![
            rec("a", Some(5.0), Some(1.0), None, None),
            rec("b", Some(5.0), Some(1.0), None, Some("owner")),
        ];
        let (_, log) = clean(&recs, &schema()).unwrap();
        assert_eq!(log.missing_categorical, 1);
        assert_eq!(log.retained, 1);
    }

    #[test]
    fn empty_result_is_an_error() {
        let recs = vec![rec("a", Some(0.0), Some(1.0), None, Some("renter"))];
        assert!(matches!(clean(&recs, &schema()), Err(Error::Input(_))));
    }

    #[test]
    fn undeclared_levels_are_appended_sorted() {
        let recs = vec![
            rec("a", Some(5.0), Some(1.0), None, Some("zz")),
            rec("b", Some(5.0), Some(1.0), None, Some("aa")),
        ];
        let (t, _) = clean(&recs, &schema()).unwrap();
        assert_eq!(t.categorical[0].levels, vec!["renter", "owner", "aa", "zz"]);
    }

    fn arb_record() -> impl Strategy<Value = RawRecord> {
        (
            0u8..6,
            prop::option::of(0.0f64..100.0),
            prop::option::of(0.0f64..50.0),
            prop::option::of(0.0f64..50.0),
            prop::option::of(prop::sample::select(vec!["renter", "owner"])),
        )
            .prop_map(|(id, inc, f, h, s)| rec(&format!("r{id}"), inc, f, h, s))
    }

    proptest! {
        #[test]
        fn cleaning_is_idempotent(recs in prop::collection::vec(arb_record(), 1..30)) {
            let s = schema();
            if let Ok((once, _)) = clean(&recs, &s) {
                let (twice, log) = clean(&once.to_raw_records(&s), &s).unwrap();
                prop_assert_eq!(&once, &twice);
                prop_assert_eq!(log.retained, log.input);
            }
        }
    }
}
