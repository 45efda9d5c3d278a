use std::collections::HashMap;

use proptest::prelude::*;
use segprof::ingest::{CategoricalColumn, ColumnRole, MixedTable, NumericColumn};
use segprof::profiling::{build_report, cluster_means, level_frequencies, lift, ProfileOptions};

const LEVELS: [&str; 4] = ["a", "b", "c", "d"];

/// Table with one ratio and one categorical column plus labels covering 1..=k.
fn table_and_labels() -> impl Strategy<Value = (MixedTable, Vec<u32>)> {
    (2usize..5, 6usize..60).prop_flat_map(|(k, n)| {
        (
            proptest::collection::vec(0.0f64..5.0, n),
            proptest::collection::vec(0usize..LEVELS.len(), n),
            proptest::collection::vec(1u32..=k as u32, n),
        )
            .prop_map(move |(values, cats, mut labels)| {
                for (i, l) in labels.iter_mut().take(k).enumerate() {
                    *l = i as u32 + 1;
                }
                let table = MixedTable {
                    ids: (0..n).map(|i| format!("r{i}")).collect(),
                    numeric: vec![NumericColumn { name: "Ratio".into(), role: ColumnRole::ContinuousRatio, values }],
                    categorical: vec![CategoricalColumn {
                        name: "Cat".into(),
                        levels: LEVELS.iter().map(|s| s.to_string()).collect(),
                        values: cats.iter().map(|&c| LEVELS[c].to_string()).collect(),
                    }],
                };
                (table, labels)
            })
    })
}

proptest! {
    #[test]
    fn means_match_group_by((table, labels) in table_and_labels()) {
        let rows = cluster_means(&table, &labels, &["Ratio".to_string()]).unwrap();
        let values = &table.numeric[0].values;
        let mut groups: HashMap<u32, Vec<f64>> = HashMap::new();
        for (v, l) in values.iter().zip(&labels) {
            groups.entry(*l).or_default().push(*v);
        }
        for (c, got) in rows[0].by_cluster.iter().enumerate() {
            let g = &groups[&(c as u32 + 1)];
            let expect = g.iter().sum::<f64>() / g.len() as f64;
            prop_assert!((got - expect).abs() < 1e-12);
        }
        let overall = values.iter().sum::<f64>() / values.len() as f64;
        prop_assert!((rows[0].overall - overall).abs() < 1e-12);
    }

    #[test]
    fn frequencies_match_counting((table, labels) in table_and_labels()) {
        let freq = level_frequencies(&table, &labels, "Cat").unwrap();
        let cats = &table.categorical[0].values;
        let present: Vec<&str> = LEVELS.iter().copied().filter(|l| cats.iter().any(|c| c == l)).collect();
        prop_assert_eq!(freq.levels.iter().map(|r| r.level.as_str()).collect::<Vec<_>>(), present.clone());
        prop_assert_eq!(freq.warnings.len(), LEVELS.len() - present.len());
        for row in &freq.levels {
            let at_level: Vec<u32> = cats.iter().zip(&labels).filter(|(c, _)| **c == row.level).map(|(_, l)| *l).collect();
            prop_assert_eq!(row.count, at_level.len());
            for (c, f) in row.frequencies.iter().enumerate() {
                let hits = at_level.iter().filter(|&&l| l == c as u32 + 1).count();
                prop_assert!((f - hits as f64 / at_level.len() as f64).abs() < 1e-12);
            }
            prop_assert!((row.frequencies.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
        prop_assert!((freq.shares.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn lift_is_above_one_exactly_when_frequency_beats_share((table, labels) in table_and_labels()) {
        let report = build_report(&table, &labels, &ProfileOptions::default()).unwrap();
        let freq = &report.frequencies[0];
        for (row, lifts) in freq.levels.iter().zip(&report.lifts[0].lift) {
            for ((f, s), l) in row.frequencies.iter().zip(&freq.shares).zip(lifts) {
                prop_assert_eq!(*l > 1.0, f > s);
                prop_assert_eq!(*l < 1.0, f < s);
            }
            // share-weighted lifts of one level add up to one
            let weighted: f64 = lifts.iter().zip(&freq.shares).map(|(l, s)| l * s).sum();
            prop_assert!((weighted - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn lift_scales_inversely_with_share(f in 0.0f64..1.0, s in 0.01f64..1.0) {
        let l = lift(&[f], &[s]).unwrap()[0];
        prop_assert!((l * s - f).abs() < 1e-12);
    }
}

#[test]
fn zero_share_is_rejected() {
    assert!(lift(&[0.2, 0.8], &[0.0, 1.0]).is_err());
    assert!(lift(&[0.2], &[0.5, 0.5]).is_err());
}
