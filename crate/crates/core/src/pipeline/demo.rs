//! Synthetic household survey with three planted segments.
//!
//! Each clean record belongs to one segment. Its spending-to-income and
//! debt-to-income ratios are log-normal around the segment's median
//! ([`SEGMENTS`]) with log-scale spread [`RATIO_SPREAD`]; amounts are
//! `ratio × income` rounded to cents. Categorical fields are drawn from
//! segment-specific level probabilities. After the clean records come
//! dirty rows that cleaning removes: repeated ids, rows with no spending,
//! rows with blank or zero income and rows lacking a categorical value.

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal, Normal};

use crate::error::Result;

pub const SPENDING: [&str; 6] = ["clothing", "food", "services", "housing", "motoring", "leisure"];
pub const DEBTS: [&str; 3] = ["mortgage", "personal_loan", "credit_card"];
pub const FAMILY: [&str; 4] = ["single-no-dependents", "single-with-dependents", "couple-no-dependents", "couple-with-dependents"];
pub const EMPLOYMENT: [&str; 4] = ["employed", "self-employed", "unemployed", "retired"];
pub const HOUSING: [&str; 4] = ["owner-outright", "owner-mortgage", "tenant", "with-family"];

/// Default log-scale standard deviation of every ratio around its segment median.
pub const RATIO_SPREAD: f64 = 0.2;

pub struct Segment {
    pub name: &'static str,
    pub share: f64,
    /// Median spending ratios, in [`SPENDING`] order.
    pub spending: [f64; 6],
    /// Median ratio of each debt type, in [`DEBTS`] order.
    pub debts: [f64; 3],
    pub family: [f64; 4],
    pub employment: [f64; 4],
    pub housing: [f64; 4],
}

pub const SEGMENTS: [Segment; 3] = [
    Segment {
        name: "comfortable",
        share: 0.35,
        spending: [0.010, 0.090, 0.025, 0.120, 0.030, 0.008],
        debts: [0.15, 0.03, 0.02],
        family: [0.04, 0.02, 0.88, 0.06],
        employment: [0.06, 0.04, 0.02, 0.88],
        housing: [0.90, 0.06, 0.03, 0.01],
    },
    Segment {
        name: "stretched",
        share: 0.40,
        spending: [0.022, 0.160, 0.055, 0.290, 0.120, 0.022],
        debts: [0.85, 0.15, 0.10],
        family: [0.03, 0.04, 0.05, 0.88],
        employment: [0.88, 0.07, 0.03, 0.02],
        housing: [0.03, 0.90, 0.05, 0.02],
    },
    Segment {
        name: "distressed",
        share: 0.25,
        spending: [0.045, 0.290, 0.120, 0.550, 0.250, 0.045],
        debts: [2.60, 0.90, 0.50],
        family: [0.10, 0.80, 0.05, 0.05],
        employment: [0.08, 0.04, 0.86, 0.02],
        housing: [0.02, 0.04, 0.88, 0.06],
    },
];

#[derive(Clone, Debug, PartialEq)]
pub struct DemoOptions {
    /// Records that survive cleaning.
    pub records: usize,
    pub seed: u64,
    /// Dirty rows appended per removal reason.
    pub dirty_per_reason: usize,
    /// Log-scale spread of the ratios around their segment medians.
    pub ratio_spread: f64,
}

impl Default for DemoOptions {
    fn default() -> Self {
        DemoOptions { records: 5000, seed: 7, dirty_per_reason: 25, ratio_spread: RATIO_SPREAD }
    }
}

/// Header of the generated table.
pub fn header() -> Vec<String> {
    let mut h = vec!["id".to_string(), "income".to_string()];
    h.extend(SPENDING.iter().chain(DEBTS.iter()).map(|s| s.to_string()));
    h.extend(["family", "employment", "housing_status"].map(String::from));
    h
}

/// Generates the table as delimited text, together with the planted
/// segment (0-based) of each clean record.
pub fn generate(opts: &DemoOptions) -> Result<(String, Vec<usize>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let income_dist = LogNormal::new(30_000f64.ln(), 0.4).expect("valid parameters");
    let noise = Normal::new(0.0, opts.ratio_spread).expect("valid parameters");
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer.write_record(header())?;

    let mut segments = Vec::with_capacity(opts.records);
    let mut rows: Vec<Vec<String>> = Vec::with_capacity(opts.records);
    for i in 0..opts.records {
        let s = pick_segment(&mut rng);
        let seg = &SEGMENTS[s];
        let income = income_dist.sample(&mut rng).round().max(1000.0);
        let mut row = vec![format!("H{:05}", i + 1), format!("{income:.0}")];
        for &median in seg.spending.iter().chain(seg.debts.iter()) {
            let ratio = median * noise.sample(&mut rng).exp();
            row.push(format!("{:.2}", ratio * income));
        }
        row.push(pick(&mut rng, &FAMILY, &seg.family).into());
        row.push(pick(&mut rng, &EMPLOYMENT, &seg.employment).into());
        row.push(pick(&mut rng, &HOUSING, &seg.housing).into());
        segments.push(s);
        rows.push(row);
    }
    for row in &rows {
        writer.write_record(row)?;
    }

    let width = header().len();
    let mut dirty = 0;
    let mut next_id = || {
        dirty += 1;
        format!("X{dirty:05}")
    };
    for r in 0..opts.dirty_per_reason {
        // a later row reusing an earlier id
        let mut dup = rows[rng.random_range(0..rows.len())].clone();
        dup[1] = format!("{}", rng.random_range(10_000..90_000));
        writer.write_record(&dup)?;

        let mut no_spend = rows[r % rows.len()].clone();
        no_spend[0] = next_id();
        for cell in &mut no_spend[2..2 + SPENDING.len()] {
            cell.clear();
        }
        writer.write_record(&no_spend)?;

        let mut bad_income = rows[(r * 7) % rows.len()].clone();
        bad_income[0] = next_id();
        bad_income[1] = if r % 2 == 0 { String::new() } else { "0".into() };
        writer.write_record(&bad_income)?;

        let mut no_cat = rows[(r * 13) % rows.len()].clone();
        no_cat[0] = next_id();
        no_cat[width - 1 - (r % 3)] = String::new();
        writer.write_record(&no_cat)?;
    }
    let bytes = writer.into_inner().map_err(|e| crate::Error::Io(e.into_error()))?;
    Ok((String::from_utf8(bytes).expect("generator writes UTF-8"), segments))
}

/// Pipeline config for a generated table stored at `data_file`, relative
/// to the config's own directory.
pub fn config_toml(data_file: &str) -> String {
    format!(
        r#"seed = 20140516

[input]
path = "{data_file}"
delimiter = ","

[schema]
id = "id"
income = "income"
spending = ["clothing", "food", "services", "housing", "motoring", "leisure"]
debts = ["mortgage", "personal_loan", "credit_card"]

[[schema.categorical]]
name = "family"
levels = ["single-no-dependents", "single-with-dependents", "couple-no-dependents", "couple-with-dependents"]

[[schema.categorical]]
name = "employment"
levels = ["employed", "self-employed", "unemployed", "retired"]

[[schema.categorical]]
name = "housing_status"
levels = ["owner-outright", "owner-mortgage", "tenant", "with-family"]

[[ratios]]
name = "ClothingInc"
numerators = ["clothing"]

[[ratios]]
name = "FoodInc"
numerators = ["food"]

[[ratios]]
name = "ServicesInc"
numerators = ["services"]

[[ratios]]
name = "HousingInc"
numerators = ["housing"]

[[ratios]]
name = "MotoringInc"
numerators = ["motoring"]

[[ratios]]
name = "LeisureInc"
numerators = ["leisure"]

[[ratios]]
name = "TDebtInc"
numerators = ["mortgage", "personal_loan", "credit_card"]

[[ratios]]
name = "MortgageInc"
numerators = ["mortgage"]
supplementary = true

[[ratios]]
name = "LoanInc"
numerators = ["personal_loan"]
supplementary = true

[[ratios]]
name = "CardInc"
numerators = ["credit_card"]
supplementary = true

[binning]
scheme = "table2.default"

[scaling]
dimensions = 2
restarts = 5

[sweep]
methods = ["kmeans", "pam", "clara", "fanny"]
k_min = 2
k_max = 8

[output]
dir = "../runs/demo"
"#
    )
}

fn pick_segment(rng: &mut ChaCha8Rng) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (s, seg) in SEGMENTS.iter().enumerate() {
        acc += seg.share;
        if u < acc {
            return s;
        }
    }
    SEGMENTS.len() - 1
}

fn pick<'a>(rng: &mut ChaCha8Rng, levels: &[&'a str], probs: &[f64]) -> &'a str {
    let choices: Vec<(usize, f64)> = probs.iter().copied().enumerate().collect();
    let (i, _) = choices.choose_weighted(rng, |c| c.1).expect("positive weights");
    levels[*i]
}
