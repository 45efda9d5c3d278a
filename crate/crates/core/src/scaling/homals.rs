use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::indicator::{expand_indicators, IndicatorBlock, IndicatorExpansion};
use super::loss::residual;
use super::orthonormalize::orthonormalize;
use super::pava::pava;
use crate::error::{Error, Result};
use crate::ingest::{CodedMatrix, VariableKind};
use crate::seed::derive_seed;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HomalsOptions {
    /// Number of dimensions `p`.
    pub dimensions: usize,
    /// Stop once a sweep lowers the loss by less than this.
    pub tolerance: f64,
    /// When set, additionally require the largest change of any object
    /// score over a sweep to fall below this before stopping. The loss is
    /// flat to second order near the optimum, so this is the knob for
    /// accurate scores rather than an accurate loss.
    pub score_tolerance: Option<f64>,
    pub max_iter: usize,
    /// Independent random starts; the lowest final loss wins.
    pub restarts: usize,
    pub seed: u64,
    /// (β, o) alternations per sweep for ordinal variables.
    pub inner_iterations: usize,
}

impl Default for HomalsOptions {
    fn default() -> Self {
        HomalsOptions {
            dimensions: 2,
            tolerance: 1e-8,
            score_tolerance: None,
            max_iter: 1000,
            restarts: 5,
            seed: 20_140_516,
            inner_iterations: 2,
        }
    }
}

/// Category quantifications of one variable.
#[derive(Clone, Debug, PartialEq)]
pub enum Quantification {
    /// Free k×p matrix.
    Nominal { y: DMatrix<f64> },
    /// Rank one: `Y = o β'` with `o` non-decreasing over the levels.
    Ordinal { o: DVector<f64>, beta: DVector<f64> },
}

impl Quantification {
    pub fn y(&self) -> DMatrix<f64> {
        match self {
            Quantification::Nominal { y } => y.clone(),
            Quantification::Ordinal { o, beta } => o * beta.transpose(),
        }
    }

    pub fn kind(&self) -> VariableKind {
        match self {
            Quantification::Nominal { .. } => VariableKind::Nominal,
            Quantification::Ordinal { .. } => VariableKind::Ordinal,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct VariableQuantification {
    pub name: String,
    pub labels: Vec<String>,
    /// Category frequencies (diagonal of `D_j`).
    pub counts: Vec<f64>,
    pub quantification: Quantification,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScalingSolution {
    pub ids: Vec<String>,
    /// N×p object scores.
    pub x: DMatrix<f64>,
    pub variables: Vec<VariableQuantification>,
    /// Loss after the initial category step and after every sweep.
    pub loss_history: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
    /// Index of the winning restart.
    pub restart: usize,
    pub seed: u64,
}

impl ScalingSolution {
    pub fn dimensions(&self) -> usize {
        self.x.ncols()
    }

    pub fn final_loss(&self) -> f64 {
        *self.loss_history.last().expect("history is never empty")
    }
}

/// Fits homogeneity analysis by alternating least squares.
///
/// Each sweep updates the category quantifications for fixed scores and then
/// the scores for fixed quantifications:
///
/// * nominal: `Y_j = D_j⁻¹ G_j' X`;
/// * ordinal: starting from the centroids above, `β_j` and `o_j` alternate,
///   with `o_j` fitted by weighted PAVA (weights `D_j`) and rescaled to
///   `o_j' D_j o_j = N`, `1' D_j o_j = 0`;
/// * scores: `X = orthonormalize((1/J) Σ_j G_j Y_j)`.
///
/// The best of `restarts` random starts is rotated to principal axes and
/// each dimension's sign is fixed so its largest ordinal loading is positive.
pub fn homals_fit(coded: &CodedMatrix, opts: &HomalsOptions) -> Result<ScalingSolution> {
    coded.validate()?;
    let n = coded.n_records();
    let p = opts.dimensions;
    let max_dims: usize = coded.variables.iter().map(|v| v.level_count() - 1).sum();
    if p == 0 || p > max_dims {
        return Err(Error::contract(format!("p = {p} must be in 1..={max_dims}")));
    }
    if n <= p {
        return Err(Error::contract(format!("need more records than dimensions (N = {n}, p = {p})")));
    }
    if opts.restarts == 0 || opts.inner_iterations == 0 {
        return Err(Error::contract("restarts and inner_iterations must be positive"));
    }
    let expansion = expand_indicators(coded)?;
    let kinds: Vec<VariableKind> = coded.variables.iter().map(|v| v.kind).collect();

    let runs: Vec<Result<Run>> = (0..opts.restarts)
        .into_par_iter()
        .map(|r| fit_once(&expansion, &kinds, opts, derive_seed(opts.seed, r as u64)))
        .collect();
    let mut best: Option<(usize, Run)> = None;
    for (r, run) in runs.into_iter().enumerate() {
        let run = run?;
        if best.as_ref().is_none_or(|(_, b)| run.final_loss() < b.final_loss()) {
            best = Some((r, run));
        }
    }
    let (restart, mut run) = best.expect("restarts > 0");
    align_axes(&mut run, &expansion);

    Ok(ScalingSolution {
        ids: coded.ids.clone(),
        x: run.x,
        variables: coded
            .variables
            .iter()
            .zip(expansion.blocks)
            .zip(run.quants)
            .map(|((v, b), q)| VariableQuantification {
                name: v.name.clone(),
                labels: v.labels.clone(),
                counts: b.counts,
                quantification: q,
            })
            .collect(),
        loss_history: run.history,
        converged: run.converged,
        iterations: run.iterations,
        restart,
        seed: opts.seed,
    })
}

struct Run {
    x: DMatrix<f64>,
    quants: Vec<Quantification>,
    history: Vec<f64>,
    converged: bool,
    iterations: usize,
}

impl Run {
    fn final_loss(&self) -> f64 {
        *self.history.last().expect("non-empty")
    }
}

fn fit_once(exp: &IndicatorExpansion, kinds: &[VariableKind], opts: &HomalsOptions, seed: u64) -> Result<Run> {
    let n = exp.n;
    let p = opts.dimensions;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let raw = DMatrix::from_fn(n, p, |_, _| StandardNormal.sample(&mut rng));
    let mut x = orthonormalize(&raw)?;

    let mut quants: Vec<Quantification> = exp
        .blocks
        .iter()
        .zip(kinds)
        .map(|(b, kind)| match kind {
            VariableKind::Nominal => Quantification::Nominal {
                y: DMatrix::zeros(b.level_count(), p),
            },
            VariableKind::Ordinal => Quantification::Ordinal {
                o: initial_ordinal(b, n),
                beta: DVector::zeros(p),
            },
        })
        .collect();
    let mut ys = category_step(&x, exp, &mut quants, opts.inner_iterations);
    let mut history = vec![current_loss(&x, &ys, exp)];

    let mut converged = false;
    let mut iterations = 0;
    while iterations < opts.max_iter {
        iterations += 1;
        let next = orthonormalize(&average_fit(&ys, exp, p))?;
        let moved = (&next - &x).amax();
        x = next;
        ys = category_step(&x, exp, &mut quants, opts.inner_iterations);
        let current = current_loss(&x, &ys, exp);
        let previous = *history.last().expect("non-empty");
        history.push(current);
        if previous - current < opts.tolerance && opts.score_tolerance.is_none_or(|t| moved < t) {
            converged = true;
            break;
        }
    }
    Ok(Run {
        x,
        quants,
        history,
        converged,
        iterations,
    })
}

/// Centered, normalized level index: a monotone starting point for `o`.
fn initial_ordinal(block: &IndicatorBlock, n: usize) -> DVector<f64> {
    let index = DVector::from_fn(block.level_count(), |l, _| l as f64);
    normalize_ordinal(index, &block.counts, n).unwrap_or_else(|| DVector::zeros(block.level_count()))
}

/// Centers `o` under weights `d` and scales it to `o'Do = n`. `None` when
/// `o` is constant.
fn normalize_ordinal(mut o: DVector<f64>, d: &[f64], n: usize) -> Option<DVector<f64>> {
    let total: f64 = d.iter().sum();
    let mean = o.iter().zip(d).map(|(a, w)| a * w).sum::<f64>() / total;
    o.add_scalar_mut(-mean);
    let ss: f64 = o.iter().zip(d).map(|(a, w)| w * a * a).sum();
    if ss > 1e-14 * n as f64 {
        Some(o * (n as f64 / ss).sqrt())
    } else {
        None
    }
}

fn category_step(x: &DMatrix<f64>, exp: &IndicatorExpansion, quants: &mut [Quantification], inner: usize) -> Vec<DMatrix<f64>> {
    let n = exp.n as f64;
    quants
        .iter_mut()
        .zip(&exp.blocks)
        .map(|(q, block)| {
            let centroids = block.centroids(x);
            match q {
                Quantification::Nominal { y } => {
                    *y = centroids;
                    y.clone()
                }
                Quantification::Ordinal { o, beta } => {
                    let weighted = |o: &DVector<f64>| DVector::from_fn(o.len(), |l, _| o[l] * block.counts[l]);
                    *beta = centroids.transpose() * weighted(o) / n;
                    for _ in 0..inner {
                        let bb = beta.dot(beta);
                        if !(bb > 0.0 && bb.is_finite()) {
                            break;
                        }
                        let target = &centroids * &*beta / bb;
                        let fitted = pava(target.as_slice(), &block.counts).expect("weights are category counts");
                        // a fully pooled fit is constant; keep the previous o
                        if let Some(next) = normalize_ordinal(DVector::from_vec(fitted), &block.counts, exp.n) {
                            *o = next;
                        }
                        *beta = centroids.transpose() * weighted(o) / n;
                    }
                    &*o * beta.transpose()
                }
            }
        })
        .collect()
}

fn average_fit(ys: &[DMatrix<f64>], exp: &IndicatorExpansion, p: usize) -> DMatrix<f64> {
    let mut z = DMatrix::zeros(exp.n, p);
    for (y, block) in ys.iter().zip(&exp.blocks) {
        for d in 0..p {
            let mut zc = z.column_mut(d);
            for (i, &c) in block.codes.iter().enumerate() {
                zc[i] += y[(c, d)];
            }
        }
    }
    z / ys.len() as f64
}

fn current_loss(x: &DMatrix<f64>, ys: &[DMatrix<f64>], exp: &IndicatorExpansion) -> f64 {
    ys.iter().zip(&exp.blocks).map(|(y, b)| residual(x, y, &b.codes)).sum::<f64>() / ys.len() as f64
}

/// Rotates to principal axes of `Σ_j Y_j' D_j Y_j` (largest first) and fixes
/// signs. Both leave the loss unchanged.
fn align_axes(run: &mut Run, exp: &IndicatorExpansion) {
    let p = run.x.ncols();
    let mut spread = DMatrix::<f64>::zeros(p, p);
    for (q, block) in run.quants.iter().zip(&exp.blocks) {
        let y = q.y();
        let dy = DMatrix::from_fn(y.nrows(), p, |l, d| y[(l, d)] * block.counts[l]);
        spread += y.transpose() * dy;
    }
    let eig = SymmetricEigen::new(spread);
    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let mut rotation = DMatrix::from_fn(p, p, |r, c| eig.eigenvectors[(r, order[c])]);

    let rotated = |q: &Quantification, rot: &DMatrix<f64>| match q {
        Quantification::Nominal { y } => Quantification::Nominal { y: y * rot },
        Quantification::Ordinal { o, beta } => Quantification::Ordinal {
            o: o.clone(),
            beta: rot.transpose() * beta,
        },
    };
    let quants: Vec<Quantification> = run.quants.iter().map(|q| rotated(q, &rotation)).collect();
    for d in 0..p {
        if sign_anchor(&quants, d) < 0.0 {
            rotation.column_mut(d).neg_mut();
        }
    }
    run.x = &run.x * &rotation;
    run.quants = run.quants.iter().map(|q| rotated(q, &rotation)).collect();
}

/// Largest-magnitude ordinal loading in dimension `d`, or the
/// largest-magnitude nominal quantification when no variable is ordinal.
fn sign_anchor(quants: &[Quantification], d: usize) -> f64 {
    let pick = |acc: f64, v: f64| if v.abs() > acc.abs() { v } else { acc };
    let ordinal = quants
        .iter()
        .filter_map(|q| match q {
            Quantification::Ordinal { beta, .. } => Some(beta[d]),
            Quantification::Nominal { .. } => None,
        })
        .fold(0.0, pick);
    if quants.iter().any(|q| matches!(q, Quantification::Ordinal { .. })) {
        return ordinal;
    }
    quants
        .iter()
        .flat_map(|q| match q {
            Quantification::Nominal { y } => y.column(d).iter().copied().collect::<Vec<_>>(),
            Quantification::Ordinal { .. } => vec![],
        })
        .fold(0.0, pick)
}

#[cfg(test)]
mod tests {
    use rand::{Rng, SeedableRng};

    use super::*;
    use crate::ingest::CodedVariable;
    use crate::scaling::loss;

    pub(crate) fn random_coded(seed: u64, n: usize, ks: &[usize], kind: VariableKind) -> CodedMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        CodedMatrix {
            ids: (0..n).map(|i| format!("r{i}")).collect(),
            variables: ks
                .iter()
                .enumerate()
                .map(|(j, &k)| {
                    let mut codes: Vec<u32> = (0..n).map(|_| rng.random_range(1..=k as u32)).collect();
                    for l in 0..k {
                        codes[l] = l as u32 + 1;
                    }
                    CodedVariable {
                        name: format!("v{j}"),
                        kind,
                        codes,
                        labels: (1..=k).map(|l| l.to_string()).collect(),
                    }
                })
                .collect(),
        }
    }

    fn check_constraints(sol: &ScalingSolution) {
        let n = sol.x.nrows() as f64;
        let p = sol.dimensions();
        let gram = sol.x.transpose() * &sol.x - DMatrix::identity(p, p) * n;
        assert!(gram.amax() <= 1e-8, "X'X − NI = {}", gram.amax());
        assert!(sol.x.row_sum().amax() <= 1e-8);
        for w in sol.loss_history.windows(2) {
            assert!(w[1] - w[0] <= 1e-9, "loss went up: {w:?}");
        }
        for v in &sol.variables {
            if let Quantification::Ordinal { o, .. } = &v.quantification {
                assert!(o.as_slice().windows(2).all(|w| w[0] <= w[1]), "{o:?}");
            }
        }
    }

    #[test]
    fn identical_variables_are_perfectly_homogeneous() {
        let base = random_coded(1, 40, &[4], VariableKind::Ordinal);
        for kind in [VariableKind::Ordinal, VariableKind::Nominal] {
            let mut coded = base.clone();
            coded.variables[0].kind = kind;
            coded.variables = vec![coded.variables[0].clone(); 3];
            let opts = HomalsOptions {
                dimensions: 1,
                ..HomalsOptions::default()
            };
            let sol = homals_fit(&coded, &opts).unwrap();
            assert!(sol.final_loss() < 1e-8, "{kind:?}: {}", sol.final_loss());
            check_constraints(&sol);
        }
    }

    #[test]
    fn mixed_instance_invariants() {
        let mut coded = random_coded(9, 80, &[4, 3, 4, 2], VariableKind::Ordinal);
        coded.variables[1].kind = VariableKind::Nominal;
        let sol = homals_fit(&coded, &HomalsOptions::default()).unwrap();
        assert!(sol.converged);
        check_constraints(&sol);
        let exp = expand_indicators(&coded).unwrap();
        let ys: Vec<_> = sol.variables.iter().map(|v| v.quantification.y()).collect();
        assert!((loss(&sol.x, &ys, &exp).unwrap() - sol.final_loss()).abs() < 1e-9);
        for v in &sol.variables {
            if let Quantification::Ordinal { o, .. } = &v.quantification {
                let d = &v.counts;
                let ss: f64 = o.iter().zip(d).map(|(a, w)| w * a * a).sum();
                let mean: f64 = o.iter().zip(d).map(|(a, w)| w * a).sum();
                assert!((ss - 80.0).abs() < 1e-9 && mean.abs() < 1e-9);
            }
        }
    }

    #[test]
    fn ordinal_loss_is_not_below_nominal() {
        for seed in 0..5 {
            let ord = random_coded(100 + seed, 60, &[4, 4, 3], VariableKind::Ordinal);
            let mut nom = ord.clone();
            for v in &mut nom.variables {
                v.kind = VariableKind::Nominal;
            }
            let opts = HomalsOptions::default();
            let lo = homals_fit(&ord, &opts).unwrap().final_loss();
            let ln = homals_fit(&nom, &opts).unwrap().final_loss();
            assert!(lo >= ln - 1e-9, "ordinal {lo} < nominal {ln}");
        }
    }

    #[test]
    fn nominal_relabeling_keeps_loss() {
        let coded = random_coded(21, 70, &[4, 3, 3], VariableKind::Nominal);
        let mut permuted = coded.clone();
        let perm = [3u32, 1, 4, 2];
        for c in &mut permuted.variables[0].codes {
            *c = perm[*c as usize - 1];
        }
        let opts = HomalsOptions::default();
        let a = homals_fit(&coded, &opts).unwrap();
        let b = homals_fit(&permuted, &opts).unwrap();
        assert!((a.final_loss() - b.final_loss()).abs() < 1e-7);
    }

    #[test]
    fn same_seed_is_reproducible() {
        let coded = random_coded(4, 50, &[3, 3, 4], VariableKind::Ordinal);
        let opts = HomalsOptions::default();
        assert_eq!(homals_fit(&coded, &opts).unwrap(), homals_fit(&coded, &opts).unwrap());
    }

    #[test]
    fn monotone_pair_gives_monotone_quantifications() {
        // seven observations on two associated ordinal variables
        let coded = CodedMatrix {
            ids: (1..=7).map(|i| i.to_string()).collect(),
            variables: vec![
                CodedVariable {
                    name: "a".into(),
                    kind: VariableKind::Ordinal,
                    codes: vec![1, 1, 2, 2, 3, 3, 3],
                    labels: vec!["1".into(), "2".into(), "3".into()],
                },
                CodedVariable {
                    name: "b".into(),
                    kind: VariableKind::Ordinal,
                    codes: vec![1, 2, 1, 3, 2, 3, 3],
                    labels: vec!["1".into(), "2".into(), "3".into()],
                },
            ],
        };
        let sol = homals_fit(&coded, &HomalsOptions::default()).unwrap();
        check_constraints(&sol);
        for v in &sol.variables {
            let Quantification::Ordinal { o, beta } = &v.quantification else {
                panic!("ordinal expected")
            };
            assert!(o[0] < o[2], "{o:?}");
            let y = v.quantification.y();
            assert!((y - o * beta.transpose()).amax() < 1e-12);
        }
    }

    #[test]
    fn preconditions() {
        let coded = random_coded(4, 10, &[2, 2], VariableKind::Nominal);
        let opts = |p| HomalsOptions {
            dimensions: p,
            ..HomalsOptions::default()
        };
        assert!(matches!(homals_fit(&coded, &opts(3)), Err(Error::Contract(_))));
        assert!(matches!(homals_fit(&coded, &opts(0)), Err(Error::Contract(_))));
        let tiny = random_coded(4, 2, &[2, 2], VariableKind::Nominal);
        assert!(matches!(homals_fit(&tiny, &opts(2)), Err(Error::Contract(_))));
    }
}
