//! ANOVA-F top-k feature selection and the inner cross-validated search over k.

use ndarray::{ArrayView2, Axis};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::metrics::weighted_f1;
use crate::corpus::PainClass;
use crate::error::{Error, Result};
use crate::models::{class_counts, majority, Model, ModelKind};
use crate::stats::one_way_anova;

/// Per-column one-way ANOVA F across the classes present in `y`.
///
/// Constant columns score 0; a column that is constant within every class
/// but differs between classes scores `+∞`.
pub fn anova_f_scores(x: ArrayView2<f64>, y: &[PainClass]) -> Vec<f64> {
    let present: Vec<PainClass> = PainClass::ALL
        .iter()
        .copied()
        .filter(|c| y.contains(c))
        .collect();
    x.columns()
        .into_iter()
        .map(|col| {
            if present.len() < 2 {
                return 0.0;
            }
            let groups: Vec<Vec<f64>> = present
                .iter()
                .map(|&c| {
                    col.iter()
                        .zip(y)
                        .filter(|(_, &l)| l == c)
                        .map(|(&v, _)| v)
                        .collect()
                })
                .collect();
            one_way_anova(&groups).map_or(0.0, |r| r.statistic)
        })
        .collect()
}

/// Column indices ordered by F descending, ties by lower index.
pub fn rank_features(x: ArrayView2<f64>, y: &[PainClass]) -> Vec<usize> {
    let f = anova_f_scores(x, y);
    let mut order: Vec<usize> = (0..f.len()).collect();
    order.sort_by(|&a, &b| f[b].total_cmp(&f[a]).then(a.cmp(&b)));
    order
}

/// The `k` highest-F columns, returned in ascending column order.
pub fn select_k_best(x: ArrayView2<f64>, y: &[PainClass], k: usize) -> Result<Vec<usize>> {
    if k < 1 {
        return Err(Error::invalid("select_k_best: k must be >= 1"));
    }
    if k > x.ncols() {
        return Err(Error::invalid(format!(
            "select_k_best: k = {k} exceeds {} columns",
            x.ncols()
        )));
    }
    let mut top = rank_features(x, y);
    top.truncate(k);
    top.sort_unstable();
    Ok(top)
}

/// Fit `kind` and predict `test`. When the model is undefined on the training
/// data (a single class, or no variance for the RBF width) the training
/// majority is predicted instead.
pub fn fit_predict(
    kind: ModelKind,
    train: ArrayView2<f64>,
    y: &[PainClass],
    test: ArrayView2<f64>,
) -> Result<Vec<PainClass>> {
    match Model::fit(kind, train, y) {
        Ok(m) => Ok(m.predict(test)),
        Err(Error::SingleClass | Error::NonPositiveGamma) => {
            Ok(vec![majority(&class_counts(y)); test.nrows()])
        }
        Err(e) => Err(e),
    }
}

/// Stratified assignment of samples to `n_folds` folds: each class is
/// shuffled with `seed` and dealt round-robin, continuing the deal across
/// classes so fold sizes stay balanced.
pub fn stratified_folds(y: &[PainClass], n_folds: usize, seed: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut fold_of = vec![0; y.len()];
    let mut next = 0;
    for c in PainClass::ALL {
        let mut members: Vec<usize> = (0..y.len()).filter(|&i| y[i] == c).collect();
        members.shuffle(&mut rng);
        for i in members {
            fold_of[i] = next % n_folds;
            next += 1;
        }
    }
    fold_of
}

/// Inner validation partition used by [`choose_k`]: stratified `inner_folds`
/// folds, or leave-one-out when some class has fewer than two members.
pub fn inner_partition(y: &[PainClass], inner_folds: usize, seed: u64) -> (Vec<usize>, usize) {
    let counts = class_counts(y);
    let small_class = counts.contains(&1);
    if small_class || y.len() < inner_folds {
        ((0..y.len()).collect(), y.len())
    } else {
        (stratified_folds(y, inner_folds, seed), inner_folds)
    }
}

/// Mean inner-validation weighted F1 for every k in `k_grid`.
pub fn inner_scores(
    x: ArrayView2<f64>,
    y: &[PainClass],
    kind: ModelKind,
    k_grid: &[usize],
    inner_folds: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    let (fold_of, n_folds) = inner_partition(y, inner_folds, seed);
    let mut totals = vec![0.0; k_grid.len()];
    let mut used = 0usize;
    for f in 0..n_folds {
        let train: Vec<usize> = (0..y.len()).filter(|&i| fold_of[i] != f).collect();
        let val: Vec<usize> = (0..y.len()).filter(|&i| fold_of[i] == f).collect();
        if val.is_empty() || train.is_empty() {
            continue;
        }
        used += 1;
        let xt = x.select(Axis(0), &train);
        let yt: Vec<PainClass> = train.iter().map(|&i| y[i]).collect();
        let xv = x.select(Axis(0), &val);
        let yv: Vec<PainClass> = val.iter().map(|&i| y[i]).collect();
        let ranking = rank_features(xt.view(), &yt);
        for (slot, &k) in k_grid.iter().enumerate() {
            let mut cols = ranking[..k].to_vec();
            cols.sort_unstable();
            let pred = fit_predict(
                kind,
                xt.select(Axis(1), &cols).view(),
                &yt,
                xv.select(Axis(1), &cols).view(),
            )?;
            totals[slot] += weighted_f1(&yv, &pred)?;
        }
    }
    Ok(totals.into_iter().map(|t| t / used.max(1) as f64).collect())
}

/// The grid values usable with `n_cols` columns; falls back to `[n_cols]`
/// when every grid value is too large.
pub fn feasible_grid(k_grid: &[usize], n_cols: usize) -> Vec<usize> {
    let mut grid: Vec<usize> = k_grid
        .iter()
        .copied()
        .filter(|&k| k >= 1 && k <= n_cols)
        .collect();
    grid.sort_unstable();
    grid.dedup();
    if grid.is_empty() && n_cols > 0 {
        grid.push(n_cols);
    }
    grid
}

/// Pick k by inner cross-validation on the training partition; ties go to the
/// smallest k.
pub fn choose_k(
    x: ArrayView2<f64>,
    y: &[PainClass],
    kind: ModelKind,
    k_grid: &[usize],
    inner_folds: usize,
    seed: u64,
) -> Result<usize> {
    let grid = feasible_grid(k_grid, x.ncols());
    match grid.len() {
        0 => return Err(Error::invalid("choose_k: no columns to select from")),
        1 => return Ok(grid[0]),
        _ => {}
    }
    let scores = inner_scores(x, y, kind, &grid, inner_folds, seed)?;
    let mut best = 0;
    for i in 1..grid.len() {
        if scores[i] > scores[best] + 1e-12 {
            best = i;
        }
    }
    Ok(grid[best])
}
