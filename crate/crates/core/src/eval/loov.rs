//! Leave-one-out validation.
//!
//! Every fold refits all corpus-dependent state (TF-IDF vocabulary and idf,
//! topic model, zero-variance mask, feature ranking, k, classifier) on the
//! n − 1 training participants only. Predictions are pooled across folds and
//! scored once.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use ndarray::{Array2, Axis};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::fusion::late_fusion_vote;
use super::metrics::{confusion_matrix, weighted_f1, Confusion};
use super::selection::{choose_k, fit_predict, select_k_best};
use crate::corpus::{Corpus, PainClass, ParticipantRecord};
use crate::error::{Error, Result};
use crate::features::{
    nonconstant_columns, FamilyMatrices, FeatureConfig, FeatureExtractor, FeatureMatrix, FeatureSet,
};
use crate::models::{class_counts, ModelKind};
use crate::seed;

/// The six feature configurations evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureSetId {
    Verbosity,
    #[serde(rename = "tfidf")]
    TfIdf,
    #[serde(rename = "pos_tfidf")]
    PosTfIdf,
    Topics,
    #[serde(rename = "ef")]
    EarlyFusion,
    #[serde(rename = "lf")]
    LateFusion,
}

impl FeatureSetId {
    pub const ALL: [FeatureSetId; 6] = [
        FeatureSetId::Verbosity,
        FeatureSetId::TfIdf,
        FeatureSetId::PosTfIdf,
        FeatureSetId::Topics,
        FeatureSetId::EarlyFusion,
        FeatureSetId::LateFusion,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            FeatureSetId::Verbosity => "verbosity",
            FeatureSetId::TfIdf => "tfidf",
            FeatureSetId::PosTfIdf => "pos_tfidf",
            FeatureSetId::Topics => "topics",
            FeatureSetId::EarlyFusion => "ef",
            FeatureSetId::LateFusion => "lf",
        }
    }

    /// Row label used in the score table.
    pub fn label(self) -> &'static str {
        match self {
            FeatureSetId::Verbosity => "Verbosity",
            FeatureSetId::TfIdf => "TF-IDF",
            FeatureSetId::PosTfIdf => "POS TF-IDF",
            FeatureSetId::Topics => "Topic distribution",
            FeatureSetId::EarlyFusion => "Early Fusion (EF)",
            FeatureSetId::LateFusion => "Late Fusion (LF)",
        }
    }

    fn base(self) -> Option<FeatureSet> {
        match self {
            FeatureSetId::Verbosity => Some(FeatureSet::Verbosity),
            FeatureSetId::TfIdf => Some(FeatureSet::TfIdf),
            FeatureSetId::PosTfIdf => Some(FeatureSet::PosTfIdf),
            FeatureSetId::Topics => Some(FeatureSet::Topics),
            FeatureSetId::EarlyFusion | FeatureSetId::LateFusion => None,
        }
    }
}

impl fmt::Display for FeatureSetId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FeatureSetId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.to_ascii_lowercase();
        FeatureSetId::ALL
            .iter()
            .copied()
            .find(|f| f.as_str() == s)
            .or(match s.as_str() {
                "early_fusion" => Some(FeatureSetId::EarlyFusion),
                "late_fusion" => Some(FeatureSetId::LateFusion),
                "pos" => Some(FeatureSetId::PosTfIdf),
                _ => None,
            })
            .ok_or_else(|| Error::Config(format!("unknown feature set {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalConfig {
    pub features: FeatureConfig,
    pub k_grid: Vec<usize>,
    pub inner_folds: usize,
    /// Fit TF-IDF and topic models once on the whole corpus instead of per fold.
    pub fit_features_globally: bool,
    /// Run folds on the rayon pool.
    #[serde(skip)]
    pub parallel: bool,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            features: FeatureConfig::default(),
            k_grid: (2..=20).collect(),
            inner_folds: 5,
            fit_features_globally: false,
            parallel: true,
        }
    }
}

/// Fold-local feature matrices: training rows and the held-out row.
#[derive(Debug, Clone)]
pub struct FoldData {
    pub fold: usize,
    pub held_out: usize,
    pub train_idx: Vec<usize>,
    pub train: FamilyMatrices,
    pub test: FamilyMatrices,
}

impl FoldData {
    fn matrices(&self, set: FeatureSet) -> (&FeatureMatrix, &FeatureMatrix) {
        (self.train.get(set), self.test.get(set))
    }
}

fn records<'a>(corpus: &'a Corpus, idx: &[usize]) -> Vec<&'a ParticipantRecord> {
    idx.iter().map(|&i| &corpus.participants[i]).collect()
}

fn maybe_par<T: Send, F>(n: usize, parallel: bool, f: F) -> Result<Vec<T>>
where
    F: Fn(usize) -> Result<T> + Sync + Send,
{
    if parallel {
        (0..n).into_par_iter().map(&f).collect()
    } else {
        (0..n).map(f).collect()
    }
}

/// Build the feature matrices of every leave-one-out fold.
pub fn prepare_folds(corpus: &Corpus, config: &EvalConfig, seed: u64) -> Result<Vec<FoldData>> {
    let n = corpus.len();
    if n < 3 {
        return Err(Error::invalid(
            "leave-one-out needs at least 3 participants",
        ));
    }
    let labels = corpus.labels();
    if labels.iter().all(|&l| l == labels[0]) {
        return Err(Error::invalid(
            "leave-one-out needs at least 2 pain classes",
        ));
    }
    let global = if config.fit_features_globally {
        let all: Vec<usize> = (0..n).collect();
        let ex = FeatureExtractor::fit(
            &records(corpus, &all),
            &config.features,
            seed::derive(seed, u64::MAX),
        )?;
        Some(ex.transform(&records(corpus, &all))?)
    } else {
        None
    };
    maybe_par(n, config.parallel, |fold| {
        let train_idx: Vec<usize> = (0..n).filter(|&i| i != fold).collect();
        let (train, test) = match &global {
            Some(all) => (subset_rows(all, &train_idx), subset_rows(all, &[fold])),
            None => {
                let ex = FeatureExtractor::fit(
                    &records(corpus, &train_idx),
                    &config.features,
                    seed::derive(seed, fold as u64),
                )
                .map_err(|e| e.in_fold(fold))?;
                let train = ex
                    .transform(&records(corpus, &train_idx))
                    .map_err(|e| e.in_fold(fold))?;
                let test = ex
                    .transform(&records(corpus, &[fold]))
                    .map_err(|e| e.in_fold(fold))?;
                (train, test)
            }
        };
        Ok(FoldData {
            fold,
            held_out: fold,
            train_idx,
            train,
            test,
        })
    })
}

fn subset_rows(m: &FamilyMatrices, rows: &[usize]) -> FamilyMatrices {
    FamilyMatrices {
        verbosity: m.verbosity.select_rows(rows),
        tfidf: m.tfidf.select_rows(rows),
        pos_tfidf: m.pos_tfidf.select_rows(rows),
        topics: m.topics.select_rows(rows),
    }
}

/// Decides which columns a fold may not use (confound screening).
pub trait ColumnScreen: Sync {
    /// Feature names to exclude, given the fold's training matrix and the
    /// corpus indices of its rows.
    fn excluded(&self, train: &FeatureMatrix, train_idx: &[usize]) -> Result<BTreeSet<String>>;
}

/// Keeps every column.
pub struct NoScreen;

impl ColumnScreen for NoScreen {
    fn excluded(&self, _: &FeatureMatrix, _: &[usize]) -> Result<BTreeSet<String>> {
        Ok(BTreeSet::new())
    }
}

/// Excludes a fixed set of names in every fold.
impl ColumnScreen for BTreeSet<String> {
    fn excluded(&self, _: &FeatureMatrix, _: &[usize]) -> Result<BTreeSet<String>> {
        Ok(self.clone())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BranchRecord {
    pub feature_set: FeatureSet,
    pub predicted: PainClass,
    pub selected_features: Vec<String>,
    pub chosen_k: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FoldRecord {
    pub fold: usize,
    pub held_out_id: String,
    pub predicted: PainClass,
    #[serde(rename = "true")]
    pub true_class: PainClass,
    /// Features used by the fold's model (for late fusion, every branch's).
    pub selected_features: Vec<String>,
    /// None for the baseline and for late fusion (see `branches`).
    pub chosen_k: Option<usize>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub branches: Vec<BranchRecord>,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct FeatureCount {
    pub name: String,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    /// None for the baseline, which uses no features.
    pub feature_set: Option<FeatureSetId>,
    pub model: ModelKind,
    pub config_fingerprint: String,
    pub folds: Vec<FoldRecord>,
    pub weighted_f1: f64,
    pub confusion: Confusion,
    pub unique_selected_features: Vec<FeatureCount>,
}

impl EvalReport {
    pub fn y_true(&self) -> Vec<PainClass> {
        self.folds.iter().map(|f| f.true_class).collect()
    }

    pub fn y_pred(&self) -> Vec<PainClass> {
        self.folds.iter().map(|f| f.predicted).collect()
    }
}

/// Union of per-fold selections with occurrence counts, ordered by count
/// descending then name.
pub fn tally_selected<'a, I>(per_fold: I) -> Vec<FeatureCount>
where
    I: IntoIterator<Item = &'a [String]>,
{
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for fold in per_fold {
        for name in fold {
            *counts.entry(name).or_default() += 1;
        }
    }
    let mut out: Vec<FeatureCount> = counts
        .into_iter()
        .map(|(name, count)| FeatureCount {
            name: name.to_string(),
            count,
        })
        .collect();
    out.sort_by(|a, b| b.count.cmp(&a.count).then_with(|| a.name.cmp(&b.name)));
    out
}

struct Branch {
    predicted: PainClass,
    selected: Vec<String>,
    k: usize,
}

/// Screen, drop zero-variance columns, choose k, select, fit and predict the
/// held-out row for one feature matrix.
fn run_branch(
    train: &FeatureMatrix,
    test: &FeatureMatrix,
    y: &[PainClass],
    kind: ModelKind,
    config: &EvalConfig,
    screen: &dyn ColumnScreen,
    train_idx: &[usize],
    seed: u64,
) -> Result<Branch> {
    let excluded = screen.excluded(train, train_idx)?;
    let allowed: Vec<usize> = (0..train.n_cols())
        .filter(|&c| !excluded.contains(&train.feature_names[c]))
        .collect();
    let xa = train.values.select(Axis(1), &allowed);
    let informative: Vec<usize> = nonconstant_columns(&xa)
        .into_iter()
        .map(|c| allowed[c])
        .collect();
    if informative.is_empty() {
        return Err(Error::NoInformativeFeatures);
    }
    let x = train.values.select(Axis(1), &informative);
    let k = choose_k(x.view(), y, kind, &config.k_grid, config.inner_folds, seed)?;
    let cols: Vec<usize> = select_k_best(x.view(), y, k)?
        .into_iter()
        .map(|c| informative[c])
        .collect();
    let pred = fit_predict(
        kind,
        train.values.select(Axis(1), &cols).view(),
        y,
        test.values.select(Axis(1), &cols).view(),
    )?;
    Ok(Branch {
        predicted: pred[0],
        selected: cols
            .iter()
            .map(|&c| train.feature_names[c].clone())
            .collect(),
        k,
    })
}

/// Evaluate one fold.
pub fn evaluate_fold(
    corpus: &Corpus,
    fold: &FoldData,
    set: FeatureSetId,
    kind: ModelKind,
    config: &EvalConfig,
    screen: &dyn ColumnScreen,
    seed: u64,
) -> Result<FoldRecord> {
    let y: Vec<PainClass> = fold
        .train_idx
        .iter()
        .map(|&i| corpus.participants[i].pain_class)
        .collect();
    let held = &corpus.participants[fold.held_out];
    let fold_seed = seed::derive(seed, fold.fold as u64);
    let mut record = FoldRecord {
        fold: fold.fold,
        held_out_id: held.id.clone(),
        predicted: PainClass::Mild,
        true_class: held.pain_class,
        selected_features: Vec::new(),
        chosen_k: None,
        branches: Vec::new(),
    };
    if kind == ModelKind::Zrb {
        record.predicted = fit_predict(
            kind,
            Array2::zeros((y.len(), 0)).view(),
            &y,
            Array2::zeros((1, 0)).view(),
        )?[0];
        return Ok(record);
    }
    let run = |train: &FeatureMatrix, test: &FeatureMatrix| {
        run_branch(
            train,
            test,
            &y,
            kind,
            config,
            screen,
            &fold.train_idx,
            fold_seed,
        )
    };
    match set {
        FeatureSetId::EarlyFusion => {
            let b = run(&fold.train.fused()?, &fold.test.fused()?)?;
            record.predicted = b.predicted;
            record.selected_features = b.selected;
            record.chosen_k = Some(b.k);
        }
        FeatureSetId::LateFusion => {
            for base in FeatureSet::ALL {
                let (train, test) = fold.matrices(base);
                let b = run(train, test)?;
                record.selected_features.extend(b.selected.iter().cloned());
                record.branches.push(BranchRecord {
                    feature_set: base,
                    predicted: b.predicted,
                    selected_features: b.selected,
                    chosen_k: Some(b.k),
                });
            }
            let votes: Vec<PainClass> = record.branches.iter().map(|b| b.predicted).collect();
            record.predicted = late_fusion_vote(&votes, &class_counts(&y));
        }
        single => {
            let base = single.base().expect("single feature set");
            let (train, test) = fold.matrices(base);
            let b = run(train, test)?;
            record.predicted = b.predicted;
            record.selected_features = b.selected;
            record.chosen_k = Some(b.k);
        }
    }
    Ok(record)
}

/// Score prepared folds for one feature set and model.
pub fn evaluate_folds(
    corpus: &Corpus,
    folds: &[FoldData],
    set: FeatureSetId,
    kind: ModelKind,
    config: &EvalConfig,
    screen: &dyn ColumnScreen,
    seed: u64,
) -> Result<EvalReport> {
    let records = maybe_par(folds.len(), config.parallel, |i| {
        evaluate_fold(corpus, &folds[i], set, kind, config, screen, seed).map_err(|e| match e {
            Error::Fold { .. } => e,
            other => other.in_fold(folds[i].fold),
        })
    })?;
    build_report(set, kind, records, seed::fingerprint(&(config, seed)))
}

pub(crate) fn build_report(
    set: FeatureSetId,
    kind: ModelKind,
    folds: Vec<FoldRecord>,
    fingerprint: String,
) -> Result<EvalReport> {
    let y_true: Vec<PainClass> = folds.iter().map(|f| f.true_class).collect();
    let y_pred: Vec<PainClass> = folds.iter().map(|f| f.predicted).collect();
    let unique = tally_selected(folds.iter().map(|f| f.selected_features.as_slice()));
    Ok(EvalReport {
        feature_set: (kind != ModelKind::Zrb).then_some(set),
        model: kind,
        config_fingerprint: fingerprint,
        weighted_f1: weighted_f1(&y_true, &y_pred)?,
        confusion: confusion_matrix(&y_true, &y_pred),
        unique_selected_features: unique,
        folds,
    })
}

/// Leave-one-out evaluation of one feature set and model.
pub fn loov_run(
    corpus: &Corpus,
    set: FeatureSetId,
    kind: ModelKind,
    config: &EvalConfig,
    seed: u64,
) -> Result<EvalReport> {
    let folds = prepare_folds(corpus, config, seed)?;
    evaluate_folds(corpus, &folds, set, kind, config, &NoScreen, seed)
}

/// Weighted F1 per level of a grouping of participants, plus the aggregate
/// over everyone. A participant may belong to several levels. Levels without
/// members are omitted.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SubgroupScores {
    pub levels: Vec<(String, f64)>,
    pub aggregate: f64,
}

pub fn subgroup_scores<F>(
    report: &EvalReport,
    level_order: &[String],
    grouping: F,
) -> Result<SubgroupScores>
where
    F: Fn(&str) -> Vec<String>,
{
    let memberships: Vec<Vec<String>> = report
        .folds
        .iter()
        .map(|f| grouping(&f.held_out_id))
        .collect();
    let mut levels = Vec::new();
    for level in level_order {
        let (t, p): (Vec<PainClass>, Vec<PainClass>) = report
            .folds
            .iter()
            .zip(&memberships)
            .filter(|(_, m)| m.contains(level))
            .map(|(f, _)| (f.true_class, f.predicted))
            .unzip();
        if t.is_empty() {
            log::warn!("subgroup level {level} has no members; omitted");
            continue;
        }
        levels.push((level.clone(), weighted_f1(&t, &p)?));
    }
    Ok(SubgroupScores {
        levels,
        aggregate: report.weighted_f1,
    })
}
