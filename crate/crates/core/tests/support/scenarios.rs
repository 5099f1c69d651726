//! Whole-pipeline scenarios on synthetic corpora.

use std::collections::BTreeSet;

use ndarray::Array2;
use painscale::confound::{
    reference_cohort, screen_confound, screen_features, screened_comparison,
    summary_confound_report, Confound, ConfoundValues,
};
use painscale::corpus::{Corpus, PainClass};
use painscale::eval::{
    evaluate_fold, evaluate_folds, prepare_folds, EvalConfig, EvalReport, FeatureSetId, FoldData,
    NoScreen,
};
use painscale::features::{FeatureExtractor, FeatureMatrix, FeatureSet};
use painscale::models::ModelKind;
use painscale::seed;
use painscale::synth::{generate, ConfoundInjection, GroundTruth, SynthConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::suites::Outcome;

pub fn synth(cfg: SynthConfig) -> (Corpus, GroundTruth) {
    generate(&cfg).expect("valid synth config")
}

/// Baseline and early-fusion SVM reports over one set of folds.
pub fn zrb_and_ef_svm(corpus: &Corpus, seed: u64) -> (EvalReport, EvalReport) {
    let config = EvalConfig::default();
    let folds = prepare_folds(corpus, &config, seed).unwrap();
    let zrb = evaluate_folds(
        corpus,
        &folds,
        FeatureSetId::EarlyFusion,
        ModelKind::Zrb,
        &config,
        &NoScreen,
        seed,
    )
    .unwrap();
    let ef = evaluate_folds(
        corpus,
        &folds,
        FeatureSetId::EarlyFusion,
        ModelKind::Svm,
        &config,
        &NoScreen,
        seed,
    )
    .unwrap();
    (zrb, ef)
}

pub struct SignalRun {
    pub zrb: f64,
    pub ef_svm: f64,
    /// Share of planted lexicon terms among the aggregated selections.
    pub recall: f64,
}

pub fn signal_run(cfg: SynthConfig) -> SignalRun {
    let seed = cfg.seed;
    let (corpus, truth) = synth(cfg);
    let (zrb, ef) = zrb_and_ef_svm(&corpus, seed);
    let selected: BTreeSet<&str> = ef
        .unique_selected_features
        .iter()
        .map(|f| f.name.as_str())
        .collect();
    let planted = truth.planted_terms();
    let found = planted
        .iter()
        .filter(|t| selected.contains(format!("tfidf:{t}").as_str()))
        .count();
    SignalRun {
        zrb: zrb.weighted_f1,
        ef_svm: ef.weighted_f1,
        recall: found as f64 / planted.len().max(1) as f64,
    }
}

/// Rebuild `checked` folds from their training participants alone, with the
/// held-out record's label altered, and compare with the stored folds
/// bit for bit.
pub fn fold_recomputation(corpus: &Corpus, seed: u64, checked: &[usize]) -> Outcome {
    let config = EvalConfig::default();
    let stored = prepare_folds(corpus, &config, seed).unwrap();
    let mut out = Outcome::default();
    for &f in checked {
        let fold = &stored[f];
        let train: Vec<_> = fold
            .train_idx
            .iter()
            .map(|&i| &corpus.participants[i])
            .collect();
        let mut held = corpus.participants[fold.held_out].clone();
        held.pain_class = match held.pain_class {
            PainClass::Mild => PainClass::Severe,
            _ => PainClass::Mild,
        };
        let ex =
            FeatureExtractor::fit(&train, &config.features, seed::derive(seed, f as u64)).unwrap();
        let rebuilt = FoldData {
            fold: f,
            held_out: fold.held_out,
            train_idx: fold.train_idx.clone(),
            train: ex.transform(&train).unwrap(),
            test: ex.transform(&[&held]).unwrap(),
        };
        for set in FeatureSet::ALL {
            let same = |a: &FeatureMatrix, b: &FeatureMatrix| {
                a.feature_names == b.feature_names
                    && a.values
                        .iter()
                        .zip(b.values.iter())
                        .all(|(x, y)| x.to_bits() == y.to_bits())
            };
            out.checked += 1;
            if !same(fold.train.get(set), rebuilt.train.get(set))
                || !same(fold.test.get(set), rebuilt.test.get(set))
            {
                out.failures
                    .push(format!("fold {f}: {} matrices differ", set.as_str()));
            }
        }
        let mut relabelled = corpus.clone();
        relabelled.participants[fold.held_out] = held;
        let a = evaluate_fold(
            corpus,
            fold,
            FeatureSetId::EarlyFusion,
            ModelKind::Svm,
            &config,
            &NoScreen,
            seed,
        )
        .unwrap();
        let b = evaluate_fold(
            &relabelled,
            &rebuilt,
            FeatureSetId::EarlyFusion,
            ModelKind::Svm,
            &config,
            &NoScreen,
            seed,
        )
        .unwrap();
        out.checked += 1;
        if (a.predicted, &a.selected_features, a.chosen_k)
            != (b.predicted, &b.selected_features, b.chosen_k)
        {
            out.failures
                .push(format!("fold {f}: prediction depends on held-out data"));
        }
    }
    out
}

/// Fused features fitted on the whole corpus.
pub fn global_fused(corpus: &Corpus, seed: u64) -> FeatureMatrix {
    let records: Vec<_> = corpus.participants.iter().collect();
    let ex = FeatureExtractor::fit(&records, &EvalConfig::default().features, seed).unwrap();
    ex.transform(&records).unwrap().fused().unwrap()
}

pub struct ConfoundRun {
    pub zrb: f64,
    pub unscreened: f64,
    pub screened: f64,
    /// Share of confound-lexicon terms in the global matrix that the screen drops.
    pub lexicon_dropped: f64,
}

/// Confound-only signal: class lexicons off, gender tied to the mild class,
/// and one gender level using its own lexicon.
pub fn confound_config(seed: u64) -> SynthConfig {
    SynthConfig {
        signal_strength: 0.0,
        confound: Some(ConfoundInjection::default()),
        seed,
        ..SynthConfig::default()
    }
}

pub fn confound_run(seed: u64) -> ConfoundRun {
    let (corpus, truth) = synth(confound_config(seed));
    let confound = truth.config.confound.as_ref().unwrap().confound;
    let global = global_fused(&corpus, seed);
    let records: Vec<_> = corpus.participants.iter().collect();
    let screen = screen_confound(&global, confound, &records).unwrap();
    let dropped = screen.dropped_names();
    let lexicon: Vec<String> = truth
        .confound_lexicon
        .iter()
        .map(|t| format!("tfidf:{t}"))
        .filter(|n| global.column_index(n).is_some())
        .collect();
    let lexicon_dropped = lexicon.iter().filter(|n| dropped.contains(*n)).count() as f64
        / lexicon.len().max(1) as f64;

    let config = EvalConfig::default();
    let folds = prepare_folds(&corpus, &config, seed).unwrap();
    let run = |kind| {
        evaluate_folds(
            &corpus,
            &folds,
            FeatureSetId::EarlyFusion,
            kind,
            &config,
            &NoScreen,
            seed,
        )
        .unwrap()
    };
    let (zrb, all) = (run(ModelKind::Zrb), run(ModelKind::Svm));
    let cmp = screened_comparison(
        &corpus,
        &folds,
        &global,
        FeatureSetId::EarlyFusion,
        ModelKind::Svm,
        confound,
        (&zrb, &all),
        &config,
        false,
        seed,
    )
    .unwrap();
    ConfoundRun {
        zrb: zrb.weighted_f1,
        unscreened: all.weighted_f1,
        screened: cmp.select_report.weighted_f1,
        lexicon_dropped,
    }
}

/// Share of independent Gaussian features dropped against a random
/// three-level categorical variable.
pub fn false_drop_rate(n_features: usize, n_rows: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let levels: Vec<String> = (0..n_rows)
        .map(|i| ["a", "b", "c"][i % 3].to_string())
        .collect();
    let values = Array2::from_shape_simple_fn((n_rows, n_features), || {
        let u: f64 = rng.random_range(f64::EPSILON..1.0);
        let v: f64 = rng.random();
        (-2.0 * u.ln()).sqrt() * (std::f64::consts::TAU * v).cos()
    });
    let m = FeatureMatrix::uniform(
        (0..n_rows).map(|i| format!("p{i}")).collect(),
        (0..n_features).map(|j| format!("f{j}")).collect(),
        FeatureSet::TfIdf,
        values,
    )
    .unwrap();
    let r = screen_features(&m, "level", &ConfoundValues::Categorical(levels)).unwrap();
    r.dropped.len() as f64 / n_features as f64
}

/// Each confound's own encoding, appended as feature columns, must be
/// screened out: indicator columns for categorical levels, the raw value
/// for continuous confounds.
pub fn encodings_dropped(corpus: &Corpus) -> Outcome {
    let records: Vec<_> = corpus.participants.iter().collect();
    let ids = corpus.ids();
    let mut out = Outcome::default();
    for c in Confound::ALL {
        let mut names = Vec::new();
        let mut cols: Vec<Vec<f64>> = Vec::new();
        match c.kind() {
            painscale::confound::ConfoundKind::Categorical => {
                for level in c.levels() {
                    let col: Vec<f64> = records
                        .iter()
                        .map(|p| f64::from(u8::from(c.levels_of(p).contains(&level))))
                        .collect();
                    if col.iter().any(|&v| v != col[0]) {
                        names.push(format!("enc:{c}={level}"));
                        cols.push(col);
                    }
                }
            }
            painscale::confound::ConfoundKind::Continuous => {
                names.push(format!("enc:{c}"));
                cols.push(records.iter().map(|p| c.value_of(p).unwrap()).collect());
                names.push(format!("enc:{c}:affine"));
                cols.push(
                    records
                        .iter()
                        .map(|p| 3.0 - 2.0 * c.value_of(p).unwrap())
                        .collect(),
                );
            }
        }
        let n = records.len();
        let values = Array2::from_shape_fn((n, cols.len()), |(i, j)| cols[j][i]);
        let m =
            FeatureMatrix::uniform(ids.clone(), names.clone(), FeatureSet::TfIdf, values).unwrap();
        let dropped = screen_confound(&m, c, &records).unwrap().dropped_names();
        for name in names {
            out.checked += 1;
            if !dropped.contains(&name) {
                out.failures.push(format!("{name} survived screening"));
            }
        }
    }
    out
}

/// `(confound, p, published p)` for the continuous variables of the
/// bundled cohort summary.
pub fn summary_anchors() -> Vec<(Confound, f64, f64)> {
    let published = [
        (Confound::Age, 0.63),
        (Confound::YearsSinceDiagnosis, 0.37),
        (Confound::YearsSincePain, 0.25),
        (Confound::Esr, 0.79),
        (Confound::Crp, 0.95),
    ];
    let report = summary_confound_report(&reference_cohort());
    published
        .iter()
        .map(|&(c, want)| {
            let t = report
                .iter()
                .find(|t| t.confound == c)
                .expect("confound tested");
            (c, t.result.as_ref().expect("test result").p, want)
        })
        .collect()
}
