mod support;

use painscale::eval::{loov_run, EvalConfig, FeatureSetId};
use painscale::models::ModelKind;
use painscale::synth::SynthConfig;
use support::scenarios::{fold_recomputation, synth};

fn small(seed: u64) -> painscale::corpus::Corpus {
    synth(SynthConfig {
        n_participants: 24,
        seed,
        ..SynthConfig::default()
    })
    .0
}

#[test]
fn folds_rebuild_bitwise_from_training_data() {
    let corpus = small(1);
    let o = fold_recomputation(&corpus, 9, &[0, 5, 11, 23]);
    assert!(o.ok(), "{:?}", o.failures);
    assert_eq!(o.checked, 4 * 5);
}

#[test]
fn reports_do_not_depend_on_thread_schedule() {
    let corpus = small(2);
    let par = EvalConfig::default();
    let serial = EvalConfig {
        parallel: false,
        ..EvalConfig::default()
    };
    for set in [FeatureSetId::EarlyFusion, FeatureSetId::LateFusion] {
        let a = loov_run(&corpus, set, ModelKind::Dt, &par, 3).unwrap();
        let b = loov_run(&corpus, set, ModelKind::Dt, &serial, 3).unwrap();
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b).unwrap()
        );
    }
}

#[test]
fn baseline_scores_the_majority() {
    let corpus = synth(SynthConfig::default()).0;
    let r = loov_run(
        &corpus,
        FeatureSetId::EarlyFusion,
        ModelKind::Zrb,
        &EvalConfig::default(),
        0,
    )
    .unwrap();
    assert!((r.weighted_f1 - 0.4314).abs() < 5e-5);
    assert!(r.confusion.iter().all(|row| row[0] == 1.0));
    assert!(r.feature_set.is_none());
    assert!(r.folds.iter().all(|f| f.selected_features.is_empty()));
}
