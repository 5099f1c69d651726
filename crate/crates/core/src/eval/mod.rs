//! Weighted F1, ANOVA-F feature selection, nested k search, late fusion and
//! the leave-one-out harness.

mod fusion;
mod loov;
mod metrics;
mod selection;

pub use fusion::late_fusion_vote;
pub use loov::{
    evaluate_fold, evaluate_folds, loov_run, prepare_folds, subgroup_scores, tally_selected,
    BranchRecord, ColumnScreen, EvalConfig, EvalReport, FeatureCount, FeatureSetId, FoldData,
    FoldRecord, NoScreen, SubgroupScores,
};
pub use metrics::{class_f1, confusion_matrix, weighted_f1, Confusion};
pub use selection::{
    anova_f_scores, choose_k, feasible_grid, fit_predict, inner_partition, inner_scores,
    rank_features, select_k_best, stratified_folds,
};
