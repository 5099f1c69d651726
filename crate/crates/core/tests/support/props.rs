//! Property checks over feature extraction, with their input strategies.

use ndarray::Array2;
use painscale::features::{
    drop_zero_variance, topic_fit, FeatureMatrix, FeatureSet, NmfParams, TermCounts, TfidfModel,
};
use proptest::prelude::*;
use proptest::test_runner::TestCaseError;

pub fn docs() -> impl Strategy<Value = Vec<TermCounts>> {
    prop::collection::vec(
        prop::collection::btree_map(
            (0..15u8).prop_map(|w| format!("w{w}|NOUN")),
            1..6usize,
            0..8,
        ),
        2..12,
    )
    .prop_filter("some document has a term", |d| {
        d.iter().any(|doc| !doc.is_empty())
    })
}

/// Fitted rows have unit L2 norm; documents without terms stay zero.
pub fn tfidf_unit_norm(docs: &[TermCounts]) -> Result<(), TestCaseError> {
    let model = TfidfModel::fit(docs).map_err(|e| TestCaseError::fail(e.to_string()))?;
    let m = model.transform_many(docs);
    for (row, doc) in m.rows().into_iter().zip(docs) {
        let norm = row.dot(&row).sqrt();
        let want = if doc.is_empty() { 0.0 } else { 1.0 };
        prop_assert!(
            (norm - want).abs() < 1e-12,
            "row norm {norm}, expected {want}"
        );
        prop_assert!(row.iter().all(|&v| v >= 0.0));
    }
    Ok(())
}

pub fn nonnegative_matrix() -> impl Strategy<Value = (Array2<f64>, usize, u64)> {
    (3..10usize, 3..10usize)
        .prop_flat_map(|(n, m)| {
            (
                prop::collection::vec(prop_oneof![Just(0.0), 0.0..1.0f64], n * m),
                Just((n, m)),
                2..=m.min(4),
                any::<u64>(),
            )
        })
        .prop_map(|(v, shape, k, seed)| (Array2::from_shape_vec(shape, v).unwrap(), k, seed))
}

/// The objective trace never rises, and document-topic rows are nonnegative
/// and sum to one.
pub fn nmf_monotone_and_stochastic(
    v: &Array2<f64>,
    k: usize,
    seed: u64,
) -> Result<(), TestCaseError> {
    let model = topic_fit(
        v,
        NmfParams {
            k,
            seed,
            ..NmfParams::default()
        },
    )
    .map_err(|e| TestCaseError::fail(e.to_string()))?;
    for w in model.objective_trace.windows(2) {
        prop_assert!(
            w[1] <= w[0] * (1.0 + 1e-12) + 1e-15,
            "objective rose from {} to {}",
            w[0],
            w[1]
        );
    }
    let theta = model
        .transform(v)
        .map_err(|e| TestCaseError::fail(e.to_string()))?;
    for row in theta.rows() {
        prop_assert!(row.iter().all(|&x| x >= 0.0));
        prop_assert!((row.sum() - 1.0).abs() < 1e-12, "row sums to {}", row.sum());
    }
    Ok(())
}

pub fn matrix_with_constants() -> impl Strategy<Value = (Array2<f64>, Vec<bool>)> {
    (2..8usize, 1..10usize)
        .prop_flat_map(|(n, m)| {
            (
                prop::collection::vec(-5.0..5.0f64, n * m),
                prop::collection::vec(any::<bool>(), m),
                Just((n, m)),
            )
        })
        .prop_map(|(v, constant, (n, m))| {
            let mut a = Array2::from_shape_vec((n, m), v).unwrap();
            for (j, &c) in constant.iter().enumerate() {
                if c {
                    let fill = a[[0, j]];
                    a.column_mut(j).fill(fill);
                }
            }
            (a, constant)
        })
}

/// Exactly the constant columns are removed, in order; an all-constant
/// matrix is an error.
pub fn zero_variance_removed(a: &Array2<f64>, constant: &[bool]) -> Result<(), TestCaseError> {
    let names: Vec<String> = (0..a.ncols()).map(|j| format!("f{j}")).collect();
    let ids: Vec<String> = (0..a.nrows()).map(|i| format!("p{i}")).collect();
    let m = FeatureMatrix::uniform(ids, names.clone(), FeatureSet::TfIdf, a.clone()).unwrap();
    let expect_kept: Vec<String> = names
        .iter()
        .zip(constant)
        .filter(|(_, c)| !**c)
        .map(|(n, _)| n.clone())
        .collect();
    match drop_zero_variance(&m) {
        Ok((kept, dropped)) => {
            prop_assert_eq!(&kept.feature_names, &expect_kept);
            prop_assert_eq!(dropped.len(), constant.iter().filter(|c| **c).count());
            for col in kept.values.columns() {
                prop_assert!(col.iter().any(|&v| v != col[0]));
            }
        }
        Err(_) => prop_assert!(expect_kept.is_empty()),
    }
    Ok(())
}
