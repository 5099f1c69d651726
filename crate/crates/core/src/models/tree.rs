//! CART classification tree with Gini impurity, grown without a depth limit.

use ndarray::ArrayView2;
use serde::Serialize;

use super::zrb::{class_counts, majority};
use crate::corpus::PainClass;
use crate::error::{Error, Result};

/// Gini impurity `1 − Σ p_c²` of a class histogram.
pub fn gini(counts: &[usize]) -> f64 {
    let n: usize = counts.iter().sum();
    if n == 0 {
        return 0.0;
    }
    let n = n as f64;
    1.0 - counts.iter().map(|&c| (c as f64 / n).powi(2)).sum::<f64>()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Node {
    Leaf {
        counts: [usize; 3],
        class: PainClass,
    },
    Split {
        feature: usize,
        /// Samples with `x[feature] <= threshold` go left.
        threshold: f64,
        left: Box<Node>,
        right: Box<Node>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TreeModel {
    pub root: Node,
    pub n_features: usize,
}

// Gains closer than this are treated as equal so ties resolve by position.
const GAIN_TIE: f64 = 1e-12;

struct BestSplit {
    feature: usize,
    threshold: f64,
    gain: f64,
}

impl TreeModel {
    pub fn fit(x: ArrayView2<f64>, y: &[PainClass]) -> Result<Self> {
        if y.is_empty() || x.nrows() == 0 {
            return Err(Error::EmptyTrainingSet);
        }
        if x.nrows() != y.len() {
            return Err(Error::invalid("tree: X and y lengths differ"));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("tree training input"));
        }
        let idx: Vec<usize> = (0..y.len()).collect();
        Ok(TreeModel {
            root: grow(x, y, idx),
            n_features: x.ncols(),
        })
    }

    pub fn predict_one(&self, row: &[f64]) -> PainClass {
        let mut node = &self.root;
        loop {
            match node {
                Node::Leaf { class, .. } => return *class,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    node = if row[*feature] <= *threshold {
                        left
                    } else {
                        right
                    }
                }
            }
        }
    }

    pub fn predict(&self, x: ArrayView2<f64>) -> Vec<PainClass> {
        x.rows()
            .into_iter()
            .map(|r| self.predict_one(&r.to_vec()))
            .collect()
    }

    pub fn depth(&self) -> usize {
        fn d(n: &Node) -> usize {
            match n {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + d(left).max(d(right)),
            }
        }
        d(&self.root)
    }
}

fn leaf(counts: [usize; 3]) -> Node {
    Node::Leaf {
        counts,
        class: majority(&counts),
    }
}

fn grow(x: ArrayView2<f64>, y: &[PainClass], idx: Vec<usize>) -> Node {
    let labels: Vec<PainClass> = idx.iter().map(|&i| y[i]).collect();
    let counts = class_counts(&labels);
    if counts.iter().filter(|&&c| c > 0).count() <= 1 {
        return leaf(counts);
    }
    let Some(best) = best_split(x, y, &idx, &counts) else {
        return leaf(counts);
    };
    let (left, right): (Vec<usize>, Vec<usize>) = idx
        .into_iter()
        .partition(|&i| x[[i, best.feature]] <= best.threshold);
    Node::Split {
        feature: best.feature,
        threshold: best.threshold,
        left: Box::new(grow(x, y, left)),
        right: Box::new(grow(x, y, right)),
    }
}

/// Highest Gini gain over all features and midpoint thresholds. A split with
/// zero gain is still taken while the node is impure, so consistent data is
/// always fitted exactly.
fn best_split(
    x: ArrayView2<f64>,
    y: &[PainClass],
    idx: &[usize],
    counts: &[usize; 3],
) -> Option<BestSplit> {
    let n = idx.len() as f64;
    let parent = gini(counts);
    let mut best: Option<BestSplit> = None;
    for f in 0..x.ncols() {
        let mut order: Vec<usize> = idx.to_vec();
        order.sort_by(|&a, &b| x[[a, f]].total_cmp(&x[[b, f]]));
        let mut left = [0usize; 3];
        let mut right = *counts;
        for w in 0..order.len() - 1 {
            let c = y[order[w]].index();
            left[c] += 1;
            right[c] -= 1;
            let (lo, hi) = (x[[order[w], f]], x[[order[w + 1], f]]);
            if lo == hi {
                continue;
            }
            let nl = (w + 1) as f64;
            let gain = parent - (nl / n) * gini(&left) - ((n - nl) / n) * gini(&right);
            let mut threshold = lo + (hi - lo) / 2.0;
            if threshold >= hi {
                threshold = lo;
            }
            if best.as_ref().is_none_or(|b| gain > b.gain + GAIN_TIE) {
                best = Some(BestSplit {
                    feature: f,
                    threshold,
                    gain,
                });
            }
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use ndarray::{array, Array2};

    use super::*;
    use PainClass::*;

    #[test]
    fn gini_of_table_two_split() {
        let g = gini(&[38, 12, 15]);
        let exact = 1.0 - (38f64 / 65.0).powi(2) - (12f64 / 65.0).powi(2) - (15f64 / 65.0).powi(2);
        assert!((g - exact).abs() < 1e-15);
        assert!((g - 0.571).abs() < 5e-4);
        assert_eq!(gini(&[4, 0, 0]), 0.0);
    }

    #[test]
    fn single_class_is_a_leaf() {
        let x = array![[1.0], [5.0], [3.0]];
        let t = TreeModel::fit(x.view(), &[Severe; 3]).unwrap();
        assert_eq!(t.depth(), 0);
        assert_eq!(
            t.predict(array![[100.0], [-3.0]].view()),
            vec![Severe, Severe]
        );
    }

    #[test]
    fn one_dimensional_stump() {
        let x = array![[1.0], [2.0], [9.0], [10.0]];
        let y = [Mild, Mild, Severe, Severe];
        let t = TreeModel::fit(x.view(), &y).unwrap();
        assert_eq!(t.depth(), 1);
        match &t.root {
            Node::Split { threshold, .. } => assert!(*threshold > 2.0 && *threshold < 9.0),
            _ => panic!("expected a split"),
        }
        assert_eq!(t.predict(x.view()), y.to_vec());
    }

    #[test]
    fn xor_needs_zero_gain_split() {
        let x = array![[0.0, 0.0], [0.0, 1.0], [1.0, 0.0], [1.0, 1.0]];
        let y = [Mild, Severe, Severe, Mild];
        let t = TreeModel::fit(x.view(), &y).unwrap();
        assert_eq!(t.predict(x.view()), y.to_vec());
        assert_eq!(t.depth(), 2);
        // Root split: first feature wins the tie.
        assert!(matches!(t.root, Node::Split { feature: 0, .. }));
    }

    #[test]
    fn duplicate_rows_with_conflicting_labels() {
        let x = Array2::from_elem((3, 1), 1.0);
        let t = TreeModel::fit(x.view(), &[Moderate, Severe, Severe]).unwrap();
        assert_eq!(t.predict_one(&[1.0]), Severe);
        let x = Array2::from_elem((2, 1), 1.0);
        let t = TreeModel::fit(x.view(), &[Severe, Moderate]).unwrap();
        assert_eq!(t.predict_one(&[1.0]), Moderate);
    }

    #[test]
    fn empty_training_set() {
        assert!(TreeModel::fit(Array2::zeros((0, 2)).view(), &[]).is_err());
    }
}
