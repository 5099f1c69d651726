use crate::corpus::PainClass;
use crate::error::{Error, Result};

/// Row-normalized confusion matrix: entry `[i][j]` is P(predicted j | true i).
pub type Confusion = [[f64; 3]; 3];

/// Per-class F1 for `class`, zero when it has no true positives.
pub fn class_f1(y_true: &[PainClass], y_pred: &[PainClass], class: PainClass) -> f64 {
    let (mut tp, mut fp, mut fn_) = (0usize, 0usize, 0usize);
    for (&t, &p) in y_true.iter().zip(y_pred) {
        match (t == class, p == class) {
            (true, true) => tp += 1,
            (false, true) => fp += 1,
            (true, false) => fn_ += 1,
            _ => {}
        }
    }
    if tp == 0 {
        0.0
    } else {
        2.0 * tp as f64 / (2 * tp + fp + fn_) as f64
    }
}

/// Support-weighted mean of per-class F1 scores.
pub fn weighted_f1(y_true: &[PainClass], y_pred: &[PainClass]) -> Result<f64> {
    if y_true.is_empty() {
        return Err(Error::invalid("weighted F1 of an empty labelling"));
    }
    if y_true.len() != y_pred.len() {
        return Err(Error::invalid(
            "weighted F1: label vectors differ in length",
        ));
    }
    let n = y_true.len() as f64;
    let score = PainClass::ALL
        .iter()
        .map(|&c| {
            let support = y_true.iter().filter(|&&t| t == c).count();
            if support == 0 {
                0.0
            } else {
                support as f64 * class_f1(y_true, y_pred, c)
            }
        })
        .sum::<f64>()
        / n;
    Ok(score)
}

pub fn confusion_matrix(y_true: &[PainClass], y_pred: &[PainClass]) -> Confusion {
    let mut counts = [[0usize; 3]; 3];
    for (&t, &p) in y_true.iter().zip(y_pred) {
        counts[t.index()][p.index()] += 1;
    }
    let mut m = [[0.0; 3]; 3];
    for i in 0..3 {
        let total: usize = counts[i].iter().sum();
        if total > 0 {
            for j in 0..3 {
                m[i][j] = counts[i][j] as f64 / total as f64;
            }
        }
    }
    m
}
