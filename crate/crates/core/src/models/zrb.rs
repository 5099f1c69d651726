use serde::Serialize;

use crate::corpus::PainClass;
use crate::error::{Error, Result};

/// Per-class counts in canonical order.
pub fn class_counts(y: &[PainClass]) -> [usize; 3] {
    let mut counts = [0; 3];
    for c in y {
        counts[c.index()] += 1;
    }
    counts
}

/// The class with the highest count; ties go to the earlier class in
/// canonical order.
pub fn majority(counts: &[usize; 3]) -> PainClass {
    let mut best = 0;
    for i in 1..3 {
        if counts[i] > counts[best] {
            best = i;
        }
    }
    PainClass::ALL[best]
}

/// Zero Rate Baseline: always predicts the training majority.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ZrbModel {
    pub majority_class: PainClass,
}

impl ZrbModel {
    pub fn fit(y: &[PainClass]) -> Result<Self> {
        if y.is_empty() {
            return Err(Error::EmptyTrainingSet);
        }
        Ok(ZrbModel {
            majority_class: majority(&class_counts(y)),
        })
    }

    pub fn predict(&self, n: usize) -> Vec<PainClass> {
        vec![self.majority_class; n]
    }
}
