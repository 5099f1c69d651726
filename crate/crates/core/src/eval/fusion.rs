use crate::corpus::PainClass;

/// Plurality vote over per-feature-set predictions. Ties go to the tied
/// class most prevalent in the training labels, then to canonical order.
pub fn late_fusion_vote(votes: &[PainClass], train_counts: &[usize; 3]) -> PainClass {
    let mut tally = [0usize; 3];
    for v in votes {
        tally[v.index()] += 1;
    }
    let mut best = 0;
    for c in 1..3 {
        let better = tally[c] > tally[best]
            || (tally[c] == tally[best] && train_counts[c] > train_counts[best]);
        if better {
            best = c;
        }
    }
    PainClass::ALL[best]
}
