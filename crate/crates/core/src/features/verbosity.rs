use serde::Serialize;

use crate::corpus::ParticipantRecord;

pub const VERBOSITY_NAMES: [&str; 3] = ["word_count", "interview_length_s", "word_rate"];

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Verbosity {
    pub word_count: f64,
    pub interview_length_s: f64,
    /// Words per minute; zero when the interview has no duration.
    pub word_rate: f64,
}

impl Verbosity {
    pub fn to_array(self) -> [f64; 3] {
        [self.word_count, self.interview_length_s, self.word_rate]
    }
}

pub fn verbosity_features(p: &ParticipantRecord) -> Verbosity {
    let word_count = p.segments.iter().map(|s| s.tokens.len()).sum::<usize>() as f64;
    let interview_length_s: f64 = p.segments.iter().map(|s| s.duration_s).sum();
    let word_rate = if interview_length_s > 0.0 {
        word_count / (interview_length_s / 60.0)
    } else {
        log::warn!(
            "participant {}: zero interview duration, word rate set to 0",
            p.id
        );
        0.0
    };
    Verbosity {
        word_count,
        interview_length_s,
        word_rate,
    }
}
