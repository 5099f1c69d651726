//! Synthetic interview corpora with planted class-conditional signal.
//!
//! Content tokens mix a shared Zipf-weighted vocabulary with a per-class
//! lexicon; POS mixture and verbosity also shift with the class. Every planted
//! effect scales with `signal_strength`, so a strength of 0 yields corpora in
//! which the text carries no class information.

use std::collections::{BTreeMap, BTreeSet};

use rand::distr::weighted::WeightedIndex;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Normal, Poisson};
use serde::{Deserialize, Serialize};

use crate::confound::Confound;
use crate::corpus::*;
use crate::error::{Error, Result};
use crate::features::StopWords;

/// Upper bound on distinct pseudo-words (shared vocabulary plus lexicons).
pub const MAX_VOCAB: usize = 20_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub n_participants: usize,
    /// Mild, moderate, severe. Class sizes are allocated by largest remainder.
    pub class_priors: [f64; 3],
    pub shared_vocab_size: usize,
    pub zipf_exponent: f64,
    /// Planted words per class.
    pub lexicon_size: usize,
    /// Probability that a participant uses a given word of its class lexicon.
    pub lexicon_coverage: f64,
    /// Probability that a content token is drawn from the class lexicon.
    pub signal_strength: f64,
    /// Share of tokens that are stop words.
    pub function_word_rate: f64,
    pub tokens_per_segment: f64,
    /// Relative increase in tokens per segment for each class at full strength.
    pub verbosity_effect: [f64; 3],
    /// Tag each class over-uses.
    pub class_pos: [PosTag; 3],
    /// Weight multiplier on the class tag at full strength is `1 + pos_boost`.
    pub pos_boost: f64,
    /// Log-scale spread of the per-participant token-count multiplier.
    pub talkativeness_sd: f64,
    pub words_per_minute: f64,
    pub confound: Option<ConfoundInjection>,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            n_participants: 65,
            class_priors: [38.0 / 65.0, 12.0 / 65.0, 15.0 / 65.0],
            shared_vocab_size: 300,
            zipf_exponent: 1.0,
            lexicon_size: 5,
            lexicon_coverage: 0.4,
            signal_strength: 0.5,
            function_word_rate: 0.35,
            tokens_per_segment: 25.0,
            verbosity_effect: [0.0, 0.1, 0.2],
            class_pos: [PosTag::Verb, PosTag::Adverb, PosTag::Noun],
            pos_boost: 0.25,
            talkativeness_sd: 0.35,
            words_per_minute: 120.0,
            confound: None,
            seed: 0,
        }
    }
}

/// A categorical confound whose first level is tied to the mild class and
/// emits its own lexicon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfoundInjection {
    pub confound: Confound,
    pub lexicon_size: usize,
    /// Probability that a content token of a first-level participant comes
    /// from the confound lexicon.
    pub strength: f64,
    /// Probability that a participant's level follows its class (first level
    /// for mild, second otherwise) rather than being drawn at random.
    pub class_coupling: f64,
}

impl Default for ConfoundInjection {
    fn default() -> Self {
        ConfoundInjection {
            confound: Confound::Gender,
            lexicon_size: 6,
            strength: 0.3,
            class_coupling: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParticipantTruth {
    pub id: String,
    pub class: PainClass,
    /// Lexicon terms (`lemma|POS`) this participant uses.
    pub expressed: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub confound_level: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub config: SynthConfig,
    /// Planted terms (`lemma|POS`) per class.
    pub lexicons: BTreeMap<PainClass, Vec<String>>,
    pub confound_lexicon: Vec<String>,
    pub participants: Vec<ParticipantTruth>,
}

impl GroundTruth {
    pub fn planted_terms(&self) -> BTreeSet<String> {
        self.lexicons.values().flatten().cloned().collect()
    }
}

const SYLLABLES: [&str; 30] = [
    "ba", "be", "bi", "bo", "bu", "da", "de", "di", "do", "du", "ka", "ke", "ki", "ko", "ku", "la",
    "le", "li", "lo", "lu", "ma", "me", "mi", "mo", "mu", "ta", "te", "ti", "to", "tu",
];

/// Stop words emitted as function tokens, with their tags.
const FUNCTION_WORDS: [(&str, PosTag); 16] = [
    ("de", PosTag::Preposition),
    ("a", PosTag::Article),
    ("o", PosTag::Article),
    ("que", PosTag::Conjunction),
    ("e", PosTag::Conjunction),
    ("do", PosTag::Preposition),
    ("da", PosTag::Preposition),
    ("em", PosTag::Preposition),
    ("um", PosTag::Article),
    ("para", PosTag::Preposition),
    ("com", PosTag::Preposition),
    ("eu", PosTag::Pronoun),
    ("me", PosTag::Pronoun),
    ("se", PosTag::Conjunction),
    ("mas", PosTag::Conjunction),
    ("esse", PosTag::Determinant),
];

/// Neutral content-tag mixture.
const BASE_POS: [(PosTag, f64); 7] = [
    (PosTag::Noun, 0.34),
    (PosTag::Verb, 0.30),
    (PosTag::Adjective, 0.14),
    (PosTag::Adverb, 0.12),
    (PosTag::PastParticiple, 0.04),
    (PosTag::Numeral, 0.03),
    (PosTag::Interjection, 0.03),
];

/// Two- or three-syllable pseudo-words that are not stop words.
fn pseudo_words(n: usize, stop: &StopWords) -> Vec<String> {
    let s = SYLLABLES.len();
    (0..)
        .map(|i: usize| {
            if i < s * s {
                format!("{}{}", SYLLABLES[i / s], SYLLABLES[i % s])
            } else {
                let j = i - s * s;
                format!(
                    "{}{}{}",
                    SYLLABLES[(j / (s * s)) % s],
                    SYLLABLES[(j / s) % s],
                    SYLLABLES[j % s]
                )
            }
        })
        .filter(|w| !stop.contains(w))
        .take(n)
        .collect()
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(format!("synth: {m}")));
        if self.n_participants == 0 {
            return bad("n_participants must be positive");
        }
        if self.class_priors.iter().any(|&p| !(0.0..=1.0).contains(&p))
            || (self.class_priors.iter().sum::<f64>() - 1.0).abs() > 1e-9
        {
            return bad("class_priors must be probabilities summing to 1");
        }
        for (name, v) in [
            ("signal_strength", self.signal_strength),
            ("lexicon_coverage", self.lexicon_coverage),
            ("function_word_rate", self.function_word_rate),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return bad(&format!("{name} must lie in [0, 1]"));
            }
        }
        if !(self.tokens_per_segment > 0.0
            && self.words_per_minute > 0.0
            && self.zipf_exponent >= 0.0
            && self.talkativeness_sd >= 0.0
            && self.pos_boost >= 0.0)
        {
            return bad("length, rate, Zipf and boost parameters must be positive");
        }
        if self.shared_vocab_size < BASE_POS.len() {
            return bad("shared vocabulary too small");
        }
        let confound_words = self.confound.as_ref().map_or(0, |c| c.lexicon_size);
        if self.shared_vocab_size + 3 * self.lexicon_size + confound_words > MAX_VOCAB {
            return bad(&format!("vocabulary budget of {MAX_VOCAB} words exceeded"));
        }
        if let Some(c) = &self.confound {
            if c.confound.levels().len() < 2 || c.confound == Confound::Pathology {
                return bad("confound injection needs a single-valued categorical confound");
            }
            if !(0.0..=1.0).contains(&c.strength) || !(0.0..=1.0).contains(&c.class_coupling) {
                return bad("confound strength and coupling must lie in [0, 1]");
            }
        }
        Ok(())
    }

    fn class_sizes(&self) -> [usize; 3] {
        let n = self.n_participants as f64;
        let raw: Vec<f64> = self.class_priors.iter().map(|p| p * n).collect();
        let mut sizes = [0usize; 3];
        for i in 0..3 {
            sizes[i] = raw[i].floor() as usize;
        }
        let mut order = [0usize, 1, 2];
        order.sort_by(|&a, &b| {
            (raw[b] - raw[b].floor())
                .total_cmp(&(raw[a] - raw[a].floor()))
                .then(a.cmp(&b))
        });
        let mut left = self.n_participants - sizes.iter().sum::<usize>();
        for &i in order.iter().cycle() {
            if left == 0 {
                break;
            }
            sizes[i] += 1;
            left -= 1;
        }
        sizes
    }
}

struct Vocab {
    /// Shared words grouped by tag, with Zipf sampling weights.
    shared: BTreeMap<PosTag, (Vec<String>, WeightedIndex<f64>)>,
    lexicons: [Vec<Token>; 3],
    confound: Vec<Token>,
}

fn build_vocab(cfg: &SynthConfig, rng: &mut ChaCha8Rng) -> Result<Vocab> {
    let stop = StopWords::portuguese();
    let n_conf = cfg.confound.as_ref().map_or(0, |c| c.lexicon_size);
    let mut words = pseudo_words(cfg.shared_vocab_size + 3 * cfg.lexicon_size + n_conf, &stop);
    words.shuffle(rng);
    let mut it = words.into_iter();

    let tag_dist = WeightedIndex::new(BASE_POS.iter().map(|(_, w)| *w)).expect("valid weights");
    let mut by_tag: BTreeMap<PosTag, Vec<(String, f64)>> = BTreeMap::new();
    for rank in 0..cfg.shared_vocab_size {
        // The first words cover every tag so each tag has a non-empty pool.
        let tag = if rank < BASE_POS.len() {
            BASE_POS[rank].0
        } else {
            BASE_POS[tag_dist.sample(rng)].0
        };
        let weight = 1.0 / ((rank + 1) as f64).powf(cfg.zipf_exponent);
        by_tag
            .entry(tag)
            .or_default()
            .push((it.next().expect("budget checked"), weight));
    }
    let shared = by_tag
        .into_iter()
        .map(|(tag, ws)| {
            let dist = WeightedIndex::new(ws.iter().map(|(_, w)| *w)).expect("positive weights");
            (tag, (ws.into_iter().map(|(w, _)| w).collect(), dist))
        })
        .collect();
    let mut take = |tags: Vec<PosTag>| -> Vec<Token> {
        tags.into_iter()
            .map(|tag| {
                let w = it.next().expect("budget checked");
                Token::new(w.clone(), w, tag)
            })
            .collect()
    };
    let lexicons = [0, 1, 2].map(|c| take(allocate(&class_mixture(cfg, c), cfg.lexicon_size)));
    let confound = take(vec![PosTag::Noun; n_conf]);
    Ok(Vocab {
        shared,
        lexicons,
        confound,
    })
}

/// Content-tag mixture of class `c` (index) at the configured strength.
fn class_mixture(cfg: &SynthConfig, c: usize) -> Vec<(PosTag, f64)> {
    BASE_POS
        .iter()
        .map(|&(t, w)| {
            let boost = if t == cfg.class_pos[c] {
                1.0 + cfg.signal_strength * cfg.pos_boost
            } else {
                1.0
            };
            (t, w * boost)
        })
        .collect()
}

/// Split `n` slots over tags in proportion to `mix` (largest remainder, ties
/// by mixture order).
fn allocate(mix: &[(PosTag, f64)], n: usize) -> Vec<PosTag> {
    let total: f64 = mix.iter().map(|(_, w)| w).sum();
    let quota: Vec<f64> = mix.iter().map(|(_, w)| w / total * n as f64).collect();
    let mut counts: Vec<usize> = quota.iter().map(|q| q.floor() as usize).collect();
    let mut order: Vec<usize> = (0..mix.len()).collect();
    order.sort_by(|&a, &b| {
        (quota[b] - quota[b].floor())
            .total_cmp(&(quota[a] - quota[a].floor()))
            .then(a.cmp(&b))
    });
    let short = n - counts.iter().sum::<usize>();
    for &i in order.iter().take(short) {
        counts[i] += 1;
    }
    mix.iter()
        .zip(counts)
        .flat_map(|(&(t, _), k)| std::iter::repeat_n(t, k))
        .collect()
}

fn term(t: &Token) -> String {
    format!("{}|{}", t.lemma, t.pos)
}

fn round1(x: f64) -> f64 {
    (x * 10.0).round() / 10.0
}

fn draw_vas(class: PainClass, rng: &mut ChaCha8Rng) -> f64 {
    // Tenths within the class bin so that rounding half-up stays in class.
    let (lo, hi) = match class {
        PainClass::Mild => (10, 44),
        PainClass::Moderate => (45, 64),
        PainClass::Severe => (65, 100),
    };
    rng.random_range(lo..=hi) as f64 / 10.0
}

fn pick<T: Copy>(rng: &mut ChaCha8Rng, items: &[(T, f64)]) -> T {
    let d = WeightedIndex::new(items.iter().map(|(_, w)| *w)).expect("valid weights");
    items[d.sample(rng)].0
}

fn positive_normal(rng: &mut ChaCha8Rng, mean: f64, sd: f64) -> f64 {
    round1(
        Normal::new(mean, sd)
            .expect("valid normal")
            .sample(rng)
            .abs(),
    )
}

fn demographics(rng: &mut ChaCha8Rng) -> (Demographics, Clinical, Interviewer) {
    let demo = Demographics {
        age: round1(
            Normal::<f64>::new(56.4, 12.7)
                .expect("valid normal")
                .sample(rng)
                .clamp(20.0, 90.0),
        ),
        gender: pick(rng, &[(Gender::F, 40.0), (Gender::M, 25.0)]),
        education: pick(
            rng,
            &[(Education::Basic, 49.0), (Education::HighSchool, 16.0)],
        ),
        professionally_active: pick(
            rng,
            &[(Activity::Active, 34.0), (Activity::NotActive, 31.0)],
        ),
    };
    let diagnosis = positive_normal(rng, 12.4, 9.5);
    let clinical = Clinical {
        pathologies: BTreeSet::from([pick(
            rng,
            &[
                (Pathology::RheumatoidArthritis, 29.0),
                (Pathology::Spondyloarthritis, 32.0),
                (Pathology::Osteoarthritis, 5.0),
                (Pathology::PsoriaticArthritis, 2.0),
            ],
        )]),
        years_since_diagnosis: diagnosis,
        years_since_pain: round1(diagnosis + positive_normal(rng, 3.5, 3.0)),
        esr: positive_normal(rng, 19.6, 16.6),
        crp: positive_normal(rng, 6.4, 10.0),
    };
    let interviewer = pick(
        rng,
        &[
            (Interviewer::I1, 50.0),
            (Interviewer::I2, 9.0),
            (Interviewer::I3, 6.0),
        ],
    );
    (demo, clinical, interviewer)
}

/// Overwrite the injected confound with `level` (an index into its levels).
fn set_level(p: &mut ParticipantRecord, confound: Confound, level: usize) {
    match confound {
        Confound::Gender => p.demographics.gender = [Gender::F, Gender::M][level],
        Confound::Education => {
            p.demographics.education = [Education::Basic, Education::HighSchool][level]
        }
        Confound::ProfessionallyActive => {
            p.demographics.professionally_active = [Activity::Active, Activity::NotActive][level]
        }
        Confound::Interviewer => {
            p.interviewer = [Interviewer::I1, Interviewer::I2, Interviewer::I3][level]
        }
        _ => unreachable!("validated"),
    }
}

/// Generate a corpus and the ground truth behind it. Identical configs give
/// identical output.
pub fn generate(cfg: &SynthConfig) -> Result<(Corpus, GroundTruth)> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let vocab = build_vocab(cfg, &mut rng)?;
    let s = cfg.signal_strength;

    let sizes = cfg.class_sizes();
    let mut classes: Vec<PainClass> = PainClass::ALL
        .iter()
        .zip(sizes)
        .flat_map(|(&c, k)| std::iter::repeat_n(c, k))
        .collect();
    classes.shuffle(&mut rng);

    let pos_mix: Vec<Vec<(PosTag, f64)>> = (0..3).map(|c| class_mixture(cfg, c)).collect();
    let width = cfg.n_participants.to_string().len().max(3);

    let mut participants = Vec::with_capacity(cfg.n_participants);
    let mut truth = Vec::with_capacity(cfg.n_participants);
    for (i, &class) in classes.iter().enumerate() {
        let c = class.index();
        let (demographics, clinical, interviewer) = demographics(&mut rng);
        let expressed: Vec<&Token> = vocab.lexicons[c]
            .iter()
            .filter(|_| rng.random_bool(cfg.lexicon_coverage))
            .collect();
        let wpm = Normal::new(cfg.words_per_minute, cfg.words_per_minute / 8.0)
            .expect("valid normal")
            .sample(&mut rng)
            .max(cfg.words_per_minute / 3.0);
        let vas_pain = draw_vas(class, &mut rng);
        let vas_disease = rng.random_range(0..=100) as f64 / 10.0;

        let mut p = ParticipantRecord {
            id: format!("S{:0width$}", i + 1),
            demographics,
            clinical,
            interviewer,
            vas_pain,
            vas_disease,
            segments: Vec::new(),
            pain_class: class,
        };
        let mut level = None;
        if let Some(inj) = &cfg.confound {
            let n_levels = inj.confound.levels().len();
            let l = if rng.random_bool(inj.class_coupling) {
                usize::from(class != PainClass::Mild)
            } else {
                rng.random_range(0..n_levels)
            };
            set_level(&mut p, inj.confound, l);
            level = Some(l);
        }
        let confound_rate = match (&cfg.confound, level) {
            (Some(inj), Some(0)) => inj.strength,
            _ => 0.0,
        };

        let talk = Normal::new(0.0, cfg.talkativeness_sd)
            .expect("valid sd")
            .sample(&mut rng)
            .exp();
        let mean_tokens = cfg.tokens_per_segment * talk * (1.0 + s * cfg.verbosity_effect[c]);
        let length = Poisson::new(mean_tokens).expect("positive mean");
        let tag_dist =
            WeightedIndex::new(pos_mix[c].iter().map(|(_, w)| *w)).expect("valid weights");
        for q in 1..=N_QUESTIONS {
            let n_tokens = (length.sample(&mut rng) as usize).max(1);
            let mut tokens = Vec::with_capacity(n_tokens);
            for _ in 0..n_tokens {
                if rng.random_bool(cfg.function_word_rate) {
                    let (w, t) = FUNCTION_WORDS[rng.random_range(0..FUNCTION_WORDS.len())];
                    tokens.push(Token::new(w, w, t));
                } else if confound_rate > 0.0 && rng.random_bool(confound_rate) {
                    tokens.push(vocab.confound[rng.random_range(0..vocab.confound.len())].clone());
                } else if !expressed.is_empty() && rng.random_bool(s) {
                    tokens.push(expressed[rng.random_range(0..expressed.len())].clone());
                } else {
                    let tag = pos_mix[c][tag_dist.sample(&mut rng)].0;
                    let (words, dist) = &vocab.shared[&tag];
                    let w = &words[dist.sample(&mut rng)];
                    tokens.push(Token::new(w.clone(), w.clone(), tag));
                }
            }
            let duration_s = round1(tokens.len() as f64 / wpm * 60.0);
            p.segments.push(Segment {
                question_id: q,
                duration_s,
                tokens,
            });
        }
        truth.push(ParticipantTruth {
            id: p.id.clone(),
            class,
            expressed: expressed.iter().map(|t| term(t)).collect(),
            confound_level: level
                .zip(cfg.confound.as_ref())
                .map(|(l, inj)| inj.confound.levels()[l].clone()),
        });
        participants.push(p);
    }

    let ground = GroundTruth {
        config: cfg.clone(),
        lexicons: PainClass::ALL
            .iter()
            .map(|&c| (c, vocab.lexicons[c.index()].iter().map(term).collect()))
            .collect(),
        confound_lexicon: vocab.confound.iter().map(term).collect(),
        participants: truth,
    };
    Ok((
        Corpus {
            participants,
            ingest_rejects: Vec::new(),
        },
        ground,
    ))
}
