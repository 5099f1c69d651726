//! Participant data model, corpus ingestion and VAS discretization.
//!
//! A corpus file holds one JSON object per line. Each line is validated
//! independently: a schema violation rejects that record (with a reason) and
//! never aborts the whole file. Records that are well formed but do not cover
//! every interview question survive parsing and are removed later by
//! [`complete_case_filter`].

use std::collections::{BTreeSet, HashSet};
use std::fmt;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::{Error, Result};

/// Number of questions in the interview script.
pub const N_QUESTIONS: u8 = 7;

/// Discretized pain intensity, ordered `Mild < Moderate < Severe`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PainClass {
    Mild,
    Moderate,
    Severe,
}

impl PainClass {
    pub const ALL: [PainClass; 3] = [PainClass::Mild, PainClass::Moderate, PainClass::Severe];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    pub fn as_str(self) -> &'static str {
        match self {
            PainClass::Mild => "mild",
            PainClass::Moderate => "moderate",
            PainClass::Severe => "severe",
        }
    }
}

impl fmt::Display for PainClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Map a Visual Analogue Scale mark to a pain class.
///
/// The mark is rounded half-up to an integer; `0..=4` is mild, `5..=6`
/// moderate and `7..=10` severe.
pub fn discretize_vas(vas: f64) -> Result<PainClass> {
    if !vas.is_finite() || !(0.0..=10.0).contains(&vas) {
        return Err(Error::VasOutOfRange(vas));
    }
    let v = (vas + 0.5).floor();
    Ok(if v <= 4.0 {
        PainClass::Mild
    } else if v <= 6.0 {
        PainClass::Moderate
    } else {
        PainClass::Severe
    })
}

/// The 13 part-of-speech tags produced by the upstream tagger.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum PosTag {
    #[serde(rename = "NOUN")]
    Noun,
    #[serde(rename = "VERB")]
    Verb,
    #[serde(rename = "ADJ")]
    Adjective,
    #[serde(rename = "DET")]
    Determinant,
    #[serde(rename = "PRON")]
    Pronoun,
    #[serde(rename = "ART")]
    Article,
    #[serde(rename = "ADV")]
    Adverb,
    #[serde(rename = "PREP")]
    Preposition,
    #[serde(rename = "CONJ")]
    Conjunction,
    #[serde(rename = "NUM")]
    Numeral,
    #[serde(rename = "INTERJ")]
    Interjection,
    #[serde(rename = "PPART")]
    PastParticiple,
    #[serde(rename = "REL")]
    Relation,
}

impl PosTag {
    pub const ALL: [PosTag; 13] = [
        PosTag::Noun,
        PosTag::Verb,
        PosTag::Adjective,
        PosTag::Determinant,
        PosTag::Pronoun,
        PosTag::Article,
        PosTag::Adverb,
        PosTag::Preposition,
        PosTag::Conjunction,
        PosTag::Numeral,
        PosTag::Interjection,
        PosTag::PastParticiple,
        PosTag::Relation,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn as_str(self) -> &'static str {
        match self {
            PosTag::Noun => "NOUN",
            PosTag::Verb => "VERB",
            PosTag::Adjective => "ADJ",
            PosTag::Determinant => "DET",
            PosTag::Pronoun => "PRON",
            PosTag::Article => "ART",
            PosTag::Adverb => "ADV",
            PosTag::Preposition => "PREP",
            PosTag::Conjunction => "CONJ",
            PosTag::Numeral => "NUM",
            PosTag::Interjection => "INTERJ",
            PosTag::PastParticiple => "PPART",
            PosTag::Relation => "REL",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.iter().copied().find(|t| t.as_str() == s)
    }
}

impl fmt::Display for PosTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Token {
    pub surface: String,
    pub lemma: String,
    pub pos: PosTag,
}

impl Token {
    pub fn new(surface: impl Into<String>, lemma: impl Into<String>, pos: PosTag) -> Self {
        Token {
            surface: surface.into(),
            lemma: lemma.into(),
            pos,
        }
    }
}

/// One patient answer, labelled with the interview question it responds to.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub question_id: u8,
    pub duration_s: f64,
    pub tokens: Vec<Token>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Gender {
    F,
    M,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Education {
    Basic,
    HighSchool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activity {
    Active,
    NotActive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pathology {
    RheumatoidArthritis,
    Spondyloarthritis,
    Osteoarthritis,
    PsoriaticArthritis,
}

impl Pathology {
    pub const ALL: [Pathology; 4] = [
        Pathology::RheumatoidArthritis,
        Pathology::Spondyloarthritis,
        Pathology::Osteoarthritis,
        Pathology::PsoriaticArthritis,
    ];

    /// Short code used in report columns.
    pub fn code(self) -> &'static str {
        match self {
            Pathology::RheumatoidArthritis => "RA",
            Pathology::Spondyloarthritis => "S",
            Pathology::Osteoarthritis => "O",
            Pathology::PsoriaticArthritis => "PA",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Interviewer {
    I1,
    I2,
    I3,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Demographics {
    pub age: f64,
    pub gender: Gender,
    pub education: Education,
    pub professionally_active: Activity,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Clinical {
    pub pathologies: BTreeSet<Pathology>,
    pub years_since_diagnosis: f64,
    pub years_since_pain: f64,
    pub esr: f64,
    pub crp: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParticipantRecord {
    pub id: String,
    pub demographics: Demographics,
    pub clinical: Clinical,
    pub interviewer: Interviewer,
    pub vas_pain: f64,
    pub vas_disease: f64,
    pub segments: Vec<Segment>,
    #[serde(skip)]
    pub pain_class: PainClass,
}

impl ParticipantRecord {
    /// Questions (1..=7) with no answering segment.
    pub fn missing_questions(&self) -> Vec<u8> {
        let answered: HashSet<u8> = self.segments.iter().map(|s| s.question_id).collect();
        (1..=N_QUESTIONS)
            .filter(|q| !answered.contains(q))
            .collect()
    }

    pub fn is_complete(&self) -> bool {
        self.missing_questions().is_empty()
    }

    pub fn tokens(&self) -> impl Iterator<Item = &Token> {
        self.segments.iter().flat_map(|s| s.tokens.iter())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", content = "detail", rename_all = "snake_case")]
pub enum RejectReason {
    /// Line is not a JSON object.
    Malformed(String),
    /// A required key is absent or null.
    MissingField(String),
    /// A value violates the schema.
    Invalid(String),
    DuplicateId,
    /// Not every interview question is answered.
    Incomplete(Vec<u8>),
}

impl RejectReason {
    /// Missing data (a metadata field or an interview question), as opposed
    /// to malformed data.
    pub fn is_incompleteness(&self) -> bool {
        matches!(
            self,
            RejectReason::MissingField(_) | RejectReason::Incomplete(_)
        )
    }
}

impl fmt::Display for RejectReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RejectReason::Malformed(m) => write!(f, "malformed record: {m}"),
            RejectReason::MissingField(name) => write!(f, "missing field {name}"),
            RejectReason::Invalid(m) => write!(f, "invalid value: {m}"),
            RejectReason::DuplicateId => f.write_str("duplicate id"),
            RejectReason::Incomplete(qs) => {
                let qs: Vec<String> = qs.iter().map(u8::to_string).collect();
                write!(f, "incomplete (unanswered questions: {})", qs.join(","))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Reject {
    pub id: String,
    pub line: usize,
    pub reason: RejectReason,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Corpus {
    pub participants: Vec<ParticipantRecord>,
    pub ingest_rejects: Vec<Reject>,
}

impl Corpus {
    pub fn len(&self) -> usize {
        self.participants.len()
    }

    pub fn is_empty(&self) -> bool {
        self.participants.is_empty()
    }

    pub fn labels(&self) -> Vec<PainClass> {
        self.participants.iter().map(|p| p.pain_class).collect()
    }

    pub fn ids(&self) -> Vec<String> {
        self.participants.iter().map(|p| p.id.clone()).collect()
    }

    /// Sub-corpus with the given participant indices, in that order.
    pub fn subset(&self, indices: &[usize]) -> Corpus {
        Corpus {
            participants: indices
                .iter()
                .map(|&i| self.participants[i].clone())
                .collect(),
            ingest_rejects: Vec::new(),
        }
    }
}

pub fn parse_corpus(path: impl AsRef<Path>) -> Result<Corpus> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => Error::CorpusNotFound(path.to_path_buf()),
        _ => Error::Io(e),
    })?;
    parse_corpus_reader(file)
}

pub fn parse_corpus_reader(reader: impl Read) -> Result<Corpus> {
    let mut corpus = Corpus::default();
    let mut seen = HashSet::new();
    for (i, line) in BufReader::new(reader).lines().enumerate() {
        let line = line?;
        let lineno = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        match parse_line(&line) {
            Ok(record) => {
                if seen.insert(record.id.clone()) {
                    corpus.participants.push(record);
                } else {
                    corpus.ingest_rejects.push(Reject {
                        id: record.id,
                        line: lineno,
                        reason: RejectReason::DuplicateId,
                    });
                }
            }
            Err((id, reason)) => corpus.ingest_rejects.push(Reject {
                id: id.unwrap_or_else(|| format!("<line {lineno}>")),
                line: lineno,
                reason,
            }),
        }
    }
    if corpus.participants.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    Ok(corpus)
}

/// Keep only records that answer every interview question; the others are
/// appended to `ingest_rejects`.
pub fn complete_case_filter(corpus: Corpus) -> Corpus {
    let Corpus {
        participants,
        mut ingest_rejects,
    } = corpus;
    let mut kept = Vec::with_capacity(participants.len());
    for p in participants {
        let missing = p.missing_questions();
        if missing.is_empty() {
            kept.push(p);
        } else {
            ingest_rejects.push(Reject {
                id: p.id,
                line: 0,
                reason: RejectReason::Incomplete(missing),
            });
        }
    }
    Corpus {
        participants: kept,
        ingest_rejects,
    }
}

/// Write participants as JSON lines, the inverse of [`parse_corpus_reader`].
pub fn write_corpus(corpus: &Corpus, mut out: impl Write) -> Result<()> {
    for p in &corpus.participants {
        serde_json::to_writer(&mut out, p)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

type LineError = (Option<String>, RejectReason);

fn parse_line(line: &str) -> std::result::Result<ParticipantRecord, LineError> {
    let value: Value =
        serde_json::from_str(line).map_err(|e| (None, RejectReason::Malformed(e.to_string())))?;
    let obj = value
        .as_object()
        .ok_or_else(|| (None, RejectReason::Malformed("not a JSON object".into())))?;
    let id = match obj.get("id") {
        Some(Value::String(s)) if !s.is_empty() => s.clone(),
        Some(Value::Number(n)) => n.to_string(),
        Some(Value::Null) | None => {
            return Err((None, RejectReason::MissingField("id".into())));
        }
        Some(_) => return Err((None, RejectReason::Invalid("id must be a string".into()))),
    };
    parse_record(id.clone(), obj).map_err(|r| (Some(id), r))
}

fn field<'a>(
    obj: &'a Map<String, Value>,
    path: &str,
    key: &str,
) -> Result<&'a Value, RejectReason> {
    match obj.get(key) {
        None | Some(Value::Null) => Err(RejectReason::MissingField(qualify(path, key))),
        Some(v) => Ok(v),
    }
}

fn qualify(path: &str, key: &str) -> String {
    if path.is_empty() {
        key.to_string()
    } else {
        format!("{path}.{key}")
    }
}

fn number(obj: &Map<String, Value>, path: &str, key: &str) -> Result<f64, RejectReason> {
    let v = field(obj, path, key)?;
    v.as_f64()
        .filter(|x| x.is_finite())
        .ok_or_else(|| RejectReason::Invalid(format!("{} must be a number", qualify(path, key))))
}

fn nonneg(obj: &Map<String, Value>, path: &str, key: &str) -> Result<f64, RejectReason> {
    let x = number(obj, path, key)?;
    if x < 0.0 {
        return Err(RejectReason::Invalid(format!(
            "{} must be >= 0",
            qualify(path, key)
        )));
    }
    Ok(x)
}

fn object<'a>(
    obj: &'a Map<String, Value>,
    path: &str,
    key: &str,
) -> Result<&'a Map<String, Value>, RejectReason> {
    field(obj, path, key)?
        .as_object()
        .ok_or_else(|| RejectReason::Invalid(format!("{} must be an object", qualify(path, key))))
}

fn enumerated<T: for<'de> Deserialize<'de>>(
    obj: &Map<String, Value>,
    path: &str,
    key: &str,
) -> Result<T, RejectReason> {
    let v = field(obj, path, key)?;
    serde_json::from_value(v.clone())
        .map_err(|e| RejectReason::Invalid(format!("{}: {e}", qualify(path, key))))
}

fn parse_record(id: String, obj: &Map<String, Value>) -> Result<ParticipantRecord, RejectReason> {
    let demo = object(obj, "", "demographics")?;
    let age = number(demo, "demographics", "age")?;
    if age <= 0.0 {
        return Err(RejectReason::Invalid("demographics.age must be > 0".into()));
    }
    let demographics = Demographics {
        age,
        gender: enumerated(demo, "demographics", "gender")?,
        education: enumerated(demo, "demographics", "education")?,
        professionally_active: enumerated(demo, "demographics", "professionally_active")?,
    };

    let clin = object(obj, "", "clinical")?;
    let pathologies: BTreeSet<Pathology> = enumerated(clin, "clinical", "pathologies")?;
    if pathologies.is_empty() {
        return Err(RejectReason::MissingField("clinical.pathologies".into()));
    }
    let clinical = Clinical {
        pathologies,
        years_since_diagnosis: nonneg(clin, "clinical", "years_since_diagnosis")?,
        years_since_pain: nonneg(clin, "clinical", "years_since_pain")?,
        esr: nonneg(clin, "clinical", "esr")?,
        crp: nonneg(clin, "clinical", "crp")?,
    };

    let interviewer = enumerated(obj, "", "interviewer")?;
    let vas_pain = number(obj, "", "vas_pain")?;
    let pain_class =
        discretize_vas(vas_pain).map_err(|e| RejectReason::Invalid(format!("vas_pain: {e}")))?;
    let vas_disease = number(obj, "", "vas_disease")?;
    if !(0.0..=10.0).contains(&vas_disease) {
        return Err(RejectReason::Invalid("vas_disease outside [0, 10]".into()));
    }

    let raw_segments = field(obj, "", "segments")?
        .as_array()
        .ok_or_else(|| RejectReason::Invalid("segments must be an array".into()))?;
    let mut segments = Vec::with_capacity(raw_segments.len());
    for (i, seg) in raw_segments.iter().enumerate() {
        let path = format!("segments[{i}]");
        let seg = seg
            .as_object()
            .ok_or_else(|| RejectReason::Invalid(format!("{path} must be an object")))?;
        segments.push(parse_segment(seg, &path)?);
    }

    Ok(ParticipantRecord {
        id,
        demographics,
        clinical,
        interviewer,
        vas_pain,
        vas_disease,
        segments,
        pain_class,
    })
}

fn parse_segment(seg: &Map<String, Value>, path: &str) -> Result<Segment, RejectReason> {
    let question_id = field(seg, path, "question_id")?
        .as_u64()
        .filter(|q| (1..=N_QUESTIONS as u64).contains(q))
        .ok_or_else(|| {
            RejectReason::Invalid(format!("{path}.question_id must be an integer in 1..=7"))
        })? as u8;
    let duration_s = nonneg(seg, path, "duration_s")?;
    let raw_tokens = field(seg, path, "tokens")?
        .as_array()
        .ok_or_else(|| RejectReason::Invalid(format!("{path}.tokens must be an array")))?;
    let mut tokens = Vec::with_capacity(raw_tokens.len());
    for (j, tok) in raw_tokens.iter().enumerate() {
        let tpath = format!("{path}.tokens[{j}]");
        let tok = tok
            .as_object()
            .ok_or_else(|| RejectReason::Invalid(format!("{tpath} must be an object")))?;
        let text = |key: &str| -> Result<String, RejectReason> {
            field(tok, &tpath, key)?
                .as_str()
                .map(str::to_owned)
                .ok_or_else(|| RejectReason::Invalid(format!("{tpath}.{key} must be a string")))
        };
        let surface = text("surface")?;
        let lemma = text("lemma")?;
        if lemma.is_empty()
            || lemma.chars().any(char::is_whitespace)
            || lemma != lemma.to_lowercase()
        {
            return Err(RejectReason::Invalid(format!(
                "{tpath}.lemma {lemma:?} must be non-empty, lowercase, without whitespace"
            )));
        }
        let pos_str = text("pos")?;
        let pos = PosTag::parse(&pos_str).ok_or_else(|| {
            RejectReason::Invalid(format!("{tpath}.pos: unknown tag {pos_str:?}"))
        })?;
        tokens.push(Token {
            surface,
            lemma,
            pos,
        });
    }
    Ok(Segment {
        question_id,
        duration_s,
        tokens,
    })
}
