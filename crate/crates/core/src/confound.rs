//! Demographic and clinical confounds: their association with pain intensity,
//! and screening of language features that depend on them.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, PainClass, ParticipantRecord, Pathology};
use crate::error::{Error, Result};
use crate::eval::{
    evaluate_folds, subgroup_scores, ColumnScreen, EvalConfig, EvalReport, FeatureSetId, FoldData,
    SubgroupScores,
};
use crate::features::{FeatureMatrix, FeatureSet};
use crate::models::ModelKind;
use crate::stats::{
    chi_square_independence, one_way_anova, one_way_anova_summary, pearson_r, TestResult,
};

pub const P_THRESHOLD: f64 = 0.05;
pub const R_THRESHOLD: f64 = 0.7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ConfoundKind {
    Categorical,
    Continuous,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Confound {
    Age,
    Gender,
    Education,
    ProfessionallyActive,
    Interviewer,
    Pathology,
    YearsSinceDiagnosis,
    YearsSincePain,
    Esr,
    Crp,
}

impl Confound {
    pub const ALL: [Confound; 10] = [
        Confound::Age,
        Confound::Gender,
        Confound::Education,
        Confound::ProfessionallyActive,
        Confound::Interviewer,
        Confound::Pathology,
        Confound::YearsSinceDiagnosis,
        Confound::YearsSincePain,
        Confound::Esr,
        Confound::Crp,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Confound::Age => "age",
            Confound::Gender => "gender",
            Confound::Education => "education",
            Confound::ProfessionallyActive => "professionally_active",
            Confound::Interviewer => "interviewer",
            Confound::Pathology => "pathology",
            Confound::YearsSinceDiagnosis => "years_since_diagnosis",
            Confound::YearsSincePain => "years_since_pain",
            Confound::Esr => "esr",
            Confound::Crp => "crp",
        }
    }

    pub fn kind(self) -> ConfoundKind {
        match self {
            Confound::Gender
            | Confound::Education
            | Confound::ProfessionallyActive
            | Confound::Interviewer
            | Confound::Pathology => ConfoundKind::Categorical,
            _ => ConfoundKind::Continuous,
        }
    }

    /// All levels of a categorical confound, in report order. Empty for
    /// continuous confounds.
    pub fn levels(self) -> Vec<String> {
        let s = |v: &[&str]| v.iter().map(|x| x.to_string()).collect();
        match self {
            Confound::Gender => s(&["F", "M"]),
            Confound::Education => s(&["basic", "high_school"]),
            Confound::ProfessionallyActive => s(&["active", "not_active"]),
            Confound::Interviewer => s(&["I1", "I2", "I3"]),
            Confound::Pathology => Pathology::ALL
                .iter()
                .map(|p| p.code().to_string())
                .collect(),
            _ => Vec::new(),
        }
    }

    /// The levels a participant belongs to (several for comorbid pathology).
    pub fn levels_of(self, p: &ParticipantRecord) -> Vec<String> {
        match self {
            Confound::Gender => vec![label(&p.demographics.gender)],
            Confound::Education => vec![label(&p.demographics.education)],
            Confound::ProfessionallyActive => vec![label(&p.demographics.professionally_active)],
            Confound::Interviewer => vec![label(&p.interviewer)],
            Confound::Pathology => p
                .clinical
                .pathologies
                .iter()
                .map(|x| x.code().to_string())
                .collect(),
            _ => Vec::new(),
        }
    }

    pub fn value_of(self, p: &ParticipantRecord) -> Option<f64> {
        match self {
            Confound::Age => Some(p.demographics.age),
            Confound::YearsSinceDiagnosis => Some(p.clinical.years_since_diagnosis),
            Confound::YearsSincePain => Some(p.clinical.years_since_pain),
            Confound::Esr => Some(p.clinical.esr),
            Confound::Crp => Some(p.clinical.crp),
            _ => None,
        }
    }
}

/// The JSON string form of a unit enum value.
fn label<T: Serialize>(v: &T) -> String {
    match serde_json::to_value(v) {
        Ok(serde_json::Value::String(s)) => s,
        Ok(other) => other.to_string(),
        Err(_) => String::new(),
    }
}

impl fmt::Display for Confound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Confound {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Confound::ALL
            .iter()
            .copied()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown confound {s:?}")))
    }
}

/// Per-participant values of one screening variable.
#[derive(Debug, Clone, PartialEq)]
pub enum ConfoundValues {
    Categorical(Vec<String>),
    Continuous(Vec<f64>),
}

impl ConfoundValues {
    fn len(&self) -> usize {
        match self {
            ConfoundValues::Categorical(v) => v.len(),
            ConfoundValues::Continuous(v) => v.len(),
        }
    }
}

/// The screening variables of a confound. Pathology yields one binary
/// indicator per pathology; every other confound yields a single variable.
pub fn screening_variables(
    confound: Confound,
    records: &[&ParticipantRecord],
) -> Vec<(String, ConfoundValues)> {
    match confound.kind() {
        ConfoundKind::Continuous => vec![(
            confound.name().to_string(),
            ConfoundValues::Continuous(
                records
                    .iter()
                    .map(|p| confound.value_of(p).unwrap_or(f64::NAN))
                    .collect(),
            ),
        )],
        ConfoundKind::Categorical if confound == Confound::Pathology => Pathology::ALL
            .iter()
            .map(|&path| {
                let v = records
                    .iter()
                    .map(|p| {
                        (if p.clinical.pathologies.contains(&path) {
                            "yes"
                        } else {
                            "no"
                        })
                        .to_string()
                    })
                    .collect();
                (
                    format!("pathology:{}", path.code()),
                    ConfoundValues::Categorical(v),
                )
            })
            .collect(),
        ConfoundKind::Categorical => vec![(
            confound.name().to_string(),
            ConfoundValues::Categorical(
                records
                    .iter()
                    .map(|p| confound.levels_of(p).into_iter().next().unwrap_or_default())
                    .collect(),
            ),
        )],
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConfoundTest {
    pub confound: Confound,
    pub kind: ConfoundKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub result: Option<TestResult>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub warning: Option<String>,
}

fn confound_test(confound: Confound, res: Result<TestResult>) -> ConfoundTest {
    match res {
        Ok(r) => ConfoundTest {
            confound,
            kind: confound.kind(),
            warning: r.warning.clone(),
            result: Some(r),
        },
        Err(e) => {
            log::warn!("{confound}: {e}");
            ConfoundTest {
                confound,
                kind: confound.kind(),
                result: None,
                warning: Some(e.to_string()),
            }
        }
    }
}

/// Association of each confound with the pain class: one-way ANOVA for
/// continuous confounds, χ² independence for categorical ones. Degenerate
/// tests are reported with a warning instead of failing.
pub fn intensity_confound_report(corpus: &Corpus) -> Result<Vec<ConfoundTest>> {
    let present: Vec<PainClass> = PainClass::ALL
        .iter()
        .copied()
        .filter(|c| corpus.participants.iter().any(|p| p.pain_class == *c))
        .collect();
    if present.len() < 2 {
        return Err(Error::invalid(
            "confound report needs at least 2 pain classes",
        ));
    }
    Ok(Confound::ALL
        .iter()
        .map(|&c| {
            let res = match c.kind() {
                ConfoundKind::Continuous => {
                    let groups: Vec<Vec<f64>> = present
                        .iter()
                        .map(|&k| {
                            corpus
                                .participants
                                .iter()
                                .filter(|p| p.pain_class == k)
                                .filter_map(|p| c.value_of(p))
                                .collect()
                        })
                        .collect();
                    one_way_anova(&groups)
                }
                ConfoundKind::Categorical => {
                    let table: Vec<Vec<u64>> = c
                        .levels()
                        .iter()
                        .map(|level| {
                            present
                                .iter()
                                .map(|&k| {
                                    corpus
                                        .participants
                                        .iter()
                                        .filter(|p| {
                                            p.pain_class == k && c.levels_of(p).contains(level)
                                        })
                                        .count() as u64
                                })
                                .collect()
                        })
                        .filter(|row: &Vec<u64>| row.iter().any(|&x| x > 0))
                        .collect();
                    chi_square_independence(&table)
                }
            };
            confound_test(c, res)
        })
        .collect())
}

/// Per-class summary statistics of a cohort, as tabulated in a study's
/// descriptive table.
#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct CohortSummary {
    pub classes: Vec<PainClass>,
    pub n: Vec<usize>,
    pub continuous: BTreeMap<Confound, MeanSd>,
    /// Confound → level → count per class.
    pub categorical: BTreeMap<Confound, BTreeMap<String, Vec<u64>>>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct MeanSd {
    pub mean: Vec<f64>,
    pub sd: Vec<f64>,
}

/// The bundled descriptive table of the reference cohort (65 participants).
pub fn reference_cohort() -> CohortSummary {
    serde_json::from_str(include_str!("../fixtures/table2.json")).expect("bundled fixture parses")
}

/// [`intensity_confound_report`] computed from summary statistics alone.
pub fn summary_confound_report(s: &CohortSummary) -> Vec<ConfoundTest> {
    Confound::ALL
        .iter()
        .filter_map(|&c| match c.kind() {
            ConfoundKind::Continuous => s
                .continuous
                .get(&c)
                .map(|m| confound_test(c, one_way_anova_summary(&s.n, &m.mean, &m.sd))),
            ConfoundKind::Categorical => s.categorical.get(&c).map(|levels| {
                let table: Vec<Vec<u64>> = levels.values().cloned().collect();
                confound_test(c, chi_square_independence(&table))
            }),
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DroppedFeature {
    pub name: String,
    /// The screening variable that triggered the drop.
    pub variable: String,
    /// ANOVA F or Pearson r.
    pub statistic: f64,
    /// ANOVA p; absent for correlation screening.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScreenResult {
    pub confound: String,
    pub dropped: Vec<DroppedFeature>,
    /// One flag per input column; true when the column is kept.
    pub retained: Vec<bool>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl ScreenResult {
    pub fn dropped_names(&self) -> BTreeSet<String> {
        self.dropped.iter().map(|d| d.name.clone()).collect()
    }
}

fn is_constant(col: &[f64]) -> bool {
    col.iter().all(|&v| v == col[0])
}

/// Drop the columns of `m` that depend on one screening variable: ANOVA
/// `p < .05` across levels for categorical values, `|r| > .7` for continuous
/// ones. Constant columns are always retained. Labels are never consulted.
pub fn screen_features(
    m: &FeatureMatrix,
    name: &str,
    values: &ConfoundValues,
) -> Result<ScreenResult> {
    if values.len() != m.n_rows() {
        return Err(Error::ParticipantMismatch);
    }
    let mut out = ScreenResult {
        confound: name.to_string(),
        dropped: Vec::new(),
        retained: vec![true; m.n_cols()],
        warnings: Vec::new(),
    };
    let warn = |out: &mut ScreenResult, msg: String| {
        log::warn!("{msg}");
        out.warnings.push(msg);
    };
    match values {
        ConfoundValues::Categorical(levels) => {
            let distinct: BTreeSet<&String> = levels.iter().collect();
            if distinct.len() < 2 {
                warn(&mut out, format!("{name}: single level; nothing screened"));
                return Ok(out);
            }
            for (j, col) in m.values.columns().into_iter().enumerate() {
                let col = col.to_vec();
                if is_constant(&col) {
                    continue;
                }
                let groups: Vec<Vec<f64>> = distinct
                    .iter()
                    .map(|&l| {
                        col.iter()
                            .zip(levels)
                            .filter(|(_, x)| *x == l)
                            .map(|(&v, _)| v)
                            .collect()
                    })
                    .collect();
                let t = one_way_anova(&groups)?;
                if t.p < P_THRESHOLD {
                    out.retained[j] = false;
                    out.dropped.push(DroppedFeature {
                        name: m.feature_names[j].clone(),
                        variable: name.to_string(),
                        statistic: t.statistic,
                        p: Some(t.p),
                    });
                }
            }
        }
        ConfoundValues::Continuous(x) => {
            if x.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite("confound values"));
            }
            if is_constant(x) {
                warn(
                    &mut out,
                    format!("{name}: constant values; nothing screened"),
                );
                return Ok(out);
            }
            for (j, col) in m.values.columns().into_iter().enumerate() {
                let col = col.to_vec();
                if is_constant(&col) {
                    continue;
                }
                let r = pearson_r(&col, x)?;
                if r.abs() > R_THRESHOLD {
                    out.retained[j] = false;
                    out.dropped.push(DroppedFeature {
                        name: m.feature_names[j].clone(),
                        variable: name.to_string(),
                        statistic: r,
                        p: None,
                    });
                }
            }
        }
    }
    Ok(out)
}

/// Screen `m` against every variable of `confound` and merge the results: a
/// column is dropped when any variable drops it.
pub fn screen_confound(
    m: &FeatureMatrix,
    confound: Confound,
    records: &[&ParticipantRecord],
) -> Result<ScreenResult> {
    let mut merged = ScreenResult {
        confound: confound.name().to_string(),
        dropped: Vec::new(),
        retained: vec![true; m.n_cols()],
        warnings: Vec::new(),
    };
    for (name, values) in screening_variables(confound, records) {
        let r = screen_features(m, &name, &values)?;
        for d in r.dropped {
            let j = m.column_index(&d.name).expect("dropped name comes from m");
            if merged.retained[j] {
                merged.retained[j] = false;
                merged.dropped.push(d);
            }
        }
        merged.warnings.extend(r.warnings);
    }
    merged.dropped.sort_by_key(|d| m.column_index(&d.name));
    Ok(merged)
}

/// Screens each fold's training matrix with the training participants'
/// confound values.
pub struct PerFoldScreen<'a> {
    pub confound: Confound,
    pub corpus: &'a Corpus,
}

impl ColumnScreen for PerFoldScreen<'_> {
    fn excluded(&self, train: &FeatureMatrix, train_idx: &[usize]) -> Result<BTreeSet<String>> {
        let records: Vec<&ParticipantRecord> = train_idx
            .iter()
            .map(|&i| &self.corpus.participants[i])
            .collect();
        Ok(screen_confound(train, self.confound, &records)?.dropped_names())
    }
}

/// A screen decided once on the whole corpus. Topic columns are refitted in
/// every fold, so a global decision about `topic:NN` says nothing about the
/// fold's column of that name; when `refit_topics` is set those columns are
/// screened on the fold's training rows instead.
pub struct GlobalScreen<'a> {
    pub dropped: BTreeSet<String>,
    pub refit_topics: Option<PerFoldScreen<'a>>,
}

impl ColumnScreen for GlobalScreen<'_> {
    fn excluded(&self, train: &FeatureMatrix, train_idx: &[usize]) -> Result<BTreeSet<String>> {
        let mut out = self.dropped.clone();
        if let Some(per_fold) = &self.refit_topics {
            out.retain(|n| !n.starts_with(FeatureSet::Topics.prefix()));
            let cols: Vec<usize> = (0..train.n_cols())
                .filter(|&j| train.feature_set[j] == FeatureSet::Topics)
                .collect();
            if !cols.is_empty() {
                out.extend(per_fold.excluded(&train.select_columns(&cols), train_idx)?);
            }
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScreenedComparison {
    pub confound: Confound,
    /// Global screen; absent in per-fold mode.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub screen: Option<ScreenResult>,
    pub zrb: SubgroupScores,
    pub all_features: SubgroupScores,
    pub select_features: SubgroupScores,
    #[serde(skip)]
    pub select_report: EvalReport,
}

fn subgroups(report: &EvalReport, corpus: &Corpus, confound: Confound) -> Result<SubgroupScores> {
    let by_id: BTreeMap<&str, &ParticipantRecord> = corpus
        .participants
        .iter()
        .map(|p| (p.id.as_str(), p))
        .collect();
    subgroup_scores(report, &confound.levels(), |id| {
        by_id
            .get(id)
            .map(|p| confound.levels_of(p))
            .unwrap_or_default()
    })
}

/// Compare a model trained on all features with one trained only on the
/// features that survive screening for `confound`, overall and per level.
///
/// `global` is the fused feature matrix fitted on the whole corpus; it is
/// screened once (see [`GlobalScreen`] for topic columns) unless `per_fold`
/// is set, in which case every fold screens its own training matrix.
#[allow(clippy::too_many_arguments)]
pub fn screened_comparison(
    corpus: &Corpus,
    folds: &[FoldData],
    global: &FeatureMatrix,
    set: FeatureSetId,
    kind: ModelKind,
    confound: Confound,
    baseline: (&EvalReport, &EvalReport),
    config: &EvalConfig,
    per_fold: bool,
    seed: u64,
) -> Result<ScreenedComparison> {
    let (zrb, all) = baseline;
    let (screen, select) = if per_fold {
        let s = PerFoldScreen { confound, corpus };
        (
            None,
            evaluate_folds(corpus, folds, set, kind, config, &s, seed)?,
        )
    } else {
        let records: Vec<&ParticipantRecord> = corpus.participants.iter().collect();
        let s = screen_confound(global, confound, &records)?;
        let screen = GlobalScreen {
            dropped: s.dropped_names(),
            refit_topics: (!config.fit_features_globally)
                .then_some(PerFoldScreen { confound, corpus }),
        };
        let report = if screen.dropped.is_empty() && screen.refit_topics.is_none() {
            all.clone()
        } else {
            evaluate_folds(corpus, folds, set, kind, config, &screen, seed)?
        };
        (Some(s), report)
    };
    Ok(ScreenedComparison {
        confound,
        screen,
        zrb: subgroups(zrb, corpus, confound)?,
        all_features: subgroups(all, corpus, confound)?,
        select_features: subgroups(&select, corpus, confound)?,
        select_report: select,
    })
}

/// Table with rows ZRB / all features / select features / aggregate and one
/// column per confound level. The aggregate row repeats the select-features
/// aggregate under each level of its confound.
pub fn write_screen_table(
    comparisons: &[ScreenedComparison],
    out: impl std::io::Write,
) -> Result<()> {
    let mut columns: Vec<(usize, String)> = Vec::new();
    for (i, c) in comparisons.iter().enumerate() {
        let levels = c.confound.levels();
        if levels.is_empty() {
            columns.push((i, "all".into()));
        }
        columns.extend(levels.into_iter().map(|l| (i, l)));
    }
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["row".to_string()];
    header.extend(
        columns
            .iter()
            .map(|(i, l)| format!("{}:{l}", comparisons[*i].confound.name())),
    );
    w.write_record(&header)?;
    let cell = |s: &SubgroupScores, level: &str| {
        if level == "all" {
            return format!("{:.4}", s.aggregate);
        }
        s.levels
            .iter()
            .find(|(l, _)| l == level)
            .map_or(String::new(), |(_, v)| format!("{v:.4}"))
    };
    type Pick = fn(&ScreenedComparison) -> &SubgroupScores;
    let rows: [(&str, Pick); 3] = [
        ("ZRB", |c| &c.zrb),
        ("all features", |c| &c.all_features),
        ("select features", |c| &c.select_features),
    ];
    for (label, pick) in rows {
        let mut rec = vec![label.to_string()];
        rec.extend(columns.iter().map(|(i, l)| cell(pick(&comparisons[*i]), l)));
        w.write_record(&rec)?;
    }
    let mut rec = vec!["aggregate".to_string()];
    rec.extend(
        columns
            .iter()
            .map(|(i, _)| format!("{:.4}", comparisons[*i].select_features.aggregate)),
    );
    w.write_record(&rec)?;
    w.flush()?;
    Ok(())
}
