//! Summaries of the features chosen under leave-one-out: their part-of-speech
//! make-up, per-class mean weights and the most weighted words per tag.

use std::collections::BTreeMap;
use std::io::Write;

use serde::Serialize;

use crate::corpus::{PainClass, PosTag};
use crate::error::Result;
use crate::eval::{tally_selected, EvalReport, FeatureCount};
use crate::features::{parse_term_name, FeatureMatrix};

/// Bucket for selected features that are not lemma+POS terms.
pub const OTHER: &str = "OTHER";

/// Union of the per-fold selections with fold counts, by count descending
/// then name.
pub fn aggregate_selected(report: &EvalReport) -> Vec<FeatureCount> {
    tally_selected(report.folds.iter().map(|f| f.selected_features.as_slice()))
}

/// Fraction of `features` carrying each POS tag; names that do not parse as
/// `lemma|POS` count under [`OTHER`].
pub fn pos_distribution<S: AsRef<str>>(features: &[S]) -> BTreeMap<String, f64> {
    let mut counts: BTreeMap<String, usize> = BTreeMap::new();
    for f in features {
        let key = match parse_term_name(f.as_ref()) {
            Some((_, tag)) => tag.as_str().to_string(),
            None => {
                log::debug!("{} is not a lemma|POS term; counted as {OTHER}", f.as_ref());
                OTHER.to_string()
            }
        };
        *counts.entry(key).or_default() += 1;
    }
    let n = features.len() as f64;
    counts.into_iter().map(|(k, c)| (k, c as f64 / n)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum GroupBy {
    Pos,
    Word,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassWeight {
    pub class: PainClass,
    pub group: String,
    pub value: f64,
}

fn group_key(name: &str, by: GroupBy) -> Option<String> {
    let (lemma, tag) = parse_term_name(name)?;
    Some(match by {
        GroupBy::Pos => tag.as_str().to_string(),
        GroupBy::Word => format!("{lemma}|{tag}"),
    })
}

/// Mean weight per pain class and group: the average, over the class's
/// participants and the group's features, of the matrix entries. Features
/// missing from `m` or not parseable as terms are skipped; classes without
/// participants are omitted.
pub fn class_mean_weights<S: AsRef<str>>(
    m: &FeatureMatrix,
    y: &[PainClass],
    features: &[S],
    by: GroupBy,
) -> Vec<ClassWeight> {
    let mut groups: BTreeMap<String, Vec<usize>> = BTreeMap::new();
    for f in features {
        let f = f.as_ref();
        match (group_key(f, by), m.column_index(f)) {
            (Some(g), Some(j)) => groups.entry(g).or_default().push(j),
            (_, None) => log::warn!("feature {f} not in matrix; skipped"),
            (None, _) => {}
        }
    }
    let mut out = Vec::new();
    for class in PainClass::ALL {
        let rows: Vec<usize> = (0..y.len()).filter(|&i| y[i] == class).collect();
        if rows.is_empty() {
            continue;
        }
        for (g, cols) in &groups {
            let total: f64 = rows
                .iter()
                .flat_map(|&i| cols.iter().map(move |&j| (i, j)))
                .map(|(i, j)| m.values[[i, j]])
                .sum();
            out.push(ClassWeight {
                class,
                group: g.clone(),
                value: total / (rows.len() * cols.len()) as f64,
            });
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WordWeight {
    pub word: String,
    pub weight: f64,
}

/// Per tag, the `n` words with the highest mean weight over all participants
/// (ties by word).
pub fn top_words_per_pos<S: AsRef<str>>(
    m: &FeatureMatrix,
    features: &[S],
    n: usize,
) -> BTreeMap<PosTag, Vec<WordWeight>> {
    let mut by_tag: BTreeMap<PosTag, Vec<WordWeight>> = BTreeMap::new();
    for f in features {
        let f = f.as_ref();
        let (Some((lemma, tag)), Some(j)) = (parse_term_name(f), m.column_index(f)) else {
            continue;
        };
        let col = m.values.column(j);
        let weight = col.sum() / col.len().max(1) as f64;
        by_tag.entry(tag).or_default().push(WordWeight {
            word: lemma.to_string(),
            weight,
        });
    }
    for words in by_tag.values_mut() {
        words.sort_by(|a, b| {
            b.weight
                .total_cmp(&a.weight)
                .then_with(|| a.word.cmp(&b.word))
        });
        words.truncate(n);
    }
    by_tag.retain(|_, v| !v.is_empty());
    by_tag
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InterpretReport {
    pub unique_selected: Vec<FeatureCount>,
    pub pos_fraction: BTreeMap<String, f64>,
    pub class_pos_weight: Vec<ClassWeight>,
    pub top_words: BTreeMap<PosTag, Vec<WordWeight>>,
    /// Per-class weights of the words listed in `top_words`.
    pub class_word_weight: Vec<ClassWeight>,
}

/// Interpret the selections of `report` against a feature matrix `m` fitted
/// on the whole corpus, with `y` aligned to its rows.
pub fn interpret(
    report: &EvalReport,
    m: &FeatureMatrix,
    y: &[PainClass],
    top_n: usize,
) -> InterpretReport {
    let unique = aggregate_selected(report);
    let names: Vec<&str> = unique.iter().map(|f| f.name.as_str()).collect();
    let top_words = top_words_per_pos(m, &names, top_n);
    let top_names: Vec<String> = top_words
        .iter()
        .flat_map(|(tag, ws)| ws.iter().map(move |w| format!("tfidf:{}|{tag}", w.word)))
        .collect();
    InterpretReport {
        pos_fraction: pos_distribution(&names),
        class_pos_weight: class_mean_weights(m, y, &names, GroupBy::Pos),
        class_word_weight: class_mean_weights(m, y, &top_names, GroupBy::Word),
        top_words,
        unique_selected: unique,
    }
}

impl InterpretReport {
    pub fn write_pos_distribution(&self, out: impl Write) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["pos", "fraction"])?;
        for (tag, f) in &self.pos_fraction {
            w.write_record([tag.clone(), format!("{f:.6}")])?;
        }
        w.flush()?;
        Ok(())
    }

    fn write_class_weights(rows: &[ClassWeight], group: &str, out: impl Write) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["class", group, "value"])?;
        for r in rows {
            w.write_record([
                r.class.as_str().to_string(),
                r.group.clone(),
                format!("{:.6}", r.value),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_class_pos(&self, out: impl Write) -> Result<()> {
        Self::write_class_weights(&self.class_pos_weight, "pos", out)
    }

    pub fn write_class_word(&self, out: impl Write) -> Result<()> {
        Self::write_class_weights(&self.class_word_weight, "word", out)
    }

    pub fn write_top_words(&self, out: impl Write) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["pos", "rank", "word", "weight"])?;
        for (tag, words) in &self.top_words {
            for (i, ww) in words.iter().enumerate() {
                w.write_record([
                    tag.as_str().to_string(),
                    (i + 1).to_string(),
                    ww.word.clone(),
                    format!("{:.6}", ww.weight),
                ])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}
