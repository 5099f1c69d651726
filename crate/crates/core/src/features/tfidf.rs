//! Smoothed TF-IDF: `tf · (ln((1 + N) / (1 + df)) + 1)`, rows L2-normalized.

use std::collections::BTreeMap;

use ndarray::{Array1, Array2};
use serde::Serialize;

use super::StopWords;
use crate::corpus::{ParticipantRecord, PosTag};
use crate::error::{Error, Result};

/// Term → count.
pub type TermCounts = BTreeMap<String, usize>;

/// `lemma|POS` terms of a participant's narrative, stop-word lemmas removed.
pub fn build_terms(p: &ParticipantRecord, stopwords: &StopWords) -> TermCounts {
    let mut terms = TermCounts::new();
    for tok in p.tokens() {
        if stopwords.contains(&tok.lemma) {
            continue;
        }
        *terms
            .entry(format!("{}|{}", tok.lemma, tok.pos))
            .or_default() += 1;
    }
    terms
}

/// POS-tag counts of a participant's narrative (every token, stop-words included).
pub fn pos_terms(p: &ParticipantRecord) -> TermCounts {
    let mut terms = TermCounts::new();
    for tok in p.tokens() {
        *terms.entry(tok.pos.as_str().to_string()).or_default() += 1;
    }
    terms
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TfidfModel {
    /// Term → column index; columns follow the map's (lexicographic) order
    /// unless the vocabulary was fixed up front.
    pub vocabulary: BTreeMap<String, usize>,
    /// Document frequency per column.
    pub doc_freq: Vec<usize>,
    pub n_docs: usize,
    idf: Vec<f64>,
    terms: Vec<String>,
}

impl TfidfModel {
    pub fn fit(docs: &[TermCounts]) -> Result<Self> {
        if docs.is_empty() {
            return Err(Error::invalid("TF-IDF needs at least one document"));
        }
        let mut df: BTreeMap<&str, usize> = BTreeMap::new();
        for doc in docs {
            for (term, &c) in doc {
                if c > 0 {
                    *df.entry(term).or_default() += 1;
                }
            }
        }
        if df.is_empty() {
            return Err(Error::EmptyVocabulary);
        }
        let terms: Vec<String> = df.keys().map(|t| t.to_string()).collect();
        let doc_freq: Vec<usize> = df.values().copied().collect();
        Ok(Self::build(terms, doc_freq, docs.len()))
    }

    /// Fit with a vocabulary fixed a priori; terms outside it are ignored and
    /// every vocabulary column exists even if no document uses it.
    pub fn fit_with_vocabulary(docs: &[TermCounts], vocabulary: &[&str]) -> Result<Self> {
        if docs.is_empty() {
            return Err(Error::invalid("TF-IDF needs at least one document"));
        }
        if vocabulary.is_empty() {
            return Err(Error::EmptyVocabulary);
        }
        let doc_freq = vocabulary
            .iter()
            .map(|t| {
                docs.iter()
                    .filter(|d| d.get(*t).is_some_and(|&c| c > 0))
                    .count()
            })
            .collect();
        let terms = vocabulary.iter().map(|t| t.to_string()).collect();
        Ok(Self::build(terms, doc_freq, docs.len()))
    }

    fn build(terms: Vec<String>, doc_freq: Vec<usize>, n_docs: usize) -> Self {
        let n = n_docs as f64;
        let idf = doc_freq
            .iter()
            .map(|&df| ((1.0 + n) / (1.0 + df as f64)).ln() + 1.0)
            .collect();
        let vocabulary = terms
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i))
            .collect();
        TfidfModel {
            vocabulary,
            doc_freq,
            n_docs,
            idf,
            terms,
        }
    }

    pub fn n_terms(&self) -> usize {
        self.terms.len()
    }

    /// Terms in column order.
    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    pub fn idf(&self) -> &[f64] {
        &self.idf
    }

    /// L2-normalized weights; unseen terms are ignored and an empty result
    /// stays the zero vector.
    pub fn transform(&self, doc: &TermCounts) -> Array1<f64> {
        let mut v = Array1::zeros(self.n_terms());
        for (term, &c) in doc {
            if let Some(&j) = self.vocabulary.get(term) {
                v[j] = c as f64 * self.idf[j];
            }
        }
        let norm = v.dot(&v).sqrt();
        if norm > 0.0 {
            v /= norm;
        }
        v
    }

    pub fn transform_many(&self, docs: &[TermCounts]) -> Array2<f64> {
        let mut m = Array2::zeros((docs.len(), self.n_terms()));
        for (mut row, doc) in m.rows_mut().into_iter().zip(docs) {
            row.assign(&self.transform(doc));
        }
        m
    }
}

/// The 13 POS tags in column order.
pub fn pos_vocabulary() -> Vec<&'static str> {
    PosTag::ALL.iter().map(|t| t.as_str()).collect()
}

/// TF-IDF over POS-tag sequences with the fixed 13-tag vocabulary.
pub fn pos_tfidf(docs: &[Vec<PosTag>]) -> Result<(TfidfModel, Array2<f64>)> {
    let counts: Vec<TermCounts> = docs
        .iter()
        .map(|tags| {
            let mut c = TermCounts::new();
            for t in tags {
                *c.entry(t.as_str().to_string()).or_default() += 1;
            }
            c
        })
        .collect();
    let model = TfidfModel::fit_with_vocabulary(&counts, &pos_vocabulary())?;
    let m = model.transform_many(&counts);
    Ok((model, m))
}
