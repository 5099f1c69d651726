//! The four feature families (verbosity, lemma+POS TF-IDF, POS TF-IDF and
//! topic distribution), zero-variance filtering and early fusion.

mod matrix;
mod stopwords;
mod tfidf;
mod topics;
mod verbosity;

pub use matrix::{
    drop_zero_variance, early_fusion, nonconstant_columns, FeatureMatrix, FeatureSet,
};
pub use stopwords::StopWords;
pub use tfidf::{build_terms, pos_terms, pos_tfidf, pos_vocabulary, TermCounts, TfidfModel};
pub use topics::{topic_fit, NmfParams, TopicModel};
pub use verbosity::{verbosity_features, Verbosity, VERBOSITY_NAMES};

use ndarray::Array2;
use serde::Serialize;

use crate::corpus::ParticipantRecord;
use crate::error::Result;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FeatureConfig {
    pub stopwords: StopWords,
    pub n_topics: usize,
    pub nmf_max_iter: usize,
    pub nmf_tol: f64,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        FeatureConfig {
            stopwords: StopWords::portuguese(),
            n_topics: 12,
            nmf_max_iter: 200,
            nmf_tol: 1e-6,
        }
    }
}

/// One matrix per feature family, rows aligned.
#[derive(Debug, Clone, PartialEq)]
pub struct FamilyMatrices {
    pub verbosity: FeatureMatrix,
    pub tfidf: FeatureMatrix,
    pub pos_tfidf: FeatureMatrix,
    pub topics: FeatureMatrix,
}

impl FamilyMatrices {
    pub fn get(&self, set: FeatureSet) -> &FeatureMatrix {
        match set {
            FeatureSet::Verbosity => &self.verbosity,
            FeatureSet::TfIdf => &self.tfidf,
            FeatureSet::PosTfIdf => &self.pos_tfidf,
            FeatureSet::Topics => &self.topics,
        }
    }

    /// All four families concatenated (verbosity, TF-IDF, POS, topics).
    pub fn fused(&self) -> Result<FeatureMatrix> {
        early_fusion(&[
            self.verbosity.clone(),
            self.tfidf.clone(),
            self.pos_tfidf.clone(),
            self.topics.clone(),
        ])
    }
}

/// The fitted state behind the corpus-dependent feature families.
#[derive(Debug, Clone)]
pub struct FeatureExtractor {
    pub tfidf: TfidfModel,
    pub pos: TfidfModel,
    pub topics: TopicModel,
    stopwords: StopWords,
}

impl FeatureExtractor {
    pub fn fit(records: &[&ParticipantRecord], config: &FeatureConfig, seed: u64) -> Result<Self> {
        let docs: Vec<TermCounts> = records
            .iter()
            .map(|p| build_terms(p, &config.stopwords))
            .collect();
        let tfidf = TfidfModel::fit(&docs)?;
        let pos_docs: Vec<TermCounts> = records.iter().map(|p| pos_terms(p)).collect();
        let pos = TfidfModel::fit_with_vocabulary(&pos_docs, &pos_vocabulary())?;
        let topics = topic_fit(
            &tfidf.transform_many(&docs),
            NmfParams {
                k: config.n_topics,
                max_iter: config.nmf_max_iter,
                tol: config.nmf_tol,
                seed,
            },
        )?;
        Ok(FeatureExtractor {
            tfidf,
            pos,
            topics,
            stopwords: config.stopwords.clone(),
        })
    }

    pub fn transform(&self, records: &[&ParticipantRecord]) -> Result<FamilyMatrices> {
        let ids: Vec<String> = records.iter().map(|p| p.id.clone()).collect();
        let verbosity = verbosity_matrix(records)?;

        let docs: Vec<TermCounts> = records
            .iter()
            .map(|p| build_terms(p, &self.stopwords))
            .collect();
        let tf = self.tfidf.transform_many(&docs);
        let topic_values = self.topics.transform(&tf)?;
        let tfidf = FeatureMatrix::uniform(
            ids.clone(),
            prefixed(FeatureSet::TfIdf, self.tfidf.terms()),
            FeatureSet::TfIdf,
            tf,
        )?;

        let pos_docs: Vec<TermCounts> = records.iter().map(|p| pos_terms(p)).collect();
        let pos_tfidf = FeatureMatrix::uniform(
            ids.clone(),
            prefixed(FeatureSet::PosTfIdf, self.pos.terms()),
            FeatureSet::PosTfIdf,
            self.pos.transform_many(&pos_docs),
        )?;

        let topic_names: Vec<String> = (0..self.topics.k)
            .map(|i| format!("{}{i:02}", FeatureSet::Topics.prefix()))
            .collect();
        let topics = FeatureMatrix::uniform(ids, topic_names, FeatureSet::Topics, topic_values)?;

        Ok(FamilyMatrices {
            verbosity,
            tfidf,
            pos_tfidf,
            topics,
        })
    }
}

fn prefixed(set: FeatureSet, names: &[String]) -> Vec<String> {
    names
        .iter()
        .map(|n| format!("{}{n}", set.prefix()))
        .collect()
}

pub fn verbosity_matrix(records: &[&ParticipantRecord]) -> Result<FeatureMatrix> {
    let mut values = Array2::zeros((records.len(), 3));
    for (i, p) in records.iter().enumerate() {
        for (j, v) in verbosity_features(p).to_array().into_iter().enumerate() {
            values[[i, j]] = v;
        }
    }
    FeatureMatrix::uniform(
        records.iter().map(|p| p.id.clone()).collect(),
        VERBOSITY_NAMES
            .iter()
            .map(|n| format!("{}{n}", FeatureSet::Verbosity.prefix()))
            .collect(),
        FeatureSet::Verbosity,
        values,
    )
}

/// Split a TF-IDF feature name (`tfidf:lemma|POS` or bare `lemma|POS`) into
/// its lemma and tag.
pub fn parse_term_name(name: &str) -> Option<(&str, crate::corpus::PosTag)> {
    let bare = name
        .strip_prefix(FeatureSet::TfIdf.prefix())
        .unwrap_or(name);
    let (lemma, tag) = bare.rsplit_once('|')?;
    if lemma.is_empty() {
        return None;
    }
    Some((lemma, crate::corpus::PosTag::parse(tag)?))
}
