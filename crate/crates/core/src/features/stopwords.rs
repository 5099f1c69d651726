use std::collections::BTreeSet;
use std::path::Path;

use serde::Serialize;

use crate::error::Result;

const DEFAULT_PT: &str = include_str!("../../data/stopwords_pt.txt");

/// Lowercased stop-word lemmas.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize)]
pub struct StopWords(BTreeSet<String>);

impl StopWords {
    /// Parse a newline-delimited lemma list; `#` starts a comment.
    pub fn parse(text: &str) -> Self {
        StopWords(
            text.lines()
                .map(|l| l.split('#').next().unwrap_or("").trim())
                .filter(|l| !l.is_empty())
                .map(str::to_lowercase)
                .collect(),
        )
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        Ok(Self::parse(&std::fs::read_to_string(path)?))
    }

    /// The bundled Portuguese list.
    pub fn portuguese() -> Self {
        Self::parse(DEFAULT_PT)
    }

    pub fn contains(&self, lemma: &str) -> bool {
        self.0.contains(&lemma.to_lowercase())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl<S: Into<String>> FromIterator<S> for StopWords {
    fn from_iter<I: IntoIterator<Item = S>>(iter: I) -> Self {
        StopWords(iter.into_iter().map(|s| s.into().to_lowercase()).collect())
    }
}
