use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::io::{Read, Write};

use ndarray::{Array2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The feature family a column belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureSet {
    Verbosity,
    #[serde(rename = "tfidf")]
    TfIdf,
    #[serde(rename = "pos_tfidf")]
    PosTfIdf,
    Topics,
}

impl FeatureSet {
    pub const ALL: [FeatureSet; 4] = [
        FeatureSet::Verbosity,
        FeatureSet::TfIdf,
        FeatureSet::PosTfIdf,
        FeatureSet::Topics,
    ];

    /// Column-name prefix that keeps names unique after fusion.
    pub fn prefix(self) -> &'static str {
        match self {
            FeatureSet::Verbosity => "verbosity:",
            FeatureSet::TfIdf => "tfidf:",
            FeatureSet::PosTfIdf => "pos:",
            FeatureSet::Topics => "topic:",
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            FeatureSet::Verbosity => "verbosity",
            FeatureSet::TfIdf => "tfidf",
            FeatureSet::PosTfIdf => "pos_tfidf",
            FeatureSet::Topics => "topics",
        }
    }
}

impl fmt::Display for FeatureSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Participants × features, with the originating family of each column.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub participant_ids: Vec<String>,
    pub feature_names: Vec<String>,
    pub feature_set: Vec<FeatureSet>,
    pub values: Array2<f64>,
}

impl FeatureMatrix {
    pub fn new(
        participant_ids: Vec<String>,
        feature_names: Vec<String>,
        feature_set: Vec<FeatureSet>,
        values: Array2<f64>,
    ) -> Result<Self> {
        if values.nrows() != participant_ids.len()
            || values.ncols() != feature_names.len()
            || feature_set.len() != feature_names.len()
        {
            return Err(Error::invalid(format!(
                "feature matrix shape {:?} does not match {} ids / {} names / {} tags",
                values.dim(),
                participant_ids.len(),
                feature_names.len(),
                feature_set.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("feature value"));
        }
        let mut seen = HashSet::new();
        if let Some(dup) = feature_names.iter().find(|n| !seen.insert(n.as_str())) {
            return Err(Error::invalid(format!("duplicate feature name {dup}")));
        }
        Ok(FeatureMatrix {
            participant_ids,
            feature_names,
            feature_set,
            values,
        })
    }

    /// A matrix whose columns all belong to `set`.
    pub fn uniform(
        participant_ids: Vec<String>,
        feature_names: Vec<String>,
        set: FeatureSet,
        values: Array2<f64>,
    ) -> Result<Self> {
        let tags = vec![set; feature_names.len()];
        Self::new(participant_ids, feature_names, tags, values)
    }

    pub fn n_rows(&self) -> usize {
        self.values.nrows()
    }

    pub fn n_cols(&self) -> usize {
        self.values.ncols()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.feature_names.iter().position(|n| n == name)
    }

    pub fn select_columns(&self, cols: &[usize]) -> FeatureMatrix {
        FeatureMatrix {
            participant_ids: self.participant_ids.clone(),
            feature_names: cols
                .iter()
                .map(|&c| self.feature_names[c].clone())
                .collect(),
            feature_set: cols.iter().map(|&c| self.feature_set[c]).collect(),
            values: self.values.select(Axis(1), cols),
        }
    }

    pub fn select_rows(&self, rows: &[usize]) -> FeatureMatrix {
        FeatureMatrix {
            participant_ids: rows
                .iter()
                .map(|&r| self.participant_ids[r].clone())
                .collect(),
            feature_names: self.feature_names.clone(),
            feature_set: self.feature_set.clone(),
            values: self.values.select(Axis(0), rows),
        }
    }

    /// CSV with a `participant_id` column followed by one column per feature.
    pub fn write_csv(&self, out: impl Write) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["participant_id".to_string()];
        header.extend(self.feature_names.iter().cloned());
        w.write_record(&header)?;
        for (id, row) in self.participant_ids.iter().zip(self.values.rows()) {
            let mut rec = vec![id.clone()];
            rec.extend(row.iter().map(|v| v.to_string()));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Sidecar mapping feature name to its family.
    pub fn sidecar(&self) -> BTreeMap<String, FeatureSet> {
        self.feature_names
            .iter()
            .cloned()
            .zip(self.feature_set.iter().copied())
            .collect()
    }

    pub fn read_csv(csv_in: impl Read, sidecar: &BTreeMap<String, FeatureSet>) -> Result<Self> {
        let mut r = csv::Reader::from_reader(csv_in);
        let header = r.headers()?.clone();
        let names: Vec<String> = header.iter().skip(1).map(str::to_owned).collect();
        let tags = names
            .iter()
            .map(|n| {
                sidecar
                    .get(n)
                    .copied()
                    .ok_or_else(|| Error::invalid(format!("feature {n} missing from sidecar")))
            })
            .collect::<Result<Vec<_>>>()?;
        let mut ids = Vec::new();
        let mut flat = Vec::new();
        for rec in r.records() {
            let rec = rec?;
            ids.push(rec.get(0).unwrap_or_default().to_owned());
            for v in rec.iter().skip(1) {
                flat.push(
                    v.parse::<f64>()
                        .map_err(|e| Error::invalid(format!("bad feature value {v:?}: {e}")))?,
                );
            }
        }
        let values = Array2::from_shape_vec((ids.len(), names.len()), flat)
            .map_err(|e| Error::invalid(e.to_string()))?;
        Self::new(ids, names, tags, values)
    }
}

/// Columns with nonzero sample variance; the returned matrix keeps the
/// original column order. The names of removed columns are returned alongside.
pub fn drop_zero_variance(m: &FeatureMatrix) -> Result<(FeatureMatrix, Vec<String>)> {
    let keep = nonconstant_columns(&m.values);
    if keep.is_empty() {
        return Err(Error::NoInformativeFeatures);
    }
    let dropped = (0..m.n_cols())
        .filter(|c| !keep.contains(c))
        .map(|c| m.feature_names[c].clone())
        .collect();
    Ok((m.select_columns(&keep), dropped))
}

/// Indices of columns that are not constant.
pub fn nonconstant_columns(values: &Array2<f64>) -> Vec<usize> {
    values
        .columns()
        .into_iter()
        .enumerate()
        .filter(|(_, col)| col.iter().any(|&v| v != col[0]))
        .map(|(j, _)| j)
        .collect()
}

/// Column-wise concatenation of matrices that describe the same participants.
pub fn early_fusion(parts: &[FeatureMatrix]) -> Result<FeatureMatrix> {
    let first = parts
        .first()
        .ok_or_else(|| Error::invalid("early fusion needs at least one matrix"))?;
    if parts
        .iter()
        .any(|p| p.participant_ids != first.participant_ids)
    {
        return Err(Error::ParticipantMismatch);
    }
    let views: Vec<_> = parts.iter().map(|p| p.values.view()).collect();
    let values =
        ndarray::concatenate(Axis(1), &views).map_err(|e| Error::invalid(e.to_string()))?;
    FeatureMatrix::new(
        first.participant_ids.clone(),
        parts
            .iter()
            .flat_map(|p| p.feature_names.iter().cloned())
            .collect(),
        parts
            .iter()
            .flat_map(|p| p.feature_set.iter().copied())
            .collect(),
        values,
    )
}
