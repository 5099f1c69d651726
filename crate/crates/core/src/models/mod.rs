//! Zero Rate Baseline, CART decision tree and RBF support vector classifiers.

mod svm;
mod tree;
mod zrb;

pub use svm::{
    rbf, rbf_matrix, scale_gamma, solve_dual, BinarySvm, DualSolution, Gamma, SvmModel, SvmParams,
};
pub use tree::{gini, Node, TreeModel};
pub use zrb::{class_counts, majority, ZrbModel};

use std::fmt;
use std::str::FromStr;

use ndarray::ArrayView2;
use serde::{Deserialize, Serialize};

use crate::corpus::PainClass;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Zrb,
    Dt,
    Svm,
}

impl ModelKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Zrb => "ZRB",
            ModelKind::Dt => "DT",
            ModelKind::Svm => "SVM",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "zrb" => Ok(ModelKind::Zrb),
            "dt" => Ok(ModelKind::Dt),
            "svm" => Ok(ModelKind::Svm),
            _ => Err(Error::Config(format!("unknown model kind {s:?}"))),
        }
    }
}

/// A fitted classifier of any kind.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Model {
    Zrb(ZrbModel),
    Dt(TreeModel),
    Svm(SvmModel),
}

impl Model {
    pub fn fit(kind: ModelKind, x: ArrayView2<f64>, y: &[PainClass]) -> Result<Self> {
        Ok(match kind {
            ModelKind::Zrb => Model::Zrb(ZrbModel::fit(y)?),
            ModelKind::Dt => Model::Dt(TreeModel::fit(x, y)?),
            ModelKind::Svm => Model::Svm(SvmModel::fit(x, y, SvmParams::default())?),
        })
    }

    pub fn predict(&self, x: ArrayView2<f64>) -> Vec<PainClass> {
        match self {
            Model::Zrb(m) => m.predict(x.nrows()),
            Model::Dt(m) => m.predict(x),
            Model::Svm(m) => m.predict(x),
        }
    }

    /// JSON debug dump; not a stable format.
    pub fn debug_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}
