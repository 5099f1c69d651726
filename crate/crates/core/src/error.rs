use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("corpus not found: {}", .0.display())]
    CorpusNotFound(PathBuf),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("empty corpus: no valid records")]
    EmptyCorpus,

    #[error("VAS value {0} outside [0, 10]")]
    VasOutOfRange(f64),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("non-finite input: {0}")]
    NonFinite(&'static str),

    #[error("degenerate contingency table: {0}")]
    DegenerateTable(String),

    #[error("undefined correlation: zero-variance input")]
    UndefinedCorrelation,

    #[error("empty vocabulary")]
    EmptyVocabulary,

    #[error("no informative features: every column has zero variance")]
    NoInformativeFeatures,

    #[error("participant order mismatch between feature matrices")]
    ParticipantMismatch,

    #[error("empty training set")]
    EmptyTrainingSet,

    #[error("training set has a single class; at least two are required")]
    SingleClass,

    #[error("RBF width must be positive (zero-variance training matrix)")]
    NonPositiveGamma,

    #[error("invalid config: {0}")]
    Config(String),

    #[error("fold {fold}: {source}")]
    Fold {
        fold: usize,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn in_fold(self, fold: usize) -> Self {
        Error::Fold {
            fold,
            source: Box::new(self),
        }
    }

    /// Name of the pipeline stage an error originates from, for machine-readable reports.
    pub fn module(&self) -> &'static str {
        match self {
            Error::CorpusNotFound(_) | Error::EmptyCorpus | Error::VasOutOfRange(_) => "corpus",
            Error::DegenerateTable(_) | Error::UndefinedCorrelation | Error::NonFinite(_) => {
                "stats"
            }
            Error::EmptyVocabulary | Error::NoInformativeFeatures | Error::ParticipantMismatch => {
                "features"
            }
            Error::EmptyTrainingSet | Error::SingleClass | Error::NonPositiveGamma => "models",
            Error::Fold { .. } => "eval",
            Error::Config(_) => "config",
            Error::Io(_) | Error::Json(_) | Error::Csv(_) | Error::InvalidInput(_) => "io",
        }
    }
}
