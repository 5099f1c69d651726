//! Pain-intensity classification from part-of-speech tagged interview
//! transcripts.
//!
//! The pipeline parses a JSONL corpus ([`corpus`]), extracts four feature
//! families ([`features`]), evaluates classifiers ([`models`]) under
//! leave-one-out validation with nested feature selection ([`eval`]), tests
//! demographic and clinical confounds ([`confound`]) and summarises selected
//! features ([`interpret`]). [`synth`] generates corpora with planted signal.

pub mod confound;
pub mod corpus;
pub mod error;
pub mod eval;
pub mod features;
pub mod interpret;
pub mod models;
pub mod pipeline;
pub mod seed;
pub mod stats;
pub mod synth;

pub use error::{Error, Result};
