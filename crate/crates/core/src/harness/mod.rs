//! Pipeline orchestration behind the `vitlca` command line.

mod config;
mod eval;
mod synth;

use std::io;

use thiserror::Error;

use crate::costmodel::CostError;
use crate::embedset::EmbedsetError;
use crate::lca::LcaError;

pub use config::{DecoderSelection, Fallback, RunConfig};
pub use eval::{
    evaluate, evaluate_sets, load_dictionary, DecoderStats, Divergence, EvalOptions, EvalReport,
    RecordOutcome,
};
pub use synth::{synth_clusters, synth_split, SynthSpec};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid configuration `{field}`: {reason}")]
    InvalidConfig { field: &'static str, reason: String },
    #[error("dictionary has N={dictionary} but test set has N={test}")]
    DimensionMismatch { dictionary: usize, test: usize },
    #[error("test set is empty")]
    EmptyTestSet,
    #[error("{count} inputs diverged, more than the {allowed} allowed")]
    TooManyDivergent { count: usize, allowed: usize },
    #[error(transparent)]
    Embedset(#[from] EmbedsetError),
    #[error(transparent)]
    Lca(#[from] LcaError),
    #[error(transparent)]
    Cost(#[from] CostError),
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
    #[error("report serialization failed: {0}")]
    Json(#[from] serde_json::Error),
}

impl HarnessError {
    /// 1 for validation failures, 2 for runtime failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Io(_)
            | HarnessError::Json(_)
            | HarnessError::TooManyDivergent { .. }
            | HarnessError::Embedset(EmbedsetError::Io(_))
            | HarnessError::Lca(LcaError::Io(_))
            | HarnessError::Lca(LcaError::Diverged { .. }) => 2,
            _ => 1,
        }
    }
}
