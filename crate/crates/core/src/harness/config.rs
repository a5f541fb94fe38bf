use std::path::PathBuf;

use serde::Serialize;

use super::HarnessError;
use crate::costmodel::DEFAULT_JOULES_PER_FLOP;
use crate::decoders::MaxMode;
use crate::lca::LcaParams;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum DecoderSelection {
    Max,
    #[serde(rename = "maxsum")]
    MaxSum,
    #[default]
    Both,
}

impl DecoderSelection {
    pub fn max(self) -> bool {
        matches!(self, Self::Max | Self::Both)
    }

    pub fn max_sum(self) -> bool {
        matches!(self, Self::MaxSum | Self::Both)
    }
}

/// What to predict when a code has no active neuron.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Fallback {
    /// Leave the input undecided; it counts against accuracy.
    #[default]
    None,
    /// Predict the class with the most dictionary atoms.
    Majority,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub dictionary_path: PathBuf,
    pub test_path: PathBuf,
    pub gramian_path: Option<PathBuf>,
    pub params: LcaParams,
    pub decoders: DecoderSelection,
    pub max_mode: MaxMode,
    pub normalize_input: bool,
    pub fallback: Fallback,
    pub joules_per_flop: f64,
    /// Worker threads; `None` uses every available core.
    pub workers: Option<usize>,
    pub seed: u64,
    pub report_path: Option<PathBuf>,
    /// Divergent inputs tolerated before the run is reported as failed.
    pub max_divergent: usize,
}

impl RunConfig {
    pub fn new(dictionary_path: impl Into<PathBuf>, test_path: impl Into<PathBuf>) -> Self {
        Self {
            dictionary_path: dictionary_path.into(),
            test_path: test_path.into(),
            gramian_path: None,
            params: LcaParams::default(),
            decoders: DecoderSelection::Both,
            max_mode: MaxMode::Absolute,
            normalize_input: false,
            fallback: Fallback::None,
            joules_per_flop: DEFAULT_JOULES_PER_FLOP,
            workers: None,
            seed: 0,
            report_path: None,
            max_divergent: 0,
        }
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        self.params.validate().map_err(|e| match e {
            crate::lca::LcaError::InvalidParam { field, reason } => {
                HarnessError::InvalidConfig { field, reason }
            }
            other => HarnessError::Lca(other),
        })?;
        if !(self.joules_per_flop.is_finite() && self.joules_per_flop > 0.0) {
            return Err(HarnessError::InvalidConfig {
                field: "joules_per_flop",
                reason: format!("must be finite and positive, got {}", self.joules_per_flop),
            });
        }
        if self.workers == Some(0) {
            return Err(HarnessError::InvalidConfig {
                field: "workers",
                reason: "must be at least 1".into(),
            });
        }
        Ok(())
    }
}
