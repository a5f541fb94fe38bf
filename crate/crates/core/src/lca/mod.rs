//! Exemplar-dictionary Locally Competitive Algorithm.
//!
//! The encoder keeps one leaky integrator per dictionary atom. Each neuron is
//! driven by the projection of the input onto its atom and inhibited by the
//! currently active neurons through the atom Gramian; thresholded potentials
//! form the sparse code.

mod dictionary;
mod dynamics;
mod gramian;
mod ops;

use std::io;

use thiserror::Error;

pub use dictionary::Dictionary;
pub use dynamics::{
    excitatory_input, fixed_point_residual, inhibition, lasso_objective, lca_step, reconstruct,
    soft_threshold, EncodeOptions, EncodeResult, Encoder, InstrumentedEncode, LcaParams,
    NeuronState,
};
pub use gramian::{Gramian, PackedGramian};
pub use ops::{NoTally, OpCount, OpTally};

#[derive(Debug, Error)]
pub enum LcaError {
    #[error("cannot build a dictionary from an empty set")]
    EmptyDictionary,
    #[error("record {index} has zero norm and cannot be an atom")]
    ZeroNorm { index: usize },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParam { field: &'static str, reason: String },
    #[error("non-finite neuron state at step {step}")]
    Diverged { step: usize },
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("gramian covers {found} atoms but the dictionary has {expected}")]
    GramianMismatch { expected: u64, found: u64 },
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
    #[error("bad magic {found:?}, expected {expected:?}")]
    BadMagic {
        expected: &'static str,
        found: [u8; 4],
    },
    #[error("unsupported format version {0}")]
    UnsupportedVersion(u16),
    #[error("file truncated: expected {expected} bytes, found {found}")]
    Truncated { expected: u64, found: u64 },
    #[error("{0} trailing bytes after the declared payload")]
    TrailingBytes(u64),
    #[error("corrupt file: {0}")]
    Corrupt(String),
}
