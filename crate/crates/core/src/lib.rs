//! Sparse-coding classification over transformer embeddings.
//!
//! Training embeddings become the atoms of an exemplar dictionary; a Locally
//! Competitive Algorithm encodes each test embedding into a sparse
//! activation vector; two decoders turn activations into class predictions;
//! an analytic model prices the encoder in FLOPs and joules.
//!
//! * [`embedset`]: the `.vlca` embedding dataset format.
//! * [`lca`]: dictionary, Gramian and neuron dynamics.
//! * [`decoders`]: max-activation and max-sum-of-activations decoders.
//! * [`costmodel`]: FLOP and energy estimates.
//! * [`harness`]: batch evaluation, synthetic data and reporting.

pub mod costmodel;
pub mod decoders;
pub mod embedset;
pub mod harness;
pub mod lca;
