//! Federated averaging with homomorphically encrypted aggregation.
//!
//! - [`mlp`]: the desk-scale regressor trained by every learner.
//! - [`train`]: local SGD (the per-round learner optimization).
//! - [`aggregate`]: dataset-size-weighted model averaging, in the clear and
//!   over packed ciphertexts.
//! - [`data`]: synthetic regression data and the IID / non-IID x uniform /
//!   skewed partitioners.
//! - [`federation`]: the synchronous controller/learner round loop over
//!   in-process or TCP transports, with per-round metrics and a decryption
//!   audit log.

pub mod aggregate;
pub mod data;
pub mod federation;
pub mod mlp;
pub mod train;

/// Errors from training, partitioning, or running a federation.
#[derive(Debug, thiserror::Error)]
pub enum FlError {
    #[error("dataset is empty")]
    EmptyDataset,

    #[error("training diverged: non-finite loss at epoch {epoch}, step {step}")]
    Diverged { epoch: usize, step: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("model structure mismatch: {0}")]
    ModelMismatch(String),

    #[error("{have} models but {want} weights")]
    CountMismatch { have: usize, want: usize },

    #[error("cannot split {examples} examples across {learners} learners")]
    PartitionTooSmall { examples: usize, learners: usize },

    #[error("round {round} aborted: {reason}")]
    RoundAborted { round: u32, reason: String },

    #[error("wire failure: {0}")]
    Wire(#[from] fedhe_wire::WireError),

    #[error(transparent)]
    Core(#[from] fedhe_core::Error),
}

pub type Result<T> = std::result::Result<T, FlError>;
