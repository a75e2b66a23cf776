//! Minimal reverse-mode automatic differentiation over dense `f64` tensors.
//!
//! Design notes: everything is `f64` (desk-scale networks, and it keeps
//! finite-difference checks tight), the graph is rebuilt on every forward
//! pass, and a gaussian head's log-std is a separate state-independent
//! parameter vector clamped to `[-5, 2]`.
//!
//! Single-threaded within one graph; separate model instances are
//! independent plain data and may be used from different threads.

mod adam;
pub mod checkpoint;
mod mlp;
mod tape;
mod tensor;

pub use adam::{adam_step, AdamState};
pub use checkpoint::CheckpointError;
pub use mlp::{
    Activation, GaussianHead, HeadKind, Layer, Mlp, MlpBinding, OutputHead, LOG_STD_MAX,
    LOG_STD_MIN,
};
pub use tape::{Tape, Var};
pub use tensor::Tensor;

/// Errors from graph construction, backward passes, and optimizer steps.
#[derive(Debug, thiserror::Error)]
pub enum AdError {
    #[error("shape mismatch in {context}: expected {expected} values, got {got}")]
    ShapeMismatch { context: &'static str, expected: usize, got: usize },
    #[error("non-finite value encountered in {context}")]
    NonFinite { context: &'static str },
    #[error("backward requires a scalar loss, got {numel} values")]
    NonScalarLoss { numel: usize },
    #[error("graph already consumed by a previous backward call")]
    GraphConsumed,
    #[error("parameter has no gradient buffer")]
    MissingGrad,
}
