//! Hierarchical reinforcement learning without explicit actions.
//!
//! The library trains a state-to-state *meta policy* that proposes the next
//! state, a low-level *inverse dynamics model* that turns the proposal into an
//! action, and (optionally) a GAN discriminator with a variational information
//! bottleneck that keeps the proposals reachable. Everything runs on a small
//! reverse-mode autodiff engine over `f64` tensors, against deterministic toy
//! control environments with scripted optimal experts.
//!
//! Module map:
//!
//! - [`autodiff`] — tensors, dynamic tape, MLPs, Adam, binary checkpoints
//! - [`envs`] — PointMass2D / Pendulum / LinearSystem, LQR + swing-up experts,
//!   nuisance-dimension augmentation
//! - [`policy`] — meta policy, inverse dynamics model, combined sampling,
//!   prior state constraints
//! - [`discriminator`] — variational-bottleneck GAN losses and the dual
//!   variable update
//! - [`rl`] — returns, GAE, the joint-logprob REINFORCE estimator, PPO
//! - [`imitation`] — state-only demonstrations, behavior cloning, initial
//!   state distribution resets, demo injection
//! - [`trainer`] — the iteration loop across algorithm variants, metrics,
//!   checkpoint/resume
//! - [`config`] — experiment configuration, validation, hashing
//!
//! Rollout collection and evaluation fan out with rayon when the `parallel`
//! feature (default) is enabled; results merge in episode-index order so both
//! code paths produce bit-identical output.

pub mod autodiff;
pub mod config;
pub mod discriminator;
pub mod envs;
pub mod imitation;
pub mod linalg;
pub mod policy;
pub mod rl;
pub mod rng;
pub mod trainer;

pub use config::TrainConfig;
pub use trainer::{train, AlgorithmVariant};
