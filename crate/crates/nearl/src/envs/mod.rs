//! Deterministic toy control environments with known dynamics and scripted
//! experts.
//!
//! Three environments stand in for a physics-engine suite:
//!
//! - **PointMass2D** — planar double integrator, semi-implicit Euler. The
//!   controllable indices are the velocities.
//! - **Pendulum** — torque-limited swing-up, angle measured from the
//!   downward rest position, observation `(cos t, sin t, w)`.
//! - **LinearSystem** — `x' = A x + B u` with invertible `B`, so the optimal
//!   policy and value are exactly computable and actions are recoverable
//!   from consecutive states.
//!
//! Rewards are negative quadratic state/action costs (shaped upright-angle
//! cost for the pendulum), so an iterated discrete Riccati recursion yields
//! both the expert feedback gains and a quantitative value oracle. `step` is
//! a pure function of `(state, action)`; stochastic-looking nuisance
//! dimensions are driven by counter-based hashing of the state itself.

mod dynamics;
mod expert;
mod nuisance;

pub use expert::{expert_action, lqr_gain, riccati_value, Expert};
pub use nuisance::{augment_nuisance, NuisanceConfig, NuisanceKind};

use crate::linalg::Mat;
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum EnvError {
    #[error("non-finite {what} encountered at step {t}")]
    NonFinite { what: &'static str, t: usize },
    #[error("action has {got} dims, environment expects {expected}")]
    ActionDim { expected: usize, got: usize },
    #[error("state has {got} dims, environment expects {expected}")]
    StateDim { expected: usize, got: usize },
    #[error("Riccati recursion failed to converge (configuration error)")]
    RiccatiDiverged,
    #[error("no scripted expert for {0}")]
    NoExpert(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnvKind {
    PointMass2d,
    Pendulum,
    LinearSystem,
}

impl EnvKind {
    pub fn name(self) -> &'static str {
        match self {
            EnvKind::PointMass2d => "point_mass_2d",
            EnvKind::Pendulum => "pendulum",
            EnvKind::LinearSystem => "linear_system",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "point_mass_2d" => Some(EnvKind::PointMass2d),
            "pendulum" => Some(EnvKind::Pendulum),
            "linear_system" => Some(EnvKind::LinearSystem),
            _ => None,
        }
    }
}

/// How `reset` draws the initial state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StartMode {
    /// The documented nominal start state, exactly.
    Fixed,
    /// Seeded draw from the documented start distribution.
    Random,
}

/// Environment description. A value type: clone freely, run instances in
/// parallel.
#[derive(Debug, Clone)]
pub struct EnvSpec {
    pub kind: EnvKind,
    pub state_dim: usize,
    pub action_dim: usize,
    /// Directly actuated state components (the controllable set).
    pub controllable_indices: Vec<usize>,
    pub dt: f64,
    pub horizon: usize,
    /// Per-dimension `[lo, hi]` action box.
    pub action_bounds: Vec<(f64, f64)>,
    pub start: StartMode,
    pub nuisance: Option<NuisanceConfig>,
    /// Width of the underlying dynamics state (excluding nuisance dims).
    pub base_state_dim: usize,
    pub dynamics: Dynamics,
}

/// Per-environment physical parameters and cost weights.
#[derive(Debug, Clone)]
pub enum Dynamics {
    PointMass {
        /// Diagonal state cost on `(px, py, vx, vy)`.
        q: Vec<f64>,
        /// Diagonal action cost.
        r: Vec<f64>,
        pos_max: f64,
        vel_max: f64,
    },
    Pendulum {
        mass: f64,
        length: f64,
        gravity: f64,
        damping: f64,
        omega_max: f64,
        /// Reward: `-(q_angle e^2 + q_omega w^2 + r_torque u^2)` with `e`
        /// the wrapped angle error to upright.
        q_angle: f64,
        q_omega: f64,
        r_torque: f64,
    },
    Linear { a: Mat, b: Mat, q: Mat, r: Mat, x_max: f64 },
}

/// One environment state: the observation vector plus the step index.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvState {
    pub vector: Vec<f64>,
    pub t: usize,
}

/// Result of one environment step.
#[derive(Debug, Clone)]
pub struct StepOutcome {
    pub state: EnvState,
    pub reward: f64,
    pub done: bool,
    /// True when the action was projected into the action box; callers log
    /// the occurrence.
    pub action_clamped: bool,
}

pub const DEFAULT_DT: f64 = 0.05;

impl EnvSpec {
    /// Environment with documented default parameters.
    pub fn new(kind: EnvKind, dt: f64, horizon: usize) -> Self {
        match kind {
            EnvKind::PointMass2d => EnvSpec {
                kind,
                state_dim: 4,
                action_dim: 2,
                controllable_indices: vec![2, 3],
                dt,
                horizon,
                action_bounds: vec![(-5.0, 5.0); 2],
                start: StartMode::Random,
                nuisance: None,
                base_state_dim: 4,
                dynamics: Dynamics::PointMass {
                    q: vec![1.0, 1.0, 0.1, 0.1],
                    r: vec![0.1, 0.1],
                    pos_max: 25.0,
                    vel_max: 10.0,
                },
            },
            EnvKind::Pendulum => EnvSpec {
                kind,
                state_dim: 3,
                action_dim: 1,
                controllable_indices: vec![0, 1, 2],
                dt,
                horizon,
                action_bounds: vec![(-2.0, 2.0)],
                start: StartMode::Random,
                nuisance: None,
                base_state_dim: 3,
                dynamics: Dynamics::Pendulum {
                    mass: 1.0,
                    length: 1.0,
                    gravity: 9.81,
                    damping: 0.05,
                    omega_max: 8.0,
                    q_angle: 1.0,
                    q_omega: 0.1,
                    r_torque: 0.001,
                },
            },
            EnvKind::LinearSystem => EnvSpec {
                kind,
                state_dim: 2,
                action_dim: 2,
                controllable_indices: vec![0, 1],
                dt,
                horizon,
                action_bounds: vec![(-6.0, 6.0); 2],
                start: StartMode::Random,
                nuisance: None,
                base_state_dim: 2,
                dynamics: Dynamics::Linear {
                    a: Mat::from_rows(&[&[1.0, 0.1], &[0.0, 1.0]]),
                    b: Mat::from_rows(&[&[0.05, 0.0], &[0.0, 0.05]]),
                    q: Mat::diag(&[1.0, 1.0]),
                    r: Mat::diag(&[0.1, 0.1]),
                    x_max: 25.0,
                },
            },
        }
    }

    pub fn defaults(kind: EnvKind) -> Self {
        let horizon = match kind {
            EnvKind::Pendulum => 200,
            _ => 100,
        };
        Self::new(kind, DEFAULT_DT, horizon)
    }

    pub fn name(&self) -> &'static str {
        self.kind.name()
    }

    /// Append nuisance dimensions. Controllable indices stay on the base
    /// part, so the appended dims are never controllable.
    pub fn with_nuisance(mut self, cfg: NuisanceConfig) -> Self {
        self.state_dim = self.base_state_dim + cfg.extra_dims;
        self.nuisance = Some(cfg);
        self
    }

    pub fn with_start(mut self, start: StartMode) -> Self {
        self.start = start;
        self
    }

    /// Documented bounds that every emitted reward lies inside.
    pub fn reward_bounds(&self) -> (f64, f64) {
        match &self.dynamics {
            Dynamics::PointMass { q, r, pos_max, vel_max } => {
                let s_worst = q[0] * pos_max * pos_max
                    + q[1] * pos_max * pos_max
                    + q[2] * vel_max * vel_max
                    + q[3] * vel_max * vel_max;
                let a_worst: f64 = r
                    .iter()
                    .zip(&self.action_bounds)
                    .map(|(ri, (lo, hi))| ri * lo.abs().max(hi.abs()).powi(2))
                    .sum();
                (-(s_worst + a_worst), 0.0)
            }
            Dynamics::Pendulum { omega_max, q_angle, q_omega, r_torque, .. } => {
                let pi = std::f64::consts::PI;
                let (lo, hi) = self.action_bounds[0];
                let u_max = lo.abs().max(hi.abs());
                (-(q_angle * pi * pi + q_omega * omega_max * omega_max + r_torque * u_max * u_max),
                 0.0)
            }
            Dynamics::Linear { q, r, x_max, .. } => {
                let qmax: f64 = q.data.iter().map(|v| v.abs()).sum::<f64>() * x_max * x_max;
                let u_max: f64 = self
                    .action_bounds
                    .iter()
                    .map(|(lo, hi)| lo.abs().max(hi.abs()))
                    .fold(0.0, f64::max);
                let rmax: f64 = r.data.iter().map(|v| v.abs()).sum::<f64>() * u_max * u_max;
                (-(qmax + rmax), 0.0)
            }
        }
    }

    /// Base-part reward for `(state, executed action)`.
    pub fn reward(&self, state: &[f64], action: &[f64]) -> f64 {
        dynamics::reward(self, state, action)
    }

    /// Recover the executed action from a consecutive base-state pair. Exact
    /// for all three environments as long as the velocity/omega boxes did
    /// not bind.
    pub fn infer_action(&self, state: &[f64], next_state: &[f64]) -> Vec<f64> {
        dynamics::infer_action(self, state, next_state)
    }

    /// The documented nominal start state (fixed-start mode).
    pub fn nominal_start(&self) -> EnvState {
        dynamics::nominal_start(self)
    }
}

/// Advance the environment by one step. Actions outside the box are clamped
/// (and the clamp reported); the function is pure in `(state, action)`.
pub fn step(spec: &EnvSpec, state: &EnvState, action: &[f64]) -> Result<StepOutcome, EnvError> {
    dynamics::step(spec, state, action)
}

/// Draw an initial state: the nominal start in fixed mode, a seeded draw
/// from the documented start distribution otherwise.
pub fn reset(spec: &EnvSpec, seed: u64) -> EnvState {
    dynamics::reset(spec, seed)
}

#[cfg(test)]
mod tests;
