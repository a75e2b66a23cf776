//! Closed-form dynamics, rewards, resets, and inverse dynamics per
//! environment. Integration is semi-implicit Euler: velocity first, then
//! position with the updated velocity.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::nuisance;
use super::{Dynamics, EnvError, EnvSpec, EnvState, StepOutcome};

pub fn wrap_angle(a: f64) -> f64 {
    let two_pi = 2.0 * std::f64::consts::PI;
    let mut x = (a + std::f64::consts::PI).rem_euclid(two_pi) - std::f64::consts::PI;
    if x <= -std::f64::consts::PI {
        x += two_pi;
    }
    x
}

fn clamp_action(spec: &EnvSpec, action: &[f64]) -> (Vec<f64>, bool) {
    let mut clamped = false;
    let exec: Vec<f64> = action
        .iter()
        .zip(&spec.action_bounds)
        .map(|(&a, &(lo, hi))| {
            let c = a.clamp(lo, hi);
            if c != a {
                clamped = true;
            }
            c
        })
        .collect();
    (exec, clamped)
}

pub fn reward(spec: &EnvSpec, state: &[f64], action: &[f64]) -> f64 {
    match &spec.dynamics {
        Dynamics::PointMass { q, r, .. } => {
            let s_cost: f64 = q.iter().zip(state).map(|(qi, si)| qi * si * si).sum();
            let a_cost: f64 = r.iter().zip(action).map(|(ri, ai)| ri * ai * ai).sum();
            -(s_cost + a_cost)
        }
        Dynamics::Pendulum { q_angle, q_omega, r_torque, .. } => {
            let theta = state[1].atan2(state[0]);
            let e = wrap_angle(theta - std::f64::consts::PI);
            let omega = state[2];
            -(q_angle * e * e + q_omega * omega * omega + r_torque * action[0] * action[0])
        }
        Dynamics::Linear { q, r, .. } => {
            let s_cost = crate::linalg::quadratic_form(q, state);
            let a_cost = crate::linalg::quadratic_form(r, action);
            -(s_cost + a_cost)
        }
    }
}

fn base_step(spec: &EnvSpec, base: &[f64], exec: &[f64]) -> Vec<f64> {
    match &spec.dynamics {
        Dynamics::PointMass { pos_max, vel_max, .. } => {
            let dt = spec.dt;
            let vx = (base[2] + exec[0] * dt).clamp(-vel_max, *vel_max);
            let vy = (base[3] + exec[1] * dt).clamp(-vel_max, *vel_max);
            let px = (base[0] + vx * dt).clamp(-pos_max, *pos_max);
            let py = (base[1] + vy * dt).clamp(-pos_max, *pos_max);
            vec![px, py, vx, vy]
        }
        Dynamics::Pendulum { mass, length, gravity, damping, omega_max, .. } => {
            let dt = spec.dt;
            let theta = base[1].atan2(base[0]);
            let omega = base[2];
            let inertia = mass * length * length;
            let acc = (exec[0] - damping * omega) / inertia - (gravity / length) * theta.sin();
            let omega_next = (omega + acc * dt).clamp(-omega_max, *omega_max);
            let theta_next = wrap_angle(theta + omega_next * dt);
            vec![theta_next.cos(), theta_next.sin(), omega_next]
        }
        Dynamics::Linear { a, b, x_max, .. } => {
            let ax = a.matvec(base);
            let bu = b.matvec(exec);
            ax.iter().zip(&bu).map(|(x, u)| (x + u).clamp(-x_max, *x_max)).collect()
        }
    }
}

pub fn infer_action(spec: &EnvSpec, state: &[f64], next_state: &[f64]) -> Vec<f64> {
    match &spec.dynamics {
        Dynamics::PointMass { .. } => {
            let dt = spec.dt;
            vec![(next_state[2] - state[2]) / dt, (next_state[3] - state[3]) / dt]
        }
        Dynamics::Pendulum { mass, length, gravity, damping, .. } => {
            let dt = spec.dt;
            let theta = state[1].atan2(state[0]);
            let omega = state[2];
            let omega_next = next_state[2];
            let inertia = mass * length * length;
            let acc = (omega_next - omega) / dt;
            vec![(acc + (gravity / length) * theta.sin()) * inertia + damping * omega]
        }
        Dynamics::Linear { a, b, .. } => {
            let ax = a.matvec(state);
            let resid: Vec<f64> = next_state.iter().zip(&ax).map(|(n, p)| n - p).collect();
            let b_inv = b.inverse().expect("LinearSystem B must be invertible");
            b_inv.matvec(&resid)
        }
    }
}

pub fn step(spec: &EnvSpec, state: &EnvState, action: &[f64]) -> Result<StepOutcome, EnvError> {
    if action.len() != spec.action_dim {
        return Err(EnvError::ActionDim { expected: spec.action_dim, got: action.len() });
    }
    if state.vector.len() != spec.state_dim {
        return Err(EnvError::StateDim { expected: spec.state_dim, got: state.vector.len() });
    }
    if state.vector.iter().any(|v| !v.is_finite()) {
        return Err(EnvError::NonFinite { what: "state", t: state.t });
    }
    if action.iter().any(|v| !v.is_finite()) {
        return Err(EnvError::NonFinite { what: "action", t: state.t });
    }

    let (exec, action_clamped) = clamp_action(spec, action);
    let base = &state.vector[..spec.base_state_dim];
    let base_next = base_step(spec, base, &exec);
    let r = reward(spec, base, &exec);

    let mut vector = base_next.clone();
    if let Some(cfg) = &spec.nuisance {
        let prev = &state.vector[spec.base_state_dim..];
        let full = nuisance::augment_nuisance(&base_next, cfg, state.t + 1, Some(prev));
        vector = full;
    }

    let t = state.t + 1;
    debug_assert!(
        {
            let (lo, hi) = spec.reward_bounds();
            r >= lo - 1e-9 && r <= hi + 1e-9
        },
        "reward {r} outside documented bounds"
    );
    Ok(StepOutcome {
        state: EnvState { vector, t },
        reward: r,
        done: t >= spec.horizon,
        action_clamped,
    })
}

pub fn nominal_start(spec: &EnvSpec) -> EnvState {
    let base = match &spec.dynamics {
        Dynamics::PointMass { .. } => vec![1.5, -1.0, 0.0, 0.0],
        Dynamics::Pendulum { .. } => vec![1.0, 0.0, 0.0], // theta = 0 (down), omega = 0
        Dynamics::Linear { .. } => vec![1.5, -1.0],
    };
    finish_reset(spec, base, &mut ChaCha8Rng::seed_from_u64(0))
}

pub fn reset(spec: &EnvSpec, seed: u64) -> EnvState {
    match spec.start {
        super::StartMode::Fixed => nominal_start(spec),
        super::StartMode::Random => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let base = match &spec.dynamics {
                Dynamics::PointMass { .. } => vec![
                    rng.random_range(-2.0..2.0),
                    rng.random_range(-2.0..2.0),
                    rng.random_range(-0.5..0.5),
                    rng.random_range(-0.5..0.5),
                ],
                Dynamics::Pendulum { .. } => {
                    let theta = rng.random_range(-0.5..0.5);
                    let omega = rng.random_range(-0.2..0.2);
                    vec![theta.cos(), theta.sin(), omega]
                }
                Dynamics::Linear { .. } => {
                    vec![rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)]
                }
            };
            finish_reset(spec, base, &mut rng)
        }
    }
}

fn finish_reset(spec: &EnvSpec, base: Vec<f64>, rng: &mut ChaCha8Rng) -> EnvState {
    let vector = match &spec.nuisance {
        None => base,
        Some(cfg) => nuisance::initial_augment(&base, cfg, rng),
    };
    EnvState { vector, t: 0 }
}

/// Install a state vector as an episode start (initial-state-distribution
/// resets). Nuisance dims are re-derived when the stored state is base-width.
pub fn install_start(spec: &EnvSpec, vector: &[f64], rng: &mut ChaCha8Rng) -> EnvState {
    if vector.len() == spec.state_dim {
        return EnvState { vector: vector.to_vec(), t: 0 };
    }
    assert_eq!(vector.len(), spec.base_state_dim, "start state width mismatch");
    finish_reset(spec, vector.to_vec(), rng)
}
