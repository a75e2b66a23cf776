//! Adam with bias correction.

use super::tensor::Tensor;
use super::AdError;

/// Per-parameter first/second moment buffers plus hyperparameters. The buffer
/// layout is positional: callers must pass the same parameter list, in the
/// same order, on every step.
#[derive(Debug, Clone)]
pub struct AdamState {
    first_moment: Vec<Vec<f64>>,
    second_moment: Vec<Vec<f64>>,
    step_count: u64,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl AdamState {
    pub fn new(param_sizes: &[usize], lr: f64) -> Self {
        AdamState {
            first_moment: param_sizes.iter().map(|&n| vec![0.0; n]).collect(),
            second_moment: param_sizes.iter().map(|&n| vec![0.0; n]).collect(),
            step_count: 0,
            lr,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }

    pub fn for_params(params: &[&Tensor], lr: f64) -> Self {
        let sizes: Vec<usize> = params.iter().map(|p| p.numel()).collect();
        Self::new(&sizes, lr)
    }

    pub fn step_count(&self) -> u64 {
        self.step_count
    }

    /// Flat view of the moment buffers for checkpointing.
    pub fn moments(&self) -> (&[Vec<f64>], &[Vec<f64>]) {
        (&self.first_moment, &self.second_moment)
    }

    pub fn restore(&mut self, first: Vec<Vec<f64>>, second: Vec<Vec<f64>>, step_count: u64) {
        assert_eq!(first.len(), self.first_moment.len(), "adam restore arity mismatch");
        assert_eq!(second.len(), self.second_moment.len(), "adam restore arity mismatch");
        self.first_moment = first;
        self.second_moment = second;
        self.step_count = step_count;
    }
}

/// One Adam update over `params` using their populated grad buffers. Grads
/// are left untouched; callers zero them when starting the next accumulation.
pub fn adam_step(params: &mut [&mut Tensor], state: &mut AdamState) -> Result<(), AdError> {
    assert_eq!(params.len(), state.first_moment.len(), "parameter count mismatch");
    state.step_count += 1;
    let t = state.step_count as i32;
    let bc1 = 1.0 - state.beta1.powi(t);
    let bc2 = 1.0 - state.beta2.powi(t);
    for (idx, p) in params.iter_mut().enumerate() {
        let n = p.numel();
        let grad = p.grad().ok_or(AdError::MissingGrad)?.to_vec();
        assert_eq!(grad.len(), n);
        let m = &mut state.first_moment[idx];
        let v = &mut state.second_moment[idx];
        let data = p.data_mut();
        for i in 0..n {
            m[i] = state.beta1 * m[i] + (1.0 - state.beta1) * grad[i];
            v[i] = state.beta2 * v[i] + (1.0 - state.beta2) * grad[i] * grad[i];
            let m_hat = m[i] / bc1;
            let v_hat = v[i] / bc2;
            data[i] -= state.lr * m_hat / (v_hat.sqrt() + state.epsilon);
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_grad_leaves_parameters_unchanged() {
        let mut p = Tensor::from_vec(&[2], vec![1.0, -2.0]).unwrap().with_grad();
        let mut st = AdamState::for_params(&[&p], 0.1);
        adam_step(&mut [&mut p], &mut st).unwrap();
        assert_eq!(p.data(), &[1.0, -2.0]);
    }

    #[test]
    fn first_step_moves_by_lr_over_one_plus_eps() {
        // First step with grad 1.0: bias-corrected m_hat = v_hat = 1, so the
        // update is lr / (1 + eps).
        let mut p = Tensor::from_vec(&[1], vec![0.0]).unwrap().with_grad();
        p.accumulate_grad(&[1.0]);
        let mut st = AdamState::for_params(&[&p], 1e-3);
        adam_step(&mut [&mut p], &mut st).unwrap();
        let expect = -1e-3 / (1.0 + 1e-8);
        assert!((p.data()[0] - expect).abs() < 1e-15);
        // Grad buffer untouched.
        assert_eq!(p.grad().unwrap(), &[1.0]);
    }

    #[test]
    fn missing_grad_is_an_error() {
        let mut p = Tensor::from_vec(&[1], vec![0.0]).unwrap();
        let mut st = AdamState::for_params(&[&p], 1e-3);
        assert!(matches!(adam_step(&mut [&mut p], &mut st), Err(AdError::MissingGrad)));
    }

    #[test]
    fn converges_on_scalar_quadratic() {
        // 100 steps minimizing (theta - 5)^2 from theta = 0 at lr 0.1.
        // Oracle: the analytic gradient is 2 (theta - 5).
        let mut p = Tensor::from_vec(&[1], vec![0.0]).unwrap().with_grad();
        let mut st = AdamState::for_params(&[&p], 0.1);
        for _ in 0..100 {
            p.zero_grad();
            let theta = p.data()[0];
            p.accumulate_grad(&[2.0 * (theta - 5.0)]);
            adam_step(&mut [&mut p], &mut st).unwrap();
        }
        assert!((p.data()[0] - 5.0).abs() < 0.1, "theta = {}", p.data()[0]);
        assert_eq!(st.step_count(), 100);
    }
}
