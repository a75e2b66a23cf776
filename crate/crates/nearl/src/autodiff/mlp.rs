//! Fully-connected networks with an optional Gaussian output head.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::tape::{Tape, Var};
use super::tensor::Tensor;
use super::AdError;

/// Effective log-std is clamped into this range everywhere the head is used;
/// the raw parameter may drift outside.
pub const LOG_STD_MIN: f64 = -5.0;
pub const LOG_STD_MAX: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Tanh,
    Relu,
}

/// One linear layer: weight is `[in, out]`, bias is `[out]`.
#[derive(Debug, Clone)]
pub struct Layer {
    pub weight: Tensor,
    pub bias: Tensor,
}

#[derive(Debug, Clone)]
pub enum OutputHead {
    Linear,
    /// State-independent log-std vector, one entry per output dimension.
    Gaussian { log_std: Tensor },
}

/// Mean and (clamped) log-std of a diagonal Gaussian, as produced by a
/// gaussian-head forward pass.
#[derive(Debug, Clone)]
pub struct GaussianHead {
    pub mean: Vec<f64>,
    pub log_std: Vec<f64>,
}

impl GaussianHead {
    pub fn std(&self) -> Vec<f64> {
        self.log_std.iter().map(|v| v.exp()).collect()
    }

    /// Diagonal-Gaussian log density of `x`.
    pub fn log_prob(&self, x: &[f64]) -> f64 {
        assert_eq!(x.len(), self.mean.len(), "log_prob dimension mismatch");
        let mut lp = 0.0;
        for i in 0..x.len() {
            let ls = self.log_std[i];
            let inv_std = (-ls).exp();
            let z = (x[i] - self.mean[i]) * inv_std;
            lp += -0.5 * z * z - ls - 0.5 * (2.0 * std::f64::consts::PI).ln();
        }
        lp
    }

    /// Reparameterized sample `mean + std * eps` for a caller-supplied `eps`.
    pub fn sample_with(&self, eps: &[f64]) -> Vec<f64> {
        assert_eq!(eps.len(), self.mean.len());
        self.mean
            .iter()
            .zip(&self.log_std)
            .zip(eps)
            .map(|((&m, &ls), &e)| m + ls.exp() * e)
            .collect()
    }
}

/// A small fully-connected network.
#[derive(Debug, Clone)]
pub struct Mlp {
    pub layers: Vec<Layer>,
    pub activation: Activation,
    pub head: OutputHead,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HeadKind {
    Linear,
    Gaussian,
}

impl Mlp {
    /// Build a network with the given layer widths, e.g. `[4, 32, 32, 2]`.
    /// Weights are uniform in +-sqrt(6 / (fan_in + fan_out)), biases zero,
    /// log-std zero.
    pub fn new(dims: &[usize], activation: Activation, head: HeadKind, rng: &mut ChaCha8Rng) -> Self {
        assert!(dims.len() >= 2, "network needs at least input and output widths");
        let mut layers = Vec::with_capacity(dims.len() - 1);
        for w in dims.windows(2) {
            let (fan_in, fan_out) = (w[0], w[1]);
            let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
            let data: Vec<f64> =
                (0..fan_in * fan_out).map(|_| rng.random_range(-bound..bound)).collect();
            layers.push(Layer {
                weight: Tensor::from_vec(&[fan_in, fan_out], data).unwrap().with_grad(),
                bias: Tensor::zeros(&[fan_out]).with_grad(),
            });
        }
        let head = match head {
            HeadKind::Linear => OutputHead::Linear,
            HeadKind::Gaussian => {
                OutputHead::Gaussian { log_std: Tensor::zeros(&[*dims.last().unwrap()]).with_grad() }
            }
        };
        Mlp { layers, activation, head }
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].weight.shape()[0]
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().unwrap().weight.shape()[1]
    }

    /// Clamped log-std vector; zero-length for linear heads.
    pub fn effective_log_std(&self) -> Vec<f64> {
        match &self.head {
            OutputHead::Linear => Vec::new(),
            OutputHead::Gaussian { log_std } => {
                log_std.data().iter().map(|v| v.clamp(LOG_STD_MIN, LOG_STD_MAX)).collect()
            }
        }
    }

    /// Straight-line forward pass without graph recording, for rollouts and
    /// oracles. `input` is `batch` rows of `input_dim` values.
    pub fn forward_infer(&self, input: &[f64], batch: usize) -> Result<Vec<f64>, AdError> {
        let in_dim = self.input_dim();
        if input.len() != batch * in_dim {
            return Err(AdError::ShapeMismatch {
                context: "Mlp::forward_infer input",
                expected: batch * in_dim,
                got: input.len(),
            });
        }
        let mut cur = input.to_vec();
        let mut cur_dim = in_dim;
        for (li, layer) in self.layers.iter().enumerate() {
            let out_dim = layer.weight.shape()[1];
            let w = layer.weight.data();
            let b = layer.bias.data();
            let mut next = vec![0.0; batch * out_dim];
            for r in 0..batch {
                for j in 0..out_dim {
                    next[r * out_dim + j] = b[j];
                }
                for k in 0..cur_dim {
                    let x = cur[r * cur_dim + k];
                    if x == 0.0 {
                        continue;
                    }
                    let wrow = &w[k * out_dim..(k + 1) * out_dim];
                    let orow = &mut next[r * out_dim..(r + 1) * out_dim];
                    for j in 0..out_dim {
                        orow[j] += x * wrow[j];
                    }
                }
            }
            if li + 1 < self.layers.len() {
                match self.activation {
                    Activation::Tanh => next.iter_mut().for_each(|v| *v = v.tanh()),
                    Activation::Relu => next.iter_mut().for_each(|v| *v = v.max(0.0)),
                }
            }
            cur = next;
            cur_dim = out_dim;
        }
        if cur.iter().any(|v| !v.is_finite()) {
            return Err(AdError::NonFinite { context: "Mlp::forward_infer output" });
        }
        Ok(cur)
    }

    /// Single-row convenience wrapper around [`Mlp::forward_infer`].
    pub fn infer_one(&self, x: &[f64]) -> Result<Vec<f64>, AdError> {
        self.forward_infer(x, 1)
    }

    /// Gaussian-head forward for one input row.
    pub fn infer_gaussian(&self, x: &[f64]) -> Result<GaussianHead, AdError> {
        let mean = self.infer_one(x)?;
        match &self.head {
            OutputHead::Linear => Err(AdError::ShapeMismatch {
                context: "infer_gaussian on linear head",
                expected: 0,
                got: mean.len(),
            }),
            OutputHead::Gaussian { .. } => {
                Ok(GaussianHead { mean, log_std: self.effective_log_std() })
            }
        }
    }

    /// Register all parameters as leaves on `tape`.
    pub fn bind(&self, tape: &mut Tape) -> MlpBinding {
        let weights: Vec<(Var, Var)> =
            self.layers.iter().map(|l| (tape.leaf(&l.weight), tape.leaf(&l.bias))).collect();
        let log_std = match &self.head {
            OutputHead::Linear => None,
            OutputHead::Gaussian { log_std } => {
                let raw = tape.leaf(log_std);
                Some((raw, tape.clamp(raw, LOG_STD_MIN, LOG_STD_MAX)))
            }
        };
        MlpBinding { weights, log_std, activation: self.activation }
    }

    /// Accumulate the tape's leaf gradients back into the parameter tensors.
    pub fn accumulate_grads(&mut self, tape: &Tape, binding: &MlpBinding) {
        for (layer, (wv, bv)) in self.layers.iter_mut().zip(&binding.weights) {
            layer.weight.accumulate_grad(tape.grad(*wv));
            layer.bias.accumulate_grad(tape.grad(*bv));
        }
        if let (OutputHead::Gaussian { log_std }, Some((raw, _))) =
            (&mut self.head, binding.log_std)
        {
            log_std.accumulate_grad(tape.grad(raw));
        }
    }

    pub fn params(&self) -> Vec<&Tensor> {
        let mut out = Vec::new();
        for l in &self.layers {
            out.push(&l.weight);
            out.push(&l.bias);
        }
        if let OutputHead::Gaussian { log_std } = &self.head {
            out.push(log_std);
        }
        out
    }

    pub fn params_mut(&mut self) -> Vec<&mut Tensor> {
        let mut out = Vec::new();
        for l in &mut self.layers {
            out.push(&mut l.weight);
            out.push(&mut l.bias);
        }
        if let OutputHead::Gaussian { log_std } = &mut self.head {
            out.push(log_std);
        }
        out
    }

    pub fn zero_grads(&mut self) {
        for p in self.params_mut() {
            p.zero_grad();
        }
    }

    pub fn check_finite(&self, context: &'static str) -> Result<(), AdError> {
        for p in self.params() {
            p.check_finite(context)?;
        }
        Ok(())
    }
}

/// Tape handles for one [`Mlp`]'s parameters. Forwarding the same binding
/// twice in one graph accumulates gradients through both uses.
pub struct MlpBinding {
    weights: Vec<(Var, Var)>,
    /// `(raw leaf, clamped)` for gaussian heads.
    log_std: Option<(Var, Var)>,
    activation: Activation,
}

impl MlpBinding {
    /// Forward `input` (`[batch, in]`) through the network; returns the mean
    /// output node (`[batch, out]`).
    pub fn forward(&self, tape: &mut Tape, input: Var) -> Var {
        let mut cur = input;
        let n_layers = self.weights.len();
        for (li, (w, b)) in self.weights.iter().enumerate() {
            let z = tape.matmul(cur, *w);
            cur = tape.add_row(z, *b);
            if li + 1 < n_layers {
                cur = match self.activation {
                    Activation::Tanh => tape.tanh(cur),
                    Activation::Relu => tape.relu(cur),
                };
            }
        }
        cur
    }

    /// Clamped log-std node for gaussian heads.
    pub fn log_std(&self) -> Option<Var> {
        self.log_std.map(|(_, clamped)| clamped)
    }

    /// Per-sample diagonal-Gaussian log density of constant targets `x`
    /// (`[batch, out]`) under mean `mu` and this binding's log-std:
    /// returns `[batch, 1]`.
    pub fn gaussian_log_prob(&self, tape: &mut Tape, mu: Var, x: Var) -> Var {
        let log_std = self.log_std().expect("gaussian_log_prob requires a gaussian head");
        let (_, dim) = tape.shape(mu);
        let diff = tape.sub(x, mu);
        let neg_ls = tape.neg(log_std);
        let inv_std = tape.exp(neg_ls);
        let z = tape.mul_row(diff, inv_std);
        let z2 = tape.square(z);
        let row = tape.sum_cols(z2);
        let half = tape.scale(row, -0.5);
        let ls_sum = tape.sum_all(log_std);
        let neg_ls_sum = tape.neg(ls_sum);
        let with_ls = tape.add_scalar(half, neg_ls_sum);
        let log_tau = (2.0 * std::f64::consts::PI).ln();
        tape.add_const(with_ls, -0.5 * dim as f64 * log_tau)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, Domain};

    fn rng() -> ChaCha8Rng {
        stream(42, Domain::Init, 0)
    }

    #[test]
    fn identity_layer_passes_input_through() {
        // Single linear layer with identity weights: input [1, 2] -> [1, 2].
        let mut net = Mlp::new(&[2, 2], Activation::Tanh, HeadKind::Linear, &mut rng());
        net.layers[0].weight.data_mut().copy_from_slice(&[1.0, 0.0, 0.0, 1.0]);
        let out = net.infer_one(&[1.0, 2.0]).unwrap();
        assert_eq!(out, vec![1.0, 2.0]);
    }

    #[test]
    fn zero_weight_net_outputs_bias() {
        let mut net = Mlp::new(&[3, 4, 2], Activation::Tanh, HeadKind::Linear, &mut rng());
        for l in &mut net.layers {
            l.weight.data_mut().iter_mut().for_each(|v| *v = 0.0);
        }
        net.layers.last_mut().unwrap().bias.data_mut().copy_from_slice(&[0.7, -0.3]);
        for x in [[0.0, 0.0, 0.0], [5.0, -2.0, 1.0]] {
            assert_eq!(net.infer_one(&x).unwrap(), vec![0.7, -0.3]);
        }
    }

    #[test]
    fn taped_forward_matches_straight_line_oracle() {
        // Independent straight-line reimplementation of the forward pass,
        // no graph machinery.
        fn oracle(net: &Mlp, x: &[f64]) -> Vec<f64> {
            let mut cur = x.to_vec();
            for (li, layer) in net.layers.iter().enumerate() {
                let (ins, outs) = (layer.weight.shape()[0], layer.weight.shape()[1]);
                let mut next = layer.bias.data().to_vec();
                for j in 0..outs {
                    for k in 0..ins {
                        next[j] += cur[k] * layer.weight.data()[k * outs + j];
                    }
                }
                if li + 1 < net.layers.len() {
                    next.iter_mut().for_each(|v| *v = v.tanh());
                }
                cur = next;
            }
            cur
        }

        let net = Mlp::new(&[3, 8, 8, 2], Activation::Tanh, HeadKind::Linear, &mut rng());
        let x = [0.4, -1.1, 2.2];
        let expect = oracle(&net, &x);

        let infer = net.infer_one(&x).unwrap();
        let mut tape = Tape::new();
        let binding = net.bind(&mut tape);
        let xv = tape.constant(1, 3, &x);
        let out = binding.forward(&mut tape, xv);
        let taped = tape.value(out).to_vec();

        for i in 0..2 {
            assert!((infer[i] - expect[i]).abs() < 1e-12);
            assert!((taped[i] - expect[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn forward_rejects_wrong_width() {
        let net = Mlp::new(&[3, 2], Activation::Tanh, HeadKind::Linear, &mut rng());
        assert!(matches!(net.infer_one(&[1.0, 2.0]), Err(AdError::ShapeMismatch { .. })));
    }

    #[test]
    fn log_std_clamp_floor_gives_exp_minus_five() {
        let mut net = Mlp::new(&[2, 2], Activation::Tanh, HeadKind::Gaussian, &mut rng());
        if let OutputHead::Gaussian { log_std } = &mut net.head {
            log_std.data_mut().iter_mut().for_each(|v| *v = -20.0);
        }
        let head = net.infer_gaussian(&[0.0, 0.0]).unwrap();
        for s in head.std() {
            assert!((s - (-5.0f64).exp()).abs() < 1e-15);
        }
    }

    #[test]
    fn gaussian_log_prob_closed_forms() {
        // x at the mean with unit std: logp = -(d/2) ln(2 pi).
        let head = GaussianHead { mean: vec![0.3, -0.7], log_std: vec![0.0, 0.0] };
        let d = 2.0;
        let expect = -(d / 2.0) * (2.0 * std::f64::consts::PI).ln();
        assert!((head.log_prob(&[0.3, -0.7]) - expect).abs() < 1e-12);
        // One std away in one dim: previous value - 0.5.
        assert!((head.log_prob(&[1.3, -0.7]) - (expect - 0.5)).abs() < 1e-12);
    }

    #[test]
    fn taped_log_prob_matches_scalar_evaluation() {
        let net = Mlp::new(&[2, 6, 2], Activation::Tanh, HeadKind::Gaussian, &mut rng());
        let xs = [0.2, -0.4, 1.0, 0.5];
        let targets = [0.9, -1.0, 0.1, 0.2];

        let mut expect = Vec::new();
        for r in 0..2 {
            let head = net.infer_gaussian(&xs[r * 2..r * 2 + 2]).unwrap();
            expect.push(head.log_prob(&targets[r * 2..r * 2 + 2]));
        }

        let mut tape = Tape::new();
        let binding = net.bind(&mut tape);
        let xv = tape.constant(2, 2, &xs);
        let tv = tape.constant(2, 2, &targets);
        let mu = binding.forward(&mut tape, xv);
        let lp = binding.gaussian_log_prob(&mut tape, mu, tv);
        let got = tape.value(lp);
        for r in 0..2 {
            assert!((got[r] - expect[r]).abs() < 1e-12);
        }
    }
}
