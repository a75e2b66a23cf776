//! Dense `f64` tensors with gradient accumulators.

use super::AdError;

/// A dense row-major `f64` array with an optional gradient buffer.
///
/// Tensors are plain data: the computation graph lives on a [`super::Tape`]
/// built per forward pass, and gradients are accumulated back into the
/// tensor's `grad` buffer after `backward`. Repeated backward passes without
/// [`Tensor::zero_grad`] accumulate, which is what the multi-loss update
/// phases rely on.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    shape: Vec<usize>,
    data: Vec<f64>,
    grad: Option<Vec<f64>>,
    requires_grad: bool,
}

impl Tensor {
    pub fn zeros(shape: &[usize]) -> Self {
        let numel = shape.iter().product();
        Tensor {
            shape: shape.to_vec(),
            data: vec![0.0; numel],
            grad: None,
            requires_grad: false,
        }
    }

    pub fn from_vec(shape: &[usize], data: Vec<f64>) -> Result<Self, AdError> {
        let numel: usize = shape.iter().product();
        if data.len() != numel {
            return Err(AdError::ShapeMismatch {
                context: "Tensor::from_vec",
                expected: numel,
                got: data.len(),
            });
        }
        Ok(Tensor { shape: shape.to_vec(), data, grad: None, requires_grad: false })
    }

    pub fn scalar(v: f64) -> Self {
        Tensor { shape: vec![1], data: vec![v], grad: None, requires_grad: false }
    }

    pub fn with_grad(mut self) -> Self {
        self.requires_grad = true;
        if self.grad.is_none() {
            self.grad = Some(vec![0.0; self.data.len()]);
        }
        self
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn numel(&self) -> usize {
        self.data.len()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn requires_grad(&self) -> bool {
        self.requires_grad
    }

    pub fn grad(&self) -> Option<&[f64]> {
        self.grad.as_deref()
    }

    pub fn zero_grad(&mut self) {
        if let Some(g) = &mut self.grad {
            g.iter_mut().for_each(|v| *v = 0.0);
        } else if self.requires_grad {
            self.grad = Some(vec![0.0; self.data.len()]);
        }
    }

    /// Add `delta` into the gradient buffer, allocating it on first use.
    pub fn accumulate_grad(&mut self, delta: &[f64]) {
        assert_eq!(delta.len(), self.data.len(), "gradient length mismatch");
        let g = self.grad.get_or_insert_with(|| vec![0.0; self.data.len()]);
        for (gi, di) in g.iter_mut().zip(delta) {
            *gi += di;
        }
    }

    /// NaN or infinity anywhere in data or grad is an error state.
    pub fn check_finite(&self, context: &'static str) -> Result<(), AdError> {
        if self.data.iter().any(|v| !v.is_finite()) {
            return Err(AdError::NonFinite { context });
        }
        if let Some(g) = &self.grad {
            if g.iter().any(|v| !v.is_finite()) {
                return Err(AdError::NonFinite { context });
            }
        }
        Ok(())
    }

    /// Interpret the (1- or 2-d) shape as `(rows, cols)`; 1-d tensors are row
    /// vectors.
    pub fn rows_cols(&self) -> (usize, usize) {
        match self.shape.len() {
            1 => (1, self.shape[0]),
            2 => (self.shape[0], self.shape[1]),
            n => panic!("tape tensors must be 1- or 2-d, got {n}-d"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn from_vec_validates_length() {
        assert!(Tensor::from_vec(&[2, 3], vec![0.0; 6]).is_ok());
        let err = Tensor::from_vec(&[2, 3], vec![0.0; 5]).unwrap_err();
        assert!(matches!(err, AdError::ShapeMismatch { .. }));
    }

    #[test]
    fn grad_accumulates_across_calls() {
        let mut t = Tensor::zeros(&[3]).with_grad();
        t.accumulate_grad(&[1.0, 2.0, 3.0]);
        t.accumulate_grad(&[1.0, 1.0, 1.0]);
        assert_eq!(t.grad().unwrap(), &[2.0, 3.0, 4.0]);
        t.zero_grad();
        assert_eq!(t.grad().unwrap(), &[0.0, 0.0, 0.0]);
    }

    #[test]
    fn finite_check_flags_nan() {
        let mut t = Tensor::zeros(&[2]);
        assert!(t.check_finite("test").is_ok());
        t.data_mut()[1] = f64::NAN;
        assert!(matches!(t.check_finite("test"), Err(AdError::NonFinite { .. })));
    }
}
