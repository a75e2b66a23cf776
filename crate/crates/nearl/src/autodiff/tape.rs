//! Dynamic reverse-mode tape.
//!
//! Each training step builds a fresh graph: leaves are registered from
//! [`Tensor`]s, ops compute eagerly and record themselves, and `backward`
//! replays the tape in reverse. Node shapes are `(rows, cols)`; vectors are
//! `1 x n` rows and scalars are `1 x 1`.

use super::tensor::Tensor;
use super::AdError;

/// Handle to a node on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Var(usize);

#[derive(Debug, Clone)]
enum Op {
    Leaf,
    Constant,
    /// `[m,k] @ [k,n]`
    Matmul { a: Var, b: Var },
    /// `out[i,j] = x[i,j] + v[0,j]`
    AddRow { x: Var, v: Var },
    /// `out[i,j] = x[i,j] * v[0,j]`
    MulRow { x: Var, v: Var },
    Add { a: Var, b: Var },
    Sub { a: Var, b: Var },
    Mul { a: Var, b: Var },
    /// `out = x + s` with scalar node `s` broadcast everywhere.
    AddScalar { x: Var, s: Var },
    Neg { x: Var },
    Scale { x: Var, c: f64 },
    AddConst { x: Var, c: f64 },
    Tanh { x: Var },
    Relu { x: Var },
    Exp { x: Var },
    Ln { x: Var },
    Square { x: Var },
    /// `ln(1 + e^x)`, evaluated stably.
    Softplus { x: Var },
    /// Componentwise clamp; gradient passes through strictly inside the box.
    Clamp { x: Var, lo: f64, hi: f64 },
    /// Componentwise minimum; ties route the gradient to `a`.
    MinElem { a: Var, b: Var },
    SumAll { x: Var },
    MeanAll { x: Var },
    /// Row sums: `[m,n] -> [m,1]`.
    SumCols { x: Var },
    ConcatCols { a: Var, b: Var },
}

struct Node {
    op: Op,
    rows: usize,
    cols: usize,
    data: Vec<f64>,
    grad: Vec<f64>,
    needs_grad: bool,
}

/// A dynamic computation graph. Build, call [`Tape::backward`] once, read
/// gradients, drop.
#[derive(Default)]
pub struct Tape {
    nodes: Vec<Node>,
    consumed: bool,
}

fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

impl Tape {
    pub fn new() -> Self {
        Tape::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, op: Op, rows: usize, cols: usize, data: Vec<f64>, needs_grad: bool) -> Var {
        assert_eq!(data.len(), rows * cols, "node data length mismatch");
        let grad = vec![0.0; data.len()];
        self.nodes.push(Node { op, rows, cols, data, grad, needs_grad });
        Var(self.nodes.len() - 1)
    }

    fn needs(&self, v: Var) -> bool {
        self.nodes[v.0].needs_grad
    }

    pub fn value(&self, v: Var) -> &[f64] {
        &self.nodes[v.0].data
    }

    pub fn scalar_value(&self, v: Var) -> f64 {
        let n = &self.nodes[v.0];
        assert_eq!(n.data.len(), 1, "scalar_value on non-scalar node");
        n.data[0]
    }

    pub fn grad(&self, v: Var) -> &[f64] {
        &self.nodes[v.0].grad
    }

    pub fn shape(&self, v: Var) -> (usize, usize) {
        let n = &self.nodes[v.0];
        (n.rows, n.cols)
    }

    /// Register a tensor as a differentiable leaf (copies its data).
    pub fn leaf(&mut self, t: &Tensor) -> Var {
        let (r, c) = t.rows_cols();
        self.push(Op::Leaf, r, c, t.data().to_vec(), t.requires_grad())
    }

    /// Register non-differentiable input data.
    pub fn constant(&mut self, rows: usize, cols: usize, data: &[f64]) -> Var {
        assert_eq!(data.len(), rows * cols, "constant data length mismatch");
        self.push(Op::Constant, rows, cols, data.to_vec(), false)
    }

    pub fn constant_scalar(&mut self, v: f64) -> Var {
        self.constant(1, 1, &[v])
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Var {
        let (m, k) = self.shape(a);
        let (k2, n) = self.shape(b);
        assert_eq!(k, k2, "matmul inner dimension mismatch");
        let mut out = vec![0.0; m * n];
        {
            let ad = &self.nodes[a.0].data;
            let bd = &self.nodes[b.0].data;
            for i in 0..m {
                for p in 0..k {
                    let av = ad[i * k + p];
                    if av == 0.0 {
                        continue;
                    }
                    let brow = &bd[p * n..(p + 1) * n];
                    let orow = &mut out[i * n..(i + 1) * n];
                    for j in 0..n {
                        orow[j] += av * brow[j];
                    }
                }
            }
        }
        let ng = self.needs(a) || self.needs(b);
        self.push(Op::Matmul { a, b }, m, n, out, ng)
    }

    pub fn add_row(&mut self, x: Var, v: Var) -> Var {
        let (m, n) = self.shape(x);
        let (vr, vc) = self.shape(v);
        assert!(vr == 1 && vc == n, "add_row expects a 1 x n row vector");
        let data: Vec<f64> = {
            let xd = &self.nodes[x.0].data;
            let vd = &self.nodes[v.0].data;
            xd.iter().enumerate().map(|(idx, &val)| val + vd[idx % n]).collect()
        };
        let ng = self.needs(x) || self.needs(v);
        self.push(Op::AddRow { x, v }, m, n, data, ng)
    }

    pub fn mul_row(&mut self, x: Var, v: Var) -> Var {
        let (m, n) = self.shape(x);
        let (vr, vc) = self.shape(v);
        assert!(vr == 1 && vc == n, "mul_row expects a 1 x n row vector");
        let data: Vec<f64> = {
            let xd = &self.nodes[x.0].data;
            let vd = &self.nodes[v.0].data;
            xd.iter().enumerate().map(|(idx, &val)| val * vd[idx % n]).collect()
        };
        let ng = self.needs(x) || self.needs(v);
        self.push(Op::MulRow { x, v }, m, n, data, ng)
    }

    fn same_shape(&self, a: Var, b: Var, what: &str) -> (usize, usize) {
        let sa = self.shape(a);
        let sb = self.shape(b);
        assert_eq!(sa, sb, "{what} shape mismatch: {sa:?} vs {sb:?}");
        sa
    }

    pub fn add(&mut self, a: Var, b: Var) -> Var {
        let (m, n) = self.same_shape(a, b, "add");
        let data = self.zip_map(a, b, |x, y| x + y);
        let ng = self.needs(a) || self.needs(b);
        self.push(Op::Add { a, b }, m, n, data, ng)
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Var {
        let (m, n) = self.same_shape(a, b, "sub");
        let data = self.zip_map(a, b, |x, y| x - y);
        let ng = self.needs(a) || self.needs(b);
        self.push(Op::Sub { a, b }, m, n, data, ng)
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Var {
        let (m, n) = self.same_shape(a, b, "mul");
        let data = self.zip_map(a, b, |x, y| x * y);
        let ng = self.needs(a) || self.needs(b);
        self.push(Op::Mul { a, b }, m, n, data, ng)
    }

    pub fn add_scalar(&mut self, x: Var, s: Var) -> Var {
        let (m, n) = self.shape(x);
        assert_eq!(self.shape(s), (1, 1), "add_scalar expects a scalar node");
        let sv = self.nodes[s.0].data[0];
        let data: Vec<f64> = self.nodes[x.0].data.iter().map(|v| v + sv).collect();
        let ng = self.needs(x) || self.needs(s);
        self.push(Op::AddScalar { x, s }, m, n, data, ng)
    }

    fn zip_map(&self, a: Var, b: Var, f: impl Fn(f64, f64) -> f64) -> Vec<f64> {
        self.nodes[a.0]
            .data
            .iter()
            .zip(&self.nodes[b.0].data)
            .map(|(&x, &y)| f(x, y))
            .collect()
    }

    fn unary(&mut self, x: Var, f: impl Fn(f64) -> f64, op: Op) -> Var {
        let (m, n) = self.shape(x);
        let data: Vec<f64> = self.nodes[x.0].data.iter().map(|&v| f(v)).collect();
        let ng = self.needs(x);
        self.push(op, m, n, data, ng)
    }

    pub fn neg(&mut self, x: Var) -> Var {
        self.unary(x, |v| -v, Op::Neg { x })
    }

    pub fn scale(&mut self, x: Var, c: f64) -> Var {
        self.unary(x, |v| v * c, Op::Scale { x, c })
    }

    pub fn add_const(&mut self, x: Var, c: f64) -> Var {
        self.unary(x, |v| v + c, Op::AddConst { x, c })
    }

    pub fn tanh(&mut self, x: Var) -> Var {
        self.unary(x, f64::tanh, Op::Tanh { x })
    }

    pub fn relu(&mut self, x: Var) -> Var {
        self.unary(x, |v| v.max(0.0), Op::Relu { x })
    }

    pub fn exp(&mut self, x: Var) -> Var {
        self.unary(x, f64::exp, Op::Exp { x })
    }

    pub fn ln(&mut self, x: Var) -> Var {
        self.unary(x, f64::ln, Op::Ln { x })
    }

    pub fn square(&mut self, x: Var) -> Var {
        self.unary(x, |v| v * v, Op::Square { x })
    }

    pub fn softplus(&mut self, x: Var) -> Var {
        self.unary(x, softplus, Op::Softplus { x })
    }

    pub fn clamp(&mut self, x: Var, lo: f64, hi: f64) -> Var {
        assert!(lo <= hi, "clamp bounds inverted");
        self.unary(x, |v| v.clamp(lo, hi), Op::Clamp { x, lo, hi })
    }

    pub fn min_elem(&mut self, a: Var, b: Var) -> Var {
        let (m, n) = self.same_shape(a, b, "min_elem");
        let data = self.zip_map(a, b, f64::min);
        let ng = self.needs(a) || self.needs(b);
        self.push(Op::MinElem { a, b }, m, n, data, ng)
    }

    pub fn sum_all(&mut self, x: Var) -> Var {
        let s: f64 = self.nodes[x.0].data.iter().sum();
        let ng = self.needs(x);
        self.push(Op::SumAll { x }, 1, 1, vec![s], ng)
    }

    pub fn mean_all(&mut self, x: Var) -> Var {
        let n = self.nodes[x.0].data.len();
        assert!(n > 0, "mean of empty node");
        let s: f64 = self.nodes[x.0].data.iter().sum();
        let ng = self.needs(x);
        self.push(Op::MeanAll { x }, 1, 1, vec![s / n as f64], ng)
    }

    pub fn sum_cols(&mut self, x: Var) -> Var {
        let (m, n) = self.shape(x);
        let data: Vec<f64> = {
            let xd = &self.nodes[x.0].data;
            (0..m).map(|i| xd[i * n..(i + 1) * n].iter().sum()).collect()
        };
        let ng = self.needs(x);
        self.push(Op::SumCols { x }, m, 1, data, ng)
    }

    pub fn concat_cols(&mut self, a: Var, b: Var) -> Var {
        let (m, n1) = self.shape(a);
        let (m2, n2) = self.shape(b);
        assert_eq!(m, m2, "concat_cols row mismatch");
        let mut data = Vec::with_capacity(m * (n1 + n2));
        {
            let ad = &self.nodes[a.0].data;
            let bd = &self.nodes[b.0].data;
            for i in 0..m {
                data.extend_from_slice(&ad[i * n1..(i + 1) * n1]);
                data.extend_from_slice(&bd[i * n2..(i + 1) * n2]);
            }
        }
        let ng = self.needs(a) || self.needs(b);
        self.push(Op::ConcatCols { a, b }, m, n1 + n2, data, ng)
    }

    /// Reverse sweep from a scalar loss. Consumes the graph: a second call is
    /// an error, as is a non-scalar or non-finite loss.
    pub fn backward(&mut self, loss: Var) -> Result<(), AdError> {
        if self.consumed {
            return Err(AdError::GraphConsumed);
        }
        let loss_node = &self.nodes[loss.0];
        if loss_node.data.len() != 1 {
            return Err(AdError::NonScalarLoss { numel: loss_node.data.len() });
        }
        if !loss_node.data[0].is_finite() {
            return Err(AdError::NonFinite { context: "loss value before backward" });
        }
        self.consumed = true;
        self.nodes[loss.0].grad[0] = 1.0;

        for i in (0..=loss.0).rev() {
            if !self.nodes[i].needs_grad {
                continue;
            }
            let g = std::mem::take(&mut self.nodes[i].grad);
            let op = self.nodes[i].op.clone();
            self.apply_vjp(i, &op, &g);
            self.nodes[i].grad = g;
        }
        Ok(())
    }

    fn apply_vjp(&mut self, out_idx: usize, op: &Op, g: &[f64]) {
        match *op {
            Op::Leaf | Op::Constant => {}
            Op::Matmul { a, b } => {
                let (m, k) = self.shape(a);
                let (_, n) = self.shape(b);
                if self.needs(a) {
                    // dA = g @ B^T
                    let mut da = vec![0.0; m * k];
                    {
                        let bd = &self.nodes[b.0].data;
                        for i in 0..m {
                            for p in 0..k {
                                let mut acc = 0.0;
                                for j in 0..n {
                                    acc += g[i * n + j] * bd[p * n + j];
                                }
                                da[i * k + p] = acc;
                            }
                        }
                    }
                    add_into(&mut self.nodes[a.0].grad, &da);
                }
                if self.needs(b) {
                    // dB = A^T @ g
                    let mut db = vec![0.0; k * n];
                    {
                        let ad = &self.nodes[a.0].data;
                        for p in 0..k {
                            for i in 0..m {
                                let av = ad[i * k + p];
                                if av == 0.0 {
                                    continue;
                                }
                                for j in 0..n {
                                    db[p * n + j] += av * g[i * n + j];
                                }
                            }
                        }
                    }
                    add_into(&mut self.nodes[b.0].grad, &db);
                }
            }
            Op::AddRow { x, v } => {
                let (_, n) = self.shape(x);
                if self.needs(x) {
                    add_into(&mut self.nodes[x.0].grad, g);
                }
                if self.needs(v) {
                    let vg = &mut self.nodes[v.0].grad;
                    for (idx, &gi) in g.iter().enumerate() {
                        vg[idx % n] += gi;
                    }
                }
            }
            Op::MulRow { x, v } => {
                let (_, n) = self.shape(x);
                if self.needs(x) {
                    let vd = self.nodes[v.0].data.clone();
                    let xg = &mut self.nodes[x.0].grad;
                    for (idx, &gi) in g.iter().enumerate() {
                        xg[idx] += gi * vd[idx % n];
                    }
                }
                if self.needs(v) {
                    let xd = self.nodes[x.0].data.clone();
                    let vg = &mut self.nodes[v.0].grad;
                    for (idx, &gi) in g.iter().enumerate() {
                        vg[idx % n] += gi * xd[idx];
                    }
                }
            }
            Op::Add { a, b } => {
                if self.needs(a) {
                    add_into(&mut self.nodes[a.0].grad, g);
                }
                if self.needs(b) {
                    add_into(&mut self.nodes[b.0].grad, g);
                }
            }
            Op::Sub { a, b } => {
                if self.needs(a) {
                    add_into(&mut self.nodes[a.0].grad, g);
                }
                if self.needs(b) {
                    sub_into(&mut self.nodes[b.0].grad, g);
                }
            }
            Op::Mul { a, b } => {
                if self.needs(a) {
                    let bd = self.nodes[b.0].data.clone();
                    let ag = &mut self.nodes[a.0].grad;
                    for i in 0..g.len() {
                        ag[i] += g[i] * bd[i];
                    }
                }
                if self.needs(b) {
                    let ad = self.nodes[a.0].data.clone();
                    let bg = &mut self.nodes[b.0].grad;
                    for i in 0..g.len() {
                        bg[i] += g[i] * ad[i];
                    }
                }
            }
            Op::AddScalar { x, s } => {
                if self.needs(x) {
                    add_into(&mut self.nodes[x.0].grad, g);
                }
                if self.needs(s) {
                    self.nodes[s.0].grad[0] += g.iter().sum::<f64>();
                }
            }
            Op::Neg { x } => {
                if self.needs(x) {
                    sub_into(&mut self.nodes[x.0].grad, g);
                }
            }
            Op::Scale { x, c } => {
                if self.needs(x) {
                    let xg = &mut self.nodes[x.0].grad;
                    for i in 0..g.len() {
                        xg[i] += g[i] * c;
                    }
                }
            }
            Op::AddConst { x, .. } => {
                if self.needs(x) {
                    add_into(&mut self.nodes[x.0].grad, g);
                }
            }
            Op::Tanh { x } => {
                if self.needs(x) {
                    let out = self.nodes[out_idx].data.clone();
                    let xg = &mut self.nodes[x.0].grad;
                    for i in 0..g.len() {
                        xg[i] += g[i] * (1.0 - out[i] * out[i]);
                    }
                }
            }
            Op::Relu { x } => {
                if self.needs(x) {
                    let xd = self.nodes[x.0].data.clone();
                    let xg = &mut self.nodes[x.0].grad;
                    for i in 0..g.len() {
                        if xd[i] > 0.0 {
                            xg[i] += g[i];
                        }
                    }
                }
            }
            Op::Exp { x } => {
                if self.needs(x) {
                    let out = self.nodes[out_idx].data.clone();
                    let xg = &mut self.nodes[x.0].grad;
                    for i in 0..g.len() {
                        xg[i] += g[i] * out[i];
                    }
                }
            }
            Op::Ln { x } => {
                if self.needs(x) {
                    let xd = self.nodes[x.0].data.clone();
                    let xg = &mut self.nodes[x.0].grad;
                    for i in 0..g.len() {
                        xg[i] += g[i] / xd[i];
                    }
                }
            }
            Op::Square { x } => {
                if self.needs(x) {
                    let xd = self.nodes[x.0].data.clone();
                    let xg = &mut self.nodes[x.0].grad;
                    for i in 0..g.len() {
                        xg[i] += g[i] * 2.0 * xd[i];
                    }
                }
            }
            Op::Softplus { x } => {
                if self.needs(x) {
                    let xd = self.nodes[x.0].data.clone();
                    let xg = &mut self.nodes[x.0].grad;
                    for i in 0..g.len() {
                        xg[i] += g[i] * sigmoid(xd[i]);
                    }
                }
            }
            Op::Clamp { x, lo, hi } => {
                if self.needs(x) {
                    let xd = self.nodes[x.0].data.clone();
                    let xg = &mut self.nodes[x.0].grad;
                    for i in 0..g.len() {
                        if xd[i] >= lo && xd[i] <= hi {
                            xg[i] += g[i];
                        }
                    }
                }
            }
            Op::MinElem { a, b } => {
                let ad = self.nodes[a.0].data.clone();
                let bd = self.nodes[b.0].data.clone();
                if self.needs(a) {
                    let ag = &mut self.nodes[a.0].grad;
                    for i in 0..g.len() {
                        if ad[i] <= bd[i] {
                            ag[i] += g[i];
                        }
                    }
                }
                if self.needs(b) {
                    let bg = &mut self.nodes[b.0].grad;
                    for i in 0..g.len() {
                        if bd[i] < ad[i] {
                            bg[i] += g[i];
                        }
                    }
                }
            }
            Op::SumAll { x } => {
                if self.needs(x) {
                    let xg = &mut self.nodes[x.0].grad;
                    for v in xg.iter_mut() {
                        *v += g[0];
                    }
                }
            }
            Op::MeanAll { x } => {
                if self.needs(x) {
                    let n = self.nodes[x.0].data.len() as f64;
                    let xg = &mut self.nodes[x.0].grad;
                    for v in xg.iter_mut() {
                        *v += g[0] / n;
                    }
                }
            }
            Op::SumCols { x } => {
                if self.needs(x) {
                    let (m, n) = self.shape(x);
                    let xg = &mut self.nodes[x.0].grad;
                    for i in 0..m {
                        for j in 0..n {
                            xg[i * n + j] += g[i];
                        }
                    }
                }
            }
            Op::ConcatCols { a, b } => {
                let (m, n1) = self.shape(a);
                let (_, n2) = self.shape(b);
                if self.needs(a) {
                    let ag = &mut self.nodes[a.0].grad;
                    for i in 0..m {
                        for j in 0..n1 {
                            ag[i * n1 + j] += g[i * (n1 + n2) + j];
                        }
                    }
                }
                if self.needs(b) {
                    let bg = &mut self.nodes[b.0].grad;
                    for i in 0..m {
                        for j in 0..n2 {
                            bg[i * n2 + j] += g[i * (n1 + n2) + n1 + j];
                        }
                    }
                }
            }
        }
    }
}

fn add_into(acc: &mut [f64], delta: &[f64]) {
    for (a, d) in acc.iter_mut().zip(delta) {
        *a += d;
    }
}

fn sub_into(acc: &mut [f64], delta: &[f64]) {
    for (a, d) in acc.iter_mut().zip(delta) {
        *a -= d;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_gradient_at_three() {
        // loss = x^2 at x = 3 -> dx = 6
        let mut tape = Tape::new();
        let x = Tensor::from_vec(&[1], vec![3.0]).unwrap().with_grad();
        let xv = tape.leaf(&x);
        let loss = tape.square(xv);
        tape.backward(loss).unwrap();
        assert_eq!(tape.grad(xv), &[6.0]);
    }

    #[test]
    fn loss_independent_of_leaf_gives_zero_grad() {
        let mut tape = Tape::new();
        let theta = Tensor::from_vec(&[1], vec![2.0]).unwrap().with_grad();
        let tv = tape.leaf(&theta);
        let c = tape.constant_scalar(5.0);
        let loss = tape.square(c);
        tape.backward(loss).unwrap();
        assert_eq!(tape.grad(tv), &[0.0]);
    }

    #[test]
    fn backward_rejects_non_scalar_and_double_call() {
        let mut tape = Tape::new();
        let x = Tensor::from_vec(&[2], vec![1.0, 2.0]).unwrap().with_grad();
        let xv = tape.leaf(&x);
        let y = tape.square(xv);
        assert!(matches!(tape.backward(y), Err(AdError::NonScalarLoss { .. })));
        let s = tape.sum_all(y);
        tape.backward(s).unwrap();
        assert!(matches!(tape.backward(s), Err(AdError::GraphConsumed)));
    }

    #[test]
    fn backward_rejects_non_finite_loss() {
        let mut tape = Tape::new();
        let x = Tensor::from_vec(&[1], vec![-1.0]).unwrap().with_grad();
        let xv = tape.leaf(&x);
        let loss = tape.ln(xv); // ln(-1) = NaN
        assert!(matches!(tape.backward(loss), Err(AdError::NonFinite { .. })));
    }

    #[test]
    fn linearity_of_backward() {
        // backward of a*f + b*g equals a*grad(f) + b*grad(g) exactly.
        let xval = vec![0.3, -1.2, 2.0];
        let grad_of = |a: f64, b: f64| -> Vec<f64> {
            let mut tape = Tape::new();
            let x = Tensor::from_vec(&[3], xval.clone()).unwrap().with_grad();
            let xv = tape.leaf(&x);
            let f = {
                let sq = tape.square(xv);
                tape.sum_all(sq)
            };
            let g = {
                let t = tape.tanh(xv);
                tape.sum_all(t)
            };
            let fa = tape.scale(f, a);
            let gb = tape.scale(g, b);
            let loss = tape.add(fa, gb);
            tape.backward(loss).unwrap();
            tape.grad(xv).to_vec()
        };
        let gf = grad_of(1.0, 0.0);
        let gg = grad_of(0.0, 1.0);
        let combined = grad_of(2.5, -0.75);
        for i in 0..3 {
            assert_eq!(combined[i], 2.5 * gf[i] + -0.75 * gg[i]);
        }
    }

    #[test]
    fn matmul_vjp_hand_checked() {
        // out = A @ B, loss = sum(out); dA = 1 @ B^T, dB = A^T @ 1
        let mut tape = Tape::new();
        let a = Tensor::from_vec(&[2, 2], vec![1.0, 2.0, 3.0, 4.0]).unwrap().with_grad();
        let b = Tensor::from_vec(&[2, 2], vec![5.0, 6.0, 7.0, 8.0]).unwrap().with_grad();
        let av = tape.leaf(&a);
        let bv = tape.leaf(&b);
        let prod = tape.matmul(av, bv);
        let loss = tape.sum_all(prod);
        tape.backward(loss).unwrap();
        assert_eq!(tape.grad(av), &[11.0, 15.0, 11.0, 15.0]);
        assert_eq!(tape.grad(bv), &[4.0, 4.0, 6.0, 6.0]);
    }

    #[test]
    fn min_elem_routes_gradient_to_smaller_side() {
        let mut tape = Tape::new();
        let a = Tensor::from_vec(&[2], vec![1.0, 5.0]).unwrap().with_grad();
        let b = Tensor::from_vec(&[2], vec![3.0, 2.0]).unwrap().with_grad();
        let av = tape.leaf(&a);
        let bv = tape.leaf(&b);
        let m = tape.min_elem(av, bv);
        let loss = tape.sum_all(m);
        tape.backward(loss).unwrap();
        assert_eq!(tape.grad(av), &[1.0, 0.0]);
        assert_eq!(tape.grad(bv), &[0.0, 1.0]);
    }

    #[test]
    fn clamp_gradient_masked_outside_bounds() {
        let mut tape = Tape::new();
        let x = Tensor::from_vec(&[3], vec![-7.0, 0.5, 4.0]).unwrap().with_grad();
        let xv = tape.leaf(&x);
        let c = tape.clamp(xv, -5.0, 2.0);
        let loss = tape.sum_all(c);
        tape.backward(loss).unwrap();
        assert_eq!(tape.value(c), &[-5.0, 0.5, 2.0]);
        assert_eq!(tape.grad(xv), &[0.0, 1.0, 0.0]);
    }

    #[test]
    fn concat_cols_splits_gradient() {
        let mut tape = Tape::new();
        let a = Tensor::from_vec(&[2, 1], vec![1.0, 2.0]).unwrap().with_grad();
        let b = Tensor::from_vec(&[2, 2], vec![3.0, 4.0, 5.0, 6.0]).unwrap().with_grad();
        let av = tape.leaf(&a);
        let bv = tape.leaf(&b);
        let cat = tape.concat_cols(av, bv);
        assert_eq!(tape.value(cat), &[1.0, 3.0, 4.0, 2.0, 5.0, 6.0]);
        let sq = tape.square(cat);
        let loss = tape.sum_all(sq);
        tape.backward(loss).unwrap();
        assert_eq!(tape.grad(av), &[2.0, 4.0]);
        assert_eq!(tape.grad(bv), &[6.0, 8.0, 10.0, 12.0]);
    }

    #[test]
    fn softplus_is_stable_for_large_inputs() {
        let mut tape = Tape::new();
        let x = Tensor::from_vec(&[2], vec![800.0, -800.0]).unwrap().with_grad();
        let xv = tape.leaf(&x);
        let sp = tape.softplus(xv);
        let v = tape.value(sp);
        assert!((v[0] - 800.0).abs() < 1e-9);
        assert!(v[1] >= 0.0 && v[1] < 1e-300);
    }
}
