use std::cell::RefCell;
use std::collections::HashMap;
use std::sync::Arc;

use rand::Rng;

use crate::error::{Result, TensorError};
use crate::kernels;
use crate::params::{ParamId, ParamStore};
use crate::tensor::Tensor;

#[derive(Clone, Copy, Debug)]
enum Broadcast {
    Scalar,
    Row,
    Col,
}

enum Op {
    Leaf,
    MatMul(usize, usize),
    Add(usize, usize),
    Sub(usize, usize),
    Mul(usize, usize),
    AddBroadcast(usize, usize, Broadcast),
    Scale(usize, f64),
    Concat(Vec<usize>),
    VCat(Vec<usize>),
    Transpose(usize),
    Reshape(usize),
    Sigmoid(usize),
    Tanh(usize),
    Relu(usize),
    Exp(usize),
    Log(usize),
    Square(usize),
    Softmax(usize),
    Sum(usize),
    Mean(usize),
    Dropout(usize, Vec<f64>),
    Gather(usize, Vec<usize>),
    SliceCols(usize, usize, usize),
    TileRows(usize, usize),
    BceLogits {
        logits: usize,
        targets: Vec<f64>,
        weights: Vec<f64>,
    },
    CrossEntropy {
        logits: usize,
        bases: Vec<usize>,
        stride: usize,
        width: usize,
        targets: Vec<usize>,
    },
}

struct Node {
    value: Arc<Tensor>,
    op: Op,
}

/// Records operations in execution order so gradients can be propagated
/// backwards. One tape per forward pass; not shared across threads.
#[derive(Default)]
pub struct Tape {
    nodes: RefCell<Vec<Node>>,
    params: RefCell<HashMap<ParamId, usize>>,
}

/// Handle to a value recorded on a [`Tape`].
#[derive(Clone, Copy)]
pub struct Var<'t> {
    tape: &'t Tape,
    id: usize,
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.borrow().len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.borrow().is_empty()
    }

    fn push(&self, value: Arc<Tensor>, op: Op) -> Var<'_> {
        let mut nodes = self.nodes.borrow_mut();
        let id = nodes.len();
        nodes.push(Node { value, op });
        Var { tape: self, id }
    }

    /// Records a constant input; gradients reach it but are not reported
    /// as parameter gradients.
    pub fn constant(&self, value: Tensor) -> Var<'_> {
        self.push(Arc::new(value), Op::Leaf)
    }

    pub fn scalar(&self, value: f64) -> Var<'_> {
        self.constant(Tensor::scalar(value))
    }

    /// Registers a parameter. Registering the same id twice yields the same
    /// node, so its gradient accumulates over every use.
    pub fn param(&self, store: &ParamStore, id: ParamId) -> Var<'_> {
        if let Some(&node) = self.params.borrow().get(&id) {
            return Var { tape: self, id: node };
        }
        let var = self.push(store.shared(id), Op::Leaf);
        self.params.borrow_mut().insert(id, var.id);
        var
    }

    fn value_of(&self, id: usize) -> Arc<Tensor> {
        Arc::clone(&self.nodes.borrow()[id].value)
    }

    /// Propagates gradients from a scalar `loss` to every node it depends
    /// on. Each node is visited once, in reverse recording order.
    pub fn backward(&self, loss: Var<'_>) -> Result<Gradients> {
        let nodes = self.nodes.borrow();
        let out = &nodes[loss.id].value;
        if out.numel() != 1 {
            return Err(TensorError::NotScalar(out.shape().to_vec()));
        }
        let mut grads: Vec<Option<Tensor>> = (0..nodes.len()).map(|_| None).collect();
        grads[loss.id] = Some(Tensor::full(out.shape(), 1.0));

        for id in (0..=loss.id).rev() {
            let Some(g) = grads[id].take() else { continue };
            let node = &nodes[id];
            backprop(&nodes, node, &g, &mut grads);
            grads[id] = Some(g);
        }

        let params = self.params.borrow().clone();
        Ok(Gradients { grads, params })
    }
}

fn accumulate(grads: &mut [Option<Tensor>], nodes: &[Node], id: usize, delta: Tensor) {
    match &mut grads[id] {
        Some(g) => g.add_assign(&delta),
        slot @ None => {
            debug_assert_eq!(delta.numel(), nodes[id].value.numel());
            *slot = Some(delta);
        }
    }
}

fn with_shape(like: &Tensor, data: Vec<f64>) -> Tensor {
    Tensor::new(like.shape().to_vec(), data).expect("gradient shape")
}

fn backprop(nodes: &[Node], node: &Node, g: &Tensor, grads: &mut [Option<Tensor>]) {
    let out = &node.value;
    let val = |id: usize| -> &Tensor { &nodes[id].value };
    match &node.op {
        Op::Leaf => {}
        Op::MatMul(a, b) => {
            let (av, bv) = (val(*a), val(*b));
            let (m, k, n) = (av.rows(), av.cols(), bv.cols());
            let ga = kernels::matmul_nt(g.data(), bv.data(), m, n, k);
            let gb = kernels::matmul_tn(av.data(), g.data(), m, k, n);
            accumulate(grads, nodes, *a, with_shape(av, ga));
            accumulate(grads, nodes, *b, with_shape(bv, gb));
        }
        Op::Add(a, b) => {
            accumulate(grads, nodes, *a, g.clone());
            accumulate(grads, nodes, *b, g.clone());
        }
        Op::Sub(a, b) => {
            accumulate(grads, nodes, *a, g.clone());
            accumulate(grads, nodes, *b, g.map(|x| -x));
        }
        Op::Mul(a, b) => {
            let (av, bv) = (val(*a), val(*b));
            let ga = g.data().iter().zip(bv.data()).map(|(x, y)| x * y).collect();
            let gb = g.data().iter().zip(av.data()).map(|(x, y)| x * y).collect();
            accumulate(grads, nodes, *a, with_shape(av, ga));
            accumulate(grads, nodes, *b, with_shape(bv, gb));
        }
        Op::AddBroadcast(a, b, kind) => {
            accumulate(grads, nodes, *a, g.clone());
            let bv = val(*b);
            let (rows, cols) = (g.numel() / g.cols(), g.cols());
            let mut gb = vec![0.0; bv.numel()];
            for r in 0..rows {
                for c in 0..cols {
                    let x = g.data()[r * cols + c];
                    match kind {
                        Broadcast::Scalar => gb[0] += x,
                        Broadcast::Row => gb[c] += x,
                        Broadcast::Col => gb[r] += x,
                    }
                }
            }
            accumulate(grads, nodes, *b, with_shape(bv, gb));
        }
        Op::Scale(a, c) => accumulate(grads, nodes, *a, g.map(|x| x * c)),
        Op::Concat(parts) => {
            let total = g.cols();
            let rows = g.numel() / total;
            let mut offset = 0;
            for &p in parts {
                let pv = val(p);
                let w = pv.cols();
                let mut gp = Vec::with_capacity(pv.numel());
                for r in 0..rows {
                    gp.extend_from_slice(&g.data()[r * total + offset..r * total + offset + w]);
                }
                offset += w;
                accumulate(grads, nodes, p, with_shape(pv, gp));
            }
        }
        Op::VCat(parts) => {
            let mut offset = 0;
            for &p in parts {
                let pv = val(p);
                let n = pv.numel();
                accumulate(grads, nodes, p, with_shape(pv, g.data()[offset..offset + n].to_vec()));
                offset += n;
            }
        }
        Op::Transpose(a) => {
            let (r, c) = (out.rows(), out.cols());
            accumulate(
                grads,
                nodes,
                *a,
                with_shape(val(*a), kernels::transpose(g.data(), r, c)),
            );
        }
        Op::Reshape(a) => accumulate(grads, nodes, *a, with_shape(val(*a), g.data().to_vec())),
        Op::Sigmoid(a) => {
            let d = g
                .data()
                .iter()
                .zip(out.data())
                .map(|(g, y)| g * y * (1.0 - y))
                .collect();
            accumulate(grads, nodes, *a, with_shape(out, d));
        }
        Op::Tanh(a) => {
            let d = g
                .data()
                .iter()
                .zip(out.data())
                .map(|(g, y)| g * (1.0 - y * y))
                .collect();
            accumulate(grads, nodes, *a, with_shape(out, d));
        }
        Op::Relu(a) => {
            let d = g
                .data()
                .iter()
                .zip(val(*a).data())
                .map(|(g, x)| if *x > 0.0 { *g } else { 0.0 })
                .collect();
            accumulate(grads, nodes, *a, with_shape(out, d));
        }
        Op::Exp(a) => {
            let d = g.data().iter().zip(out.data()).map(|(g, y)| g * y).collect();
            accumulate(grads, nodes, *a, with_shape(out, d));
        }
        Op::Log(a) => {
            let d = g.data().iter().zip(val(*a).data()).map(|(g, x)| g / x).collect();
            accumulate(grads, nodes, *a, with_shape(out, d));
        }
        Op::Square(a) => {
            let d = g.data().iter().zip(val(*a).data()).map(|(g, x)| 2.0 * g * x).collect();
            accumulate(grads, nodes, *a, with_shape(out, d));
        }
        Op::Softmax(a) => {
            let w = out.cols();
            let mut d = vec![0.0; out.numel()];
            for ((dr, gr), yr) in d.chunks_mut(w).zip(g.data().chunks(w)).zip(out.data().chunks(w)) {
                let dot: f64 = gr.iter().zip(yr).map(|(a, b)| a * b).sum();
                for ((o, gi), yi) in dr.iter_mut().zip(gr).zip(yr) {
                    *o = yi * (gi - dot);
                }
            }
            accumulate(grads, nodes, *a, with_shape(out, d));
        }
        Op::Sum(a) => {
            let av = val(*a);
            accumulate(grads, nodes, *a, Tensor::full(av.shape(), g.item()));
        }
        Op::Mean(a) => {
            let av = val(*a);
            let n = av.numel().max(1) as f64;
            accumulate(grads, nodes, *a, Tensor::full(av.shape(), g.item() / n));
        }
        Op::Dropout(a, mask) => {
            let d = g.data().iter().zip(mask).map(|(g, m)| g * m).collect();
            accumulate(grads, nodes, *a, with_shape(out, d));
        }
        Op::Gather(table, ids) => {
            let tv = val(*table);
            let w = tv.cols();
            let mut d = vec![0.0; tv.numel()];
            for (r, &id) in ids.iter().enumerate() {
                for c in 0..w {
                    d[id * w + c] += g.data()[r * w + c];
                }
            }
            accumulate(grads, nodes, *table, with_shape(tv, d));
        }
        Op::SliceCols(a, start, end) => {
            let av = val(*a);
            let (rows, cols, w) = (av.rows(), av.cols(), end - start);
            let mut d = vec![0.0; av.numel()];
            for r in 0..rows {
                d[r * cols + start..r * cols + end].copy_from_slice(&g.data()[r * w..(r + 1) * w]);
            }
            accumulate(grads, nodes, *a, with_shape(av, d));
        }
        Op::TileRows(a, times) => {
            let av = val(*a);
            let n = av.numel();
            let mut d = vec![0.0; n];
            for t in 0..*times {
                for (o, x) in d.iter_mut().zip(&g.data()[t * n..(t + 1) * n]) {
                    *o += x;
                }
            }
            accumulate(grads, nodes, *a, with_shape(av, d));
        }
        Op::BceLogits {
            logits,
            targets,
            weights,
        } => {
            let lv = val(*logits);
            let scale = g.item();
            let d = lv
                .data()
                .iter()
                .zip(targets)
                .zip(weights)
                .map(|((s, y), w)| scale * w * (kernels::sigmoid(*s) - y))
                .collect();
            accumulate(grads, nodes, *logits, with_shape(lv, d));
        }
        Op::CrossEntropy {
            logits,
            bases,
            stride,
            width,
            targets,
        } => {
            let lv = val(*logits);
            let x = lv.data();
            let scale = g.item();
            let mut d = vec![0.0; lv.numel()];
            for (&base, &target) in bases.iter().zip(targets) {
                let row = (0..*width).map(|k| x[base + k * stride]);
                let lse = kernels::log_sum_exp(row);
                for k in 0..*width {
                    let idx = base + k * stride;
                    let p = (x[idx] - lse).exp();
                    d[idx] += scale * (p - if k == target { 1.0 } else { 0.0 });
                }
            }
            accumulate(grads, nodes, *logits, with_shape(lv, d));
        }
    }
}

/// Gradients produced by [`Tape::backward`].
pub struct Gradients {
    grads: Vec<Option<Tensor>>,
    params: HashMap<ParamId, usize>,
}

impl Gradients {
    /// Gradient of the loss with respect to a recorded value, if the loss
    /// depends on it.
    pub fn wrt(&self, var: Var<'_>) -> Option<&Tensor> {
        self.grads[var.id].as_ref()
    }

    pub fn param(&self, id: ParamId) -> Option<&Tensor> {
        self.params.get(&id).and_then(|&n| self.grads[n].as_ref())
    }

    /// Iterates over `(param, gradient)` for every parameter the loss
    /// depends on.
    pub fn params(&self) -> impl Iterator<Item = (ParamId, &Tensor)> {
        self.params
            .iter()
            .filter_map(|(&p, &n)| self.grads[n].as_ref().map(|g| (p, g)))
    }
}

fn shape_err(op: &'static str, a: &Tensor, b: &Tensor) -> TensorError {
    TensorError::Shape {
        op,
        left: a.shape().to_vec(),
        right: b.shape().to_vec(),
    }
}

// Fallible counterparts of the operator traits, named the same way.
#[allow(clippy::should_implement_trait)]
impl<'t> Var<'t> {
    pub fn value(&self) -> Arc<Tensor> {
        self.tape.value_of(self.id)
    }

    pub fn shape(&self) -> Vec<usize> {
        self.tape.nodes.borrow()[self.id].value.shape().to_vec()
    }

    pub fn tape(&self) -> &'t Tape {
        self.tape
    }

    fn unary(self, op: Op, f: impl Fn(f64) -> f64) -> Var<'t> {
        let v = self.value().map(f);
        self.tape.push(Arc::new(v), op)
    }

    fn zip_same(self, other: Var<'t>, name: &'static str, f: impl Fn(f64, f64) -> f64, op: Op) -> Result<Var<'t>> {
        let (a, b) = (self.value(), other.value());
        if a.shape() != b.shape() {
            return Err(shape_err(name, &a, &b));
        }
        let data = a.data().iter().zip(b.data()).map(|(x, y)| f(*x, *y)).collect();
        Ok(self.tape.push(Arc::new(with_shape(&a, data)), op))
    }

    /// Matrix product of two 2-D tensors.
    pub fn matmul(self, other: Var<'t>) -> Result<Var<'t>> {
        let (a, b) = (self.value(), other.value());
        if a.shape().len() != 2 || b.shape().len() != 2 || a.cols() != b.rows() {
            return Err(shape_err("matmul", &a, &b));
        }
        let (m, k, n) = (a.rows(), a.cols(), b.cols());
        let data = kernels::matmul(a.data(), b.data(), m, k, n);
        let out = Tensor::new(vec![m, n], data)?;
        Ok(self.tape.push(Arc::new(out), Op::MatMul(self.id, other.id)))
    }

    pub fn add(self, other: Var<'t>) -> Result<Var<'t>> {
        self.zip_same(other, "add", |x, y| x + y, Op::Add(self.id, other.id))
    }

    pub fn sub(self, other: Var<'t>) -> Result<Var<'t>> {
        self.zip_same(other, "sub", |x, y| x - y, Op::Sub(self.id, other.id))
    }

    /// Elementwise product.
    pub fn mul(self, other: Var<'t>) -> Result<Var<'t>> {
        self.zip_same(other, "mul", |x, y| x * y, Op::Mul(self.id, other.id))
    }

    /// Adds `other` to every row (shape `[1, c]` or `[c]`), every column
    /// (shape `[r, 1]`), every element (one value), or elementwise when
    /// the shapes are equal.
    pub fn add_broadcast(self, other: Var<'t>) -> Result<Var<'t>> {
        let (a, b) = (self.value(), other.value());
        if a.shape() == b.shape() {
            return self.add(other);
        }
        let cols = a.cols();
        let rows = a.numel() / cols.max(1);
        let kind = if b.numel() == 1 {
            Broadcast::Scalar
        } else if b.shape() == [1, cols] || b.shape() == [cols] {
            Broadcast::Row
        } else if b.shape() == [rows, 1] {
            Broadcast::Col
        } else {
            return Err(shape_err("add_broadcast", &a, &b));
        };
        let bd = b.data();
        let mut data = a.data().to_vec();
        for r in 0..rows {
            for c in 0..cols {
                data[r * cols + c] += match kind {
                    Broadcast::Scalar => bd[0],
                    Broadcast::Row => bd[c],
                    Broadcast::Col => bd[r],
                };
            }
        }
        let out = with_shape(&a, data);
        Ok(self.tape.push(Arc::new(out), Op::AddBroadcast(self.id, other.id, kind)))
    }

    pub fn scale(self, c: f64) -> Var<'t> {
        self.unary(Op::Scale(self.id, c), |x| x * c)
    }

    pub fn neg(self) -> Var<'t> {
        self.scale(-1.0)
    }

    /// Concatenates along the last axis; leading dimensions must agree.
    pub fn concat(parts: &[Var<'t>]) -> Result<Var<'t>> {
        let first = parts.first().ok_or_else(|| TensorError::InvalidArgument {
            op: "concat",
            msg: "no inputs".into(),
        })?;
        let values: Vec<_> = parts.iter().map(|p| p.value()).collect();
        let lead = &values[0].shape()[..values[0].shape().len().saturating_sub(1)];
        for v in &values[1..] {
            if &v.shape()[..v.shape().len().saturating_sub(1)] != lead {
                return Err(shape_err("concat", &values[0], v));
            }
        }
        let total: usize = values.iter().map(|v| v.cols()).sum();
        let rows = values[0].numel() / values[0].cols().max(1);
        let mut data = Vec::with_capacity(rows * total);
        for r in 0..rows {
            for v in &values {
                let w = v.cols();
                data.extend_from_slice(&v.data()[r * w..(r + 1) * w]);
            }
        }
        let mut shape = lead.to_vec();
        shape.push(total);
        let out = Tensor::new(shape, data)?;
        let ids = parts.iter().map(|p| p.id).collect();
        Ok(first.tape.push(Arc::new(out), Op::Concat(ids)))
    }

    /// Stacks 2-D tensors with equal column counts on top of each other.
    pub fn vcat(parts: &[Var<'t>]) -> Result<Var<'t>> {
        let first = parts.first().ok_or_else(|| TensorError::InvalidArgument {
            op: "vcat",
            msg: "no inputs".into(),
        })?;
        let values: Vec<_> = parts.iter().map(|p| p.value()).collect();
        let cols = values[0].cols();
        let mut rows = 0;
        let mut data = Vec::new();
        for v in &values {
            if v.shape().len() != 2 || v.cols() != cols {
                return Err(shape_err("vcat", &values[0], v));
            }
            rows += v.rows();
            data.extend_from_slice(v.data());
        }
        let out = Tensor::new(vec![rows, cols], data)?;
        let ids = parts.iter().map(|p| p.id).collect();
        Ok(first.tape.push(Arc::new(out), Op::VCat(ids)))
    }

    pub fn transpose(self) -> Result<Var<'t>> {
        let a = self.value();
        if a.shape().len() != 2 {
            return Err(TensorError::InvalidArgument {
                op: "transpose",
                msg: format!("expected a matrix, got {:?}", a.shape()),
            });
        }
        let (r, c) = (a.rows(), a.cols());
        let out = Tensor::new(vec![c, r], kernels::transpose(a.data(), r, c))?;
        Ok(self.tape.push(Arc::new(out), Op::Transpose(self.id)))
    }

    pub fn reshape(self, shape: &[usize]) -> Result<Var<'t>> {
        let out = self.value().reshaped(shape)?;
        Ok(self.tape.push(Arc::new(out), Op::Reshape(self.id)))
    }

    pub fn sigmoid(self) -> Var<'t> {
        self.unary(Op::Sigmoid(self.id), kernels::sigmoid)
    }

    pub fn tanh(self) -> Var<'t> {
        self.unary(Op::Tanh(self.id), f64::tanh)
    }

    pub fn relu(self) -> Var<'t> {
        self.unary(Op::Relu(self.id), |x| x.max(0.0))
    }

    pub fn exp(self) -> Var<'t> {
        self.unary(Op::Exp(self.id), f64::exp)
    }

    pub fn log(self) -> Var<'t> {
        self.unary(Op::Log(self.id), f64::ln)
    }

    pub fn square(self) -> Var<'t> {
        self.unary(Op::Square(self.id), |x| x * x)
    }

    /// Softmax over the last axis.
    pub fn softmax(self) -> Var<'t> {
        let a = self.value();
        let w = a.cols();
        let mut data = a.data().to_vec();
        for row in data.chunks_mut(w.max(1)) {
            let lse = kernels::log_sum_exp(row.iter().copied());
            for x in row.iter_mut() {
                *x = (*x - lse).exp();
            }
        }
        let out = with_shape(&a, data);
        self.tape.push(Arc::new(out), Op::Softmax(self.id))
    }

    pub fn sum(self) -> Var<'t> {
        let s = self.value().data().iter().sum();
        self.tape.push(Arc::new(Tensor::scalar(s)), Op::Sum(self.id))
    }

    pub fn mean(self) -> Var<'t> {
        let a = self.value();
        let m = a.data().iter().sum::<f64>() / a.numel().max(1) as f64;
        self.tape.push(Arc::new(Tensor::scalar(m)), Op::Mean(self.id))
    }

    /// Inverted dropout: in train mode each unit is zeroed with probability
    /// `rate` and survivors are scaled by `1 / (1 - rate)`; otherwise the
    /// identity.
    pub fn dropout<R: Rng + ?Sized>(self, rate: f64, train: bool, rng: &mut R) -> Result<Var<'t>> {
        if !(0.0..1.0).contains(&rate) {
            return Err(TensorError::InvalidArgument {
                op: "dropout",
                msg: format!("rate {rate} outside [0, 1)"),
            });
        }
        if !train || rate == 0.0 {
            return Ok(self);
        }
        let a = self.value();
        let keep = 1.0 / (1.0 - rate);
        let mask: Vec<f64> = (0..a.numel())
            .map(|_| if rng.gen::<f64>() < rate { 0.0 } else { keep })
            .collect();
        let data = a.data().iter().zip(&mask).map(|(x, m)| x * m).collect();
        let out = with_shape(&a, data);
        Ok(self.tape.push(Arc::new(out), Op::Dropout(self.id, mask)))
    }

    /// Selects rows of a 2-D table; this is also the embedding lookup.
    pub fn gather_rows(self, ids: &[usize]) -> Result<Var<'t>> {
        let t = self.value();
        if t.shape().len() != 2 {
            return Err(TensorError::InvalidArgument {
                op: "gather_rows",
                msg: format!("expected a matrix, got {:?}", t.shape()),
            });
        }
        let w = t.cols();
        let mut data = Vec::with_capacity(ids.len() * w);
        for &id in ids {
            if id >= t.rows() {
                return Err(TensorError::InvalidArgument {
                    op: "gather_rows",
                    msg: format!("row {id} out of range for {:?}", t.shape()),
                });
            }
            data.extend_from_slice(t.row(id));
        }
        let out = Tensor::new(vec![ids.len(), w], data)?;
        Ok(self.tape.push(Arc::new(out), Op::Gather(self.id, ids.to_vec())))
    }

    pub fn slice_cols(self, start: usize, end: usize) -> Result<Var<'t>> {
        let a = self.value();
        if a.shape().len() != 2 || start > end || end > a.cols() {
            return Err(TensorError::InvalidArgument {
                op: "slice_cols",
                msg: format!("columns {start}..{end} of {:?}", a.shape()),
            });
        }
        let (rows, cols) = (a.rows(), a.cols());
        let mut data = Vec::with_capacity(rows * (end - start));
        for r in 0..rows {
            data.extend_from_slice(&a.data()[r * cols + start..r * cols + end]);
        }
        let out = Tensor::new(vec![rows, end - start], data)?;
        Ok(self.tape.push(Arc::new(out), Op::SliceCols(self.id, start, end)))
    }

    /// Repeats a 2-D tensor `times` times along the first axis.
    pub fn tile_rows(self, times: usize) -> Result<Var<'t>> {
        let a = self.value();
        if a.shape().len() != 2 {
            return Err(TensorError::InvalidArgument {
                op: "tile_rows",
                msg: format!("expected a matrix, got {:?}", a.shape()),
            });
        }
        let mut data = Vec::with_capacity(a.numel() * times);
        for _ in 0..times {
            data.extend_from_slice(a.data());
        }
        let out = Tensor::new(vec![a.rows() * times, a.cols()], data)?;
        Ok(self.tape.push(Arc::new(out), Op::TileRows(self.id, times)))
    }

    /// `Σ w · BCE(sigmoid(s), y)` over all elements, computed from logits as
    /// `softplus(s) − s·y`.
    pub fn bce_with_logits_sum(self, targets: &[f64], weights: &[f64]) -> Result<Var<'t>> {
        let s = self.value();
        if targets.len() != s.numel() || weights.len() != s.numel() {
            return Err(TensorError::Shape {
                op: "bce_with_logits",
                left: s.shape().to_vec(),
                right: vec![targets.len(), weights.len()],
            });
        }
        let total = s
            .data()
            .iter()
            .zip(targets)
            .zip(weights)
            .map(|((s, y), w)| w * (kernels::softplus(*s) - s * y))
            .sum();
        Ok(self.tape.push(
            Arc::new(Tensor::scalar(total)),
            Op::BceLogits {
                logits: self.id,
                targets: targets.to_vec(),
                weights: weights.to_vec(),
            },
        ))
    }

    /// Summed softmax cross-entropy over rows of a 2-D logit matrix.
    pub fn cross_entropy_rows_sum(self, rows: &[usize], targets: &[usize]) -> Result<Var<'t>> {
        let s = self.value();
        let w = s.cols();
        let bases: Vec<usize> = rows.iter().map(|r| r * w).collect();
        if rows.iter().any(|&r| r >= s.rows()) {
            return Err(TensorError::InvalidArgument {
                op: "cross_entropy",
                msg: format!("row out of range for {:?}", s.shape()),
            });
        }
        self.cross_entropy_strided_sum(&bases, 1, w, targets)
    }

    /// Summed softmax cross-entropy where logit vector `r` consists of the
    /// flat elements `bases[r] + k·stride` for `k < width`.
    pub fn cross_entropy_strided_sum(
        self,
        bases: &[usize],
        stride: usize,
        width: usize,
        targets: &[usize],
    ) -> Result<Var<'t>> {
        let s = self.value();
        let x = s.data();
        if bases.len() != targets.len()
            || targets.iter().any(|&t| t >= width)
            || bases.iter().any(|&b| width > 0 && b + (width - 1) * stride >= x.len())
        {
            return Err(TensorError::InvalidArgument {
                op: "cross_entropy",
                msg: format!("{} rows of width {width} over {:?}", bases.len(), s.shape()),
            });
        }
        let mut total = 0.0;
        for (&base, &target) in bases.iter().zip(targets) {
            let lse = kernels::log_sum_exp((0..width).map(|k| x[base + k * stride]));
            total += lse - x[base + target * stride];
        }
        Ok(self.tape.push(
            Arc::new(Tensor::scalar(total)),
            Op::CrossEntropy {
                logits: self.id,
                bases: bases.to_vec(),
                stride,
                width,
                targets: targets.to_vec(),
            },
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn close(a: &[f64], b: &[f64]) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() < 1e-12)
    }

    #[test]
    fn matmul_identity() {
        let tape = Tape::new();
        let a = tape.constant(Tensor::new(vec![2, 3], vec![1., 2., 3., 4., 5., 6.]).unwrap());
        let i = tape.constant(Tensor::eye(3));
        let out = a.matmul(i).unwrap();
        assert_eq!(out.value().data(), a.value().data());
    }

    #[test]
    fn shape_error_names_both_shapes() {
        let tape = Tape::new();
        let a = tape.constant(Tensor::zeros(&[2, 3]));
        let b = tape.constant(Tensor::zeros(&[2, 3]));
        let err = a.matmul(b).err().unwrap();
        let msg = err.to_string();
        assert!(msg.contains("[2, 3]") && msg.contains("matmul"), "{msg}");
        assert!(a.add(tape.constant(Tensor::zeros(&[3, 2]))).is_err());
    }

    #[test]
    fn softmax_of_zeros_is_uniform() {
        let tape = Tape::new();
        let x = tape.constant(Tensor::zeros(&[1, 2]));
        assert!(close(x.softmax().value().data(), &[0.5, 0.5]));
    }

    #[test]
    fn dropout_boundaries() {
        let tape = Tape::new();
        let mut rng = rand::rngs::StdRng::seed_from_u64(7);
        let x = tape.constant(Tensor::full(&[4, 5], 1.5));
        let same = x.dropout(0.0, true, &mut rng).unwrap();
        assert_eq!(same.value().data(), x.value().data());
        let eval = x.dropout(0.5, false, &mut rng).unwrap();
        assert_eq!(eval.value().data(), x.value().data());
        let almost_all = x.dropout(1.0 - 1e-12, true, &mut rng).unwrap();
        assert!(almost_all.value().data().iter().all(|&v| v == 0.0));
        assert!(x.dropout(1.0, true, &mut rng).is_err());
    }

    #[test]
    fn dropout_preserves_expectation() {
        let tape = Tape::new();
        let mut rng = rand::rngs::StdRng::seed_from_u64(11);
        let x = tape.constant(Tensor::full(&[100, 100], 1.0));
        let y = x.dropout(0.3, true, &mut rng).unwrap();
        let mean = y.value().data().iter().sum::<f64>() / 10_000.0;
        assert!((mean - 1.0).abs() < 0.05, "{mean}");
    }

    #[test]
    fn sum_of_squares_gradient() {
        let tape = Tape::new();
        let mut store = ParamStore::new();
        let p = store
            .add("p", Tensor::new(vec![3], vec![1.0, -2.0, 0.5]).unwrap())
            .unwrap();
        let v = tape.param(&store, p);
        let loss = v.square().sum();
        let grads = tape.backward(loss).unwrap();
        assert!(close(grads.param(p).unwrap().data(), &[2.0, -4.0, 1.0]));
    }

    #[test]
    fn bce_gradient_at_zero() {
        let tape = Tape::new();
        let x = tape.constant(Tensor::scalar(0.0));
        let loss = x.bce_with_logits_sum(&[1.0], &[1.0]).unwrap();
        assert!((loss.value().item() - 2f64.ln()).abs() < 1e-15);
        let grads = tape.backward(loss).unwrap();
        assert!((grads.wrt(x).unwrap().item() + 0.5).abs() < 1e-15);
    }

    #[test]
    fn backward_requires_scalar() {
        let tape = Tape::new();
        let x = tape.constant(Tensor::zeros(&[2]));
        assert!(matches!(tape.backward(x), Err(TensorError::NotScalar(_))));
    }

    #[test]
    fn reused_param_accumulates() {
        let tape = Tape::new();
        let mut store = ParamStore::new();
        let p = store.add("p", Tensor::scalar(3.0)).unwrap();
        let a = tape.param(&store, p);
        let b = tape.param(&store, p);
        let loss = a.mul(b).unwrap();
        let grads = tape.backward(loss).unwrap();
        assert_eq!(grads.param(p).unwrap().item(), 6.0);
    }

    #[test]
    fn cross_entropy_uniform_is_log_width() {
        let tape = Tape::new();
        let x = tape.constant(Tensor::zeros(&[3, 4]));
        let loss = x.cross_entropy_rows_sum(&[0, 2], &[1, 3]).unwrap();
        assert!((loss.value().item() - 2.0 * 4f64.ln()).abs() < 1e-12);
    }
}
