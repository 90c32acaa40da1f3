//! Tape-style reverse-mode differentiation graph.
//!
//! Nodes are appended in evaluation order (so reverse id order is a valid
//! reverse topological order) and hold their forward value plus a gradient
//! slot filled by [`Graph::backward`]. Gradients only propagate along paths
//! that reach a parameter leaf; other subtrees are skipped.
//!
//! # Op shape table
//!
//! | op | inputs | output |
//! |----|--------|--------|
//! | `add`, `sub`, `mul` | two tensors, equal shapes | same shape |
//! | `affine(a, b)` | any tensor | same shape (elementwise `a*x + b`) |
//! | `add_bias` | `[..., K]`, `[K]` | `[..., K]` |
//! | `matmul` | `[B, K]`, `[K, M]` | `[B, M]` |
//! | `concat_cols` | n × `[B, K_i]` | `[B, ΣK_i]` |
//! | `mean_axis(0)` / `(1)` | `[B, K]` | `[K]` / `[B]` |
//! | `mean_all` | any | scalar |
//! | `max_over_time` | `[B, L, F]` | `[B, F]` (max over axis 1) |
//! | `sigmoid`, `tanh`, `relu`, `leaky_relu` | any | same shape |
//! | `dropout(rate, rng)` | any | same shape (inverted scaling) |
//! | `gather(ids)` | `[V, D]` | `[len(ids), D]` |
//! | `reshape` | any | new shape, same element count |
//! | `conv1d(width)` | `[B, T, D]`, `[F, width*D]` | `[B, T-width+1, F]` |
//! | `time_step(t)` | `[B, T, D]` | `[B, D]` |
//! | `slice_cols(lo, hi)` | `[B, K]` | `[B, hi-lo]` |
//! | `slice_rows(lo, hi)` | `[B, K]` | `[hi-lo, K]` |
//! | `stack_cols` | n × `[B]` | `[B, n]` |
//! | `softmax_rows` | `[B, K]` | `[B, K]` |
//! | `softmax_cross_entropy(targets)` | `[B, K]` | scalar (mean) |
//! | `log_softmax_col(c)` / `log_one_minus_softmax_col(c)` | `[B, K]` | `[B]` |
//! | `l2_sq` | any | scalar (sum of squares) |
//! | `scale_rows` | `[B, K]`, `[B]` | `[B, K]` |

use rand::Rng;
use thiserror::Error;

use crate::scalar::Scalar;

use super::Tensor;

/// Probability floor inside the log-of-complement losses.
const PROB_FLOOR: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("{op}: shape mismatch: {detail}")]
    Shape { op: &'static str, detail: String },
    #[error("{op}: non-finite value")]
    NonFinite { op: &'static str },
    #[error("loss must be scalar, got shape {0:?}")]
    NonScalarLoss(Vec<usize>),
    #[error("dropout rate {0} outside [0, 1)")]
    BadRate(f64),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("checkpoint: {0}")]
    Checkpoint(String),
}

/// Handle to one graph node.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NodeId(pub(crate) usize);

enum Op<S> {
    Input,
    Param,
    Add,
    Sub,
    Mul,
    AddBias,
    // `b` participates in the forward value only; backward needs just `a`.
    Affine { a: S },
    Matmul,
    ConcatCols { widths: Vec<usize> },
    MeanAxis { axis: usize },
    MeanAll,
    MaxOverTime { argmax: Vec<usize> },
    Sigmoid,
    Tanh,
    Relu,
    LeakyRelu { slope: S },
    Dropout { mask: Vec<bool>, scale: S },
    Gather { ids: Vec<usize> },
    Reshape { from: Vec<usize> },
    Conv1d { width: usize },
    TimeStep { t: usize },
    SliceCols { lo: usize },
    SliceRows { lo: usize },
    StackCols,
    SoftmaxRows,
    SoftmaxCrossEntropy { targets: Vec<usize> },
    LogSoftmaxCol { col: usize },
    LogOneMinusSoftmaxCol { col: usize },
    L2Sq,
    ScaleRows,
}

struct Node<S> {
    op: Op<S>,
    parents: Vec<NodeId>,
    value: Tensor<S>,
    grad: Option<Tensor<S>>,
    needs_grad: bool,
}

/// Reverse-mode tape. Build one per forward pass.
pub struct Graph<S> {
    nodes: Vec<Node<S>>,
}

impl<S: Scalar> Default for Graph<S> {
    fn default() -> Self {
        Self::new()
    }
}

impl<S: Scalar> Graph<S> {
    pub fn new() -> Self {
        Graph { nodes: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, id: NodeId) -> &Tensor<S> {
        &self.nodes[id.0].value
    }

    /// Gradient of the most recent `backward` call, if this node received one.
    pub fn grad(&self, id: NodeId) -> Option<&Tensor<S>> {
        self.nodes[id.0].grad.as_ref()
    }

    fn push(&mut self, op: Op<S>, parents: Vec<NodeId>, value: Tensor<S>) -> NodeId {
        let needs_grad = matches!(op, Op::Param)
            || parents.iter().any(|p| self.nodes[p.0].needs_grad);
        self.nodes.push(Node {
            op,
            parents,
            value,
            grad: None,
            needs_grad,
        });
        NodeId(self.nodes.len() - 1)
    }

    /// Non-trainable leaf (data).
    pub fn input(&mut self, value: Tensor<S>) -> NodeId {
        self.push(Op::Input, vec![], value)
    }

    /// Trainable leaf; receives a gradient on `backward`.
    pub fn param(&mut self, value: Tensor<S>) -> NodeId {
        self.push(Op::Param, vec![], value)
    }

    fn binary_same_shape(
        &mut self,
        op_name: &'static str,
        a: NodeId,
        b: NodeId,
    ) -> Result<(), GraphError> {
        let sa = self.nodes[a.0].value.shape();
        let sb = self.nodes[b.0].value.shape();
        if sa != sb {
            return Err(GraphError::Shape {
                op: op_name,
                detail: format!("{sa:?} vs {sb:?}"),
            });
        }
        Ok(())
    }

    pub fn add(&mut self, a: NodeId, b: NodeId) -> Result<NodeId, GraphError> {
        self.binary_same_shape("add", a, b)?;
        let value = Tensor::from_vec(
            self.nodes[a.0].value.shape().to_vec(),
            self.nodes[a.0]
                .value
                .data()
                .iter()
                .zip(self.nodes[b.0].value.data())
                .map(|(x, y)| *x + *y)
                .collect(),
        )?;
        Ok(self.push(Op::Add, vec![a, b], value))
    }

    pub fn sub(&mut self, a: NodeId, b: NodeId) -> Result<NodeId, GraphError> {
        self.binary_same_shape("sub", a, b)?;
        let value = Tensor::from_vec(
            self.nodes[a.0].value.shape().to_vec(),
            self.nodes[a.0]
                .value
                .data()
                .iter()
                .zip(self.nodes[b.0].value.data())
                .map(|(x, y)| *x - *y)
                .collect(),
        )?;
        Ok(self.push(Op::Sub, vec![a, b], value))
    }

    pub fn mul(&mut self, a: NodeId, b: NodeId) -> Result<NodeId, GraphError> {
        self.binary_same_shape("mul", a, b)?;
        let value = Tensor::from_vec(
            self.nodes[a.0].value.shape().to_vec(),
            self.nodes[a.0]
                .value
                .data()
                .iter()
                .zip(self.nodes[b.0].value.data())
                .map(|(x, y)| *x * *y)
                .collect(),
        )?;
        Ok(self.push(Op::Mul, vec![a, b], value))
    }

    /// Adds a `[K]` bias along the last axis of `x`.
    pub fn add_bias(&mut self, x: NodeId, bias: NodeId) -> Result<NodeId, GraphError> {
        let xs = self.nodes[x.0].value.shape().to_vec();
        let bs = self.nodes[bias.0].value.shape();
        let k = *xs.last().unwrap_or(&0);
        if bs != [k] {
            return Err(GraphError::Shape {
                op: "add_bias",
                detail: format!("x {xs:?} vs bias {bs:?}"),
            });
        }
        let bias_data = self.nodes[bias.0].value.data().to_vec();
        let data = self.nodes[x.0]
            .value
            .data()
            .iter()
            .enumerate()
            .map(|(i, v)| *v + bias_data[i % k])
            .collect();
        let value = Tensor::from_vec(xs, data)?;
        Ok(self.push(Op::AddBias, vec![x, bias], value))
    }

    /// Elementwise `a * x + b`.
    pub fn affine(&mut self, x: NodeId, a: S, b: S) -> NodeId {
        let value = self.nodes[x.0].value.map(|v| a * v + b);
        self.push(Op::Affine { a }, vec![x], value)
    }

    pub fn matmul(&mut self, a: NodeId, b: NodeId) -> Result<NodeId, GraphError> {
        let sa = self.nodes[a.0].value.shape().to_vec();
        let sb = self.nodes[b.0].value.shape().to_vec();
        let (&[n, k], &[k2, m]) = (&sa[..], &sb[..]) else {
            return Err(GraphError::Shape {
                op: "matmul",
                detail: format!("{sa:?} x {sb:?}"),
            });
        };
        if k != k2 {
            return Err(GraphError::Shape {
                op: "matmul",
                detail: format!("{sa:?} x {sb:?}"),
            });
        }
        let lhs = self.nodes[a.0].value.data();
        let rhs = self.nodes[b.0].value.data();
        let mut data = vec![S::zero(); n * m];
        for i in 0..n {
            for p in 0..k {
                let x = lhs[i * k + p];
                if x == S::zero() {
                    continue;
                }
                let out_row = &mut data[i * m..(i + 1) * m];
                let rhs_row = &rhs[p * m..(p + 1) * m];
                for (o, r) in out_row.iter_mut().zip(rhs_row) {
                    *o += x * *r;
                }
            }
        }
        let value = Tensor::from_vec(vec![n, m], data)?;
        Ok(self.push(Op::Matmul, vec![a, b], value))
    }

    /// Concatenates rank-2 tensors along columns.
    pub fn concat_cols(&mut self, parts: &[NodeId]) -> Result<NodeId, GraphError> {
        if parts.is_empty() {
            return Err(GraphError::Shape {
                op: "concat_cols",
                detail: "no inputs".to_string(),
            });
        }
        let rows = self.nodes[parts[0].0].value.shape()[0];
        let mut widths = Vec::with_capacity(parts.len());
        for p in parts {
            let s = self.nodes[p.0].value.shape();
            if s.len() != 2 || s[0] != rows {
                return Err(GraphError::Shape {
                    op: "concat_cols",
                    detail: format!("{s:?} with {rows} rows expected"),
                });
            }
            widths.push(s[1]);
        }
        let total: usize = widths.iter().sum();
        let mut data = Vec::with_capacity(rows * total);
        for r in 0..rows {
            for p in parts {
                data.extend_from_slice(self.nodes[p.0].value.row(r));
            }
        }
        let value = Tensor::from_vec(vec![rows, total], data)?;
        Ok(self.push(Op::ConcatCols { widths }, parts.to_vec(), value))
    }

    /// Mean over one axis of a rank-2 tensor.
    pub fn mean_axis(&mut self, x: NodeId, axis: usize) -> Result<NodeId, GraphError> {
        let s = self.nodes[x.0].value.shape().to_vec();
        if s.len() != 2 || axis > 1 {
            return Err(GraphError::Shape {
                op: "mean_axis",
                detail: format!("shape {s:?}, axis {axis}"),
            });
        }
        let (rows, cols) = (s[0], s[1]);
        let src = self.nodes[x.0].value.data();
        let value = if axis == 0 {
            let inv = S::one() / S::from_usize_lossy(rows);
            let mut out = vec![S::zero(); cols];
            for r in 0..rows {
                for c in 0..cols {
                    out[c] += src[r * cols + c];
                }
            }
            for v in &mut out {
                *v *= inv;
            }
            Tensor::from_vec(vec![cols], out)?
        } else {
            let inv = S::one() / S::from_usize_lossy(cols);
            let out = (0..rows)
                .map(|r| src[r * cols..(r + 1) * cols].iter().copied().sum::<S>() * inv)
                .collect();
            Tensor::from_vec(vec![rows], out)?
        };
        Ok(self.push(Op::MeanAxis { axis }, vec![x], value))
    }

    /// Mean over every element, yielding a scalar.
    pub fn mean_all(&mut self, x: NodeId) -> NodeId {
        let t = &self.nodes[x.0].value;
        let mean = t.data().iter().copied().sum::<S>() / S::from_usize_lossy(t.numel());
        self.push(Op::MeanAll, vec![x], Tensor::scalar(mean))
    }

    /// Max over the time axis of `[B, L, F]`, first max wins ties.
    pub fn max_over_time(&mut self, x: NodeId) -> Result<NodeId, GraphError> {
        let s = self.nodes[x.0].value.shape().to_vec();
        let (&[b, l, f],) = (&s[..],) else {
            return Err(GraphError::Shape {
                op: "max_over_time",
                detail: format!("shape {s:?}, want rank 3"),
            });
        };
        if l == 0 {
            return Err(GraphError::Shape {
                op: "max_over_time",
                detail: "empty time axis".to_string(),
            });
        }
        let src = self.nodes[x.0].value.data();
        let mut out = vec![S::zero(); b * f];
        let mut argmax = vec![0usize; b * f];
        for i in 0..b {
            for j in 0..f {
                let mut best = src[i * l * f + j];
                let mut best_t = 0usize;
                for t in 1..l {
                    let v = src[(i * l + t) * f + j];
                    if v > best {
                        best = v;
                        best_t = t;
                    }
                }
                out[i * f + j] = best;
                argmax[i * f + j] = best_t;
            }
        }
        let value = Tensor::from_vec(vec![b, f], out)?;
        Ok(self.push(Op::MaxOverTime { argmax }, vec![x], value))
    }

    pub fn sigmoid(&mut self, x: NodeId) -> NodeId {
        let value = self.nodes[x.0].value.map(|v| {
            // Saturation-safe on both tails.
            if v >= S::zero() {
                S::one() / (S::one() + (-v).exp())
            } else {
                let e = v.exp();
                e / (S::one() + e)
            }
        });
        self.push(Op::Sigmoid, vec![x], value)
    }

    pub fn tanh(&mut self, x: NodeId) -> NodeId {
        let value = self.nodes[x.0].value.map(|v| v.tanh());
        self.push(Op::Tanh, vec![x], value)
    }

    pub fn relu(&mut self, x: NodeId) -> NodeId {
        let value = self.nodes[x.0].value.map(|v| v.max(S::zero()));
        self.push(Op::Relu, vec![x], value)
    }

    pub fn leaky_relu(&mut self, x: NodeId, slope: S) -> NodeId {
        let value = self.nodes[x.0].value.map(|v| if v > S::zero() { v } else { slope * v });
        self.push(Op::LeakyRelu { slope }, vec![x], value)
    }

    /// Inverted dropout: kept entries are scaled by `1/(1-rate)`. Rate 0 is
    /// the identity; the mask is drawn once at node creation.
    pub fn dropout<R: Rng>(
        &mut self,
        x: NodeId,
        rate: f64,
        rng: &mut R,
    ) -> Result<NodeId, GraphError> {
        if !(0.0..1.0).contains(&rate) {
            return Err(GraphError::BadRate(rate));
        }
        let numel = self.nodes[x.0].value.numel();
        let mask: Vec<bool> = if rate == 0.0 {
            vec![true; numel]
        } else {
            (0..numel).map(|_| rng.gen::<f64>() >= rate).collect()
        };
        let scale = S::from_f64_lossy(1.0 / (1.0 - rate));
        let shape = self.nodes[x.0].value.shape().to_vec();
        let data = self.nodes[x.0]
            .value
            .data()
            .iter()
            .zip(&mask)
            .map(|(v, keep)| if *keep { *v * scale } else { S::zero() })
            .collect();
        let value = Tensor::from_vec(shape, data)?;
        Ok(self.push(Op::Dropout { mask, scale }, vec![x], value))
    }

    /// Row lookup into a `[V, D]` table, one output row per id.
    pub fn gather(&mut self, table: NodeId, ids: &[usize]) -> Result<NodeId, GraphError> {
        let s = self.nodes[table.0].value.shape().to_vec();
        if s.len() != 2 {
            return Err(GraphError::Shape {
                op: "gather",
                detail: format!("table shape {s:?}"),
            });
        }
        let (v, d) = (s[0], s[1]);
        if let Some(&bad) = ids.iter().find(|&&i| i >= v) {
            return Err(GraphError::Shape {
                op: "gather",
                detail: format!("id {bad} out of {v} rows"),
            });
        }
        let src = self.nodes[table.0].value.data();
        let mut data = Vec::with_capacity(ids.len() * d);
        for &i in ids {
            data.extend_from_slice(&src[i * d..(i + 1) * d]);
        }
        let value = Tensor::from_vec(vec![ids.len(), d], data)?;
        Ok(self.push(
            Op::Gather { ids: ids.to_vec() },
            vec![table],
            value,
        ))
    }

    pub fn reshape(&mut self, x: NodeId, shape: &[usize]) -> Result<NodeId, GraphError> {
        let from = self.nodes[x.0].value.shape().to_vec();
        if shape.iter().product::<usize>() != self.nodes[x.0].value.numel() {
            return Err(GraphError::Shape {
                op: "reshape",
                detail: format!("{from:?} to {shape:?}"),
            });
        }
        let value = Tensor::from_vec(shape.to_vec(), self.nodes[x.0].value.data().to_vec())?;
        Ok(self.push(Op::Reshape { from }, vec![x], value))
    }

    /// 1-D convolution over time: input `[B, T, D]`, one filter bank
    /// `[F, width*D]` applied at every window, valid padding.
    pub fn conv1d(&mut self, x: NodeId, w: NodeId, width: usize) -> Result<NodeId, GraphError> {
        let xs = self.nodes[x.0].value.shape().to_vec();
        let ws = self.nodes[w.0].value.shape().to_vec();
        let (&[b, t, d],) = (&xs[..],) else {
            return Err(GraphError::Shape {
                op: "conv1d",
                detail: format!("input {xs:?}, want rank 3"),
            });
        };
        if width == 0 || t < width || ws.len() != 2 || ws[1] != width * d {
            return Err(GraphError::Shape {
                op: "conv1d",
                detail: format!("input {xs:?}, filters {ws:?}, width {width}"),
            });
        }
        let f = ws[0];
        let l = t - width + 1;
        let src = self.nodes[x.0].value.data();
        let filt = self.nodes[w.0].value.data();
        let mut data = vec![S::zero(); b * l * f];
        let window = width * d;
        for i in 0..b {
            for pos in 0..l {
                let x_off = (i * t + pos) * d;
                let x_win = &src[x_off..x_off + window];
                for j in 0..f {
                    let w_row = &filt[j * window..(j + 1) * window];
                    let mut acc = S::zero();
                    for (xv, wv) in x_win.iter().zip(w_row) {
                        acc += *xv * *wv;
                    }
                    data[(i * l + pos) * f + j] = acc;
                }
            }
        }
        let value = Tensor::from_vec(vec![b, l, f], data)?;
        Ok(self.push(Op::Conv1d { width }, vec![x, w], value))
    }

    /// Slice `[B, T, D]` at time `t`, giving `[B, D]`.
    pub fn time_step(&mut self, x: NodeId, t: usize) -> Result<NodeId, GraphError> {
        let s = self.nodes[x.0].value.shape().to_vec();
        let (&[b, steps, d],) = (&s[..],) else {
            return Err(GraphError::Shape {
                op: "time_step",
                detail: format!("shape {s:?}, want rank 3"),
            });
        };
        if t >= steps {
            return Err(GraphError::Shape {
                op: "time_step",
                detail: format!("step {t} of {steps}"),
            });
        }
        let src = self.nodes[x.0].value.data();
        let mut data = Vec::with_capacity(b * d);
        for i in 0..b {
            let off = (i * steps + t) * d;
            data.extend_from_slice(&src[off..off + d]);
        }
        let value = Tensor::from_vec(vec![b, d], data)?;
        Ok(self.push(Op::TimeStep { t }, vec![x], value))
    }

    pub fn slice_cols(&mut self, x: NodeId, lo: usize, hi: usize) -> Result<NodeId, GraphError> {
        let s = self.nodes[x.0].value.shape().to_vec();
        if s.len() != 2 || lo >= hi || hi > s[1] {
            return Err(GraphError::Shape {
                op: "slice_cols",
                detail: format!("{lo}..{hi} of {s:?}"),
            });
        }
        let (rows, cols) = (s[0], s[1]);
        let src = self.nodes[x.0].value.data();
        let mut data = Vec::with_capacity(rows * (hi - lo));
        for r in 0..rows {
            data.extend_from_slice(&src[r * cols + lo..r * cols + hi]);
        }
        let value = Tensor::from_vec(vec![rows, hi - lo], data)?;
        Ok(self.push(Op::SliceCols { lo }, vec![x], value))
    }

    pub fn slice_rows(&mut self, x: NodeId, lo: usize, hi: usize) -> Result<NodeId, GraphError> {
        let s = self.nodes[x.0].value.shape().to_vec();
        if s.len() != 2 || lo >= hi || hi > s[0] {
            return Err(GraphError::Shape {
                op: "slice_rows",
                detail: format!("{lo}..{hi} of {s:?}"),
            });
        }
        let cols = s[1];
        let src = self.nodes[x.0].value.data();
        let data = src[lo * cols..hi * cols].to_vec();
        let value = Tensor::from_vec(vec![hi - lo, cols], data)?;
        Ok(self.push(Op::SliceRows { lo }, vec![x], value))
    }

    /// Stacks rank-1 `[B]` tensors as the columns of a `[B, n]` matrix.
    pub fn stack_cols(&mut self, parts: &[NodeId]) -> Result<NodeId, GraphError> {
        if parts.is_empty() {
            return Err(GraphError::Shape {
                op: "stack_cols",
                detail: "no inputs".to_string(),
            });
        }
        let b = self.nodes[parts[0].0].value.shape().first().copied().unwrap_or(0);
        for p in parts {
            let s = self.nodes[p.0].value.shape();
            if s != [b] {
                return Err(GraphError::Shape {
                    op: "stack_cols",
                    detail: format!("{s:?}, want [{b}]"),
                });
            }
        }
        let n = parts.len();
        let mut data = vec![S::zero(); b * n];
        for (j, p) in parts.iter().enumerate() {
            for (i, v) in self.nodes[p.0].value.data().iter().enumerate() {
                data[i * n + j] = *v;
            }
        }
        let value = Tensor::from_vec(vec![b, n], data)?;
        Ok(self.push(Op::StackCols, parts.to_vec(), value))
    }

    /// Row-wise softmax of a rank-2 tensor.
    pub fn softmax_rows(&mut self, x: NodeId) -> Result<NodeId, GraphError> {
        let s = self.nodes[x.0].value.shape().to_vec();
        if s.len() != 2 {
            return Err(GraphError::Shape {
                op: "softmax_rows",
                detail: format!("shape {s:?}"),
            });
        }
        let (rows, cols) = (s[0], s[1]);
        let src = self.nodes[x.0].value.data();
        let mut data = vec![S::zero(); rows * cols];
        for r in 0..rows {
            softmax_into(&src[r * cols..(r + 1) * cols], &mut data[r * cols..(r + 1) * cols]);
        }
        let value = Tensor::from_vec(vec![rows, cols], data)?;
        Ok(self.push(Op::SoftmaxRows, vec![x], value))
    }

    /// Fused softmax + cross-entropy, mean over the batch.
    pub fn softmax_cross_entropy(
        &mut self,
        logits: NodeId,
        targets: &[usize],
    ) -> Result<NodeId, GraphError> {
        let s = self.nodes[logits.0].value.shape().to_vec();
        if s.len() != 2 || s[0] != targets.len() {
            return Err(GraphError::Shape {
                op: "softmax_cross_entropy",
                detail: format!("logits {s:?} vs {} targets", targets.len()),
            });
        }
        let (rows, cols) = (s[0], s[1]);
        if let Some(&bad) = targets.iter().find(|&&t| t >= cols) {
            return Err(GraphError::Shape {
                op: "softmax_cross_entropy",
                detail: format!("target {bad} out of {cols} classes"),
            });
        }
        let src = self.nodes[logits.0].value.data();
        let mut total = S::zero();
        for (r, &target) in targets.iter().enumerate() {
            let row = &src[r * cols..(r + 1) * cols];
            total += log_sum_exp(row) - row[target];
        }
        let mean = total / S::from_usize_lossy(rows);
        let value = Tensor::scalar(mean);
        Ok(self.push(
            Op::SoftmaxCrossEntropy {
                targets: targets.to_vec(),
            },
            vec![logits],
            value,
        ))
    }

    /// Per-row `log softmax(logits)[col]`.
    pub fn log_softmax_col(&mut self, logits: NodeId, col: usize) -> Result<NodeId, GraphError> {
        let s = self.nodes[logits.0].value.shape().to_vec();
        if s.len() != 2 || col >= s[1] {
            return Err(GraphError::Shape {
                op: "log_softmax_col",
                detail: format!("col {col} of {s:?}"),
            });
        }
        let (rows, cols) = (s[0], s[1]);
        let src = self.nodes[logits.0].value.data();
        let data = (0..rows)
            .map(|r| {
                let row = &src[r * cols..(r + 1) * cols];
                row[col] - log_sum_exp(row)
            })
            .collect();
        let value = Tensor::from_vec(vec![rows], data)?;
        Ok(self.push(Op::LogSoftmaxCol { col }, vec![logits], value))
    }

    /// Per-row `log(1 - softmax(logits)[col])`, computed as the difference
    /// of two log-sum-exps and floored at `ln(1e-12)`.
    pub fn log_one_minus_softmax_col(
        &mut self,
        logits: NodeId,
        col: usize,
    ) -> Result<NodeId, GraphError> {
        let s = self.nodes[logits.0].value.shape().to_vec();
        if s.len() != 2 || col >= s[1] || s[1] < 2 {
            return Err(GraphError::Shape {
                op: "log_one_minus_softmax_col",
                detail: format!("col {col} of {s:?}"),
            });
        }
        let (rows, cols) = (s[0], s[1]);
        let floor = S::from_f64_lossy(PROB_FLOOR.ln());
        let src = self.nodes[logits.0].value.data();
        let data = (0..rows)
            .map(|r| {
                let row = &src[r * cols..(r + 1) * cols];
                let excl: Vec<S> = row
                    .iter()
                    .enumerate()
                    .filter(|(j, _)| *j != col)
                    .map(|(_, v)| *v)
                    .collect();
                (log_sum_exp(&excl) - log_sum_exp(row)).max(floor)
            })
            .collect();
        let value = Tensor::from_vec(vec![rows], data)?;
        Ok(self.push(Op::LogOneMinusSoftmaxCol { col }, vec![logits], value))
    }

    /// Sum of squared entries, as a scalar.
    pub fn l2_sq(&mut self, x: NodeId) -> NodeId {
        let total = self.nodes[x.0].value.data().iter().map(|v| *v * *v).sum::<S>();
        self.push(Op::L2Sq, vec![x], Tensor::scalar(total))
    }

    /// Scales each row of `[B, K]` by the matching entry of a `[B]` vector.
    pub fn scale_rows(&mut self, x: NodeId, scales: NodeId) -> Result<NodeId, GraphError> {
        let xs = self.nodes[x.0].value.shape().to_vec();
        let ss = self.nodes[scales.0].value.shape();
        if xs.len() != 2 || ss != [xs[0]] {
            return Err(GraphError::Shape {
                op: "scale_rows",
                detail: format!("x {xs:?} vs scales {ss:?}"),
            });
        }
        let (rows, cols) = (xs[0], xs[1]);
        let src = self.nodes[x.0].value.data();
        let sc = self.nodes[scales.0].value.data();
        let data = (0..rows * cols)
            .map(|i| src[i] * sc[i / cols])
            .collect();
        let value = Tensor::from_vec(vec![rows, cols], data)?;
        Ok(self.push(Op::ScaleRows, vec![x, scales], value))
    }

    /// Populates gradients of every parameter-reaching node by reverse
    /// accumulation from a scalar loss.
    pub fn backward(&mut self, loss: NodeId) -> Result<(), GraphError> {
        if !self.nodes[loss.0].value.is_scalar() {
            return Err(GraphError::NonScalarLoss(
                self.nodes[loss.0].value.shape().to_vec(),
            ));
        }
        for node in &mut self.nodes {
            node.grad = None;
        }
        self.nodes[loss.0].grad = Some(Tensor::filled(
            self.nodes[loss.0].value.shape(),
            S::one(),
        ));

        for idx in (0..=loss.0).rev() {
            if self.nodes[idx].grad.is_none() || !self.nodes[idx].needs_grad {
                continue;
            }
            self.propagate(idx);
        }
        Ok(())
    }

    /// Accumulates `delta` into the gradient slot of `target`.
    fn accumulate(&mut self, target: NodeId, delta: &Tensor<S>) {
        let node = &mut self.nodes[target.0];
        match &mut node.grad {
            Some(grad) => {
                for (g, d) in grad.data_mut().iter_mut().zip(delta.data()) {
                    *g += *d;
                }
            }
            None => node.grad = Some(delta.clone()),
        }
    }

    fn parent_needs_grad(&self, idx: usize, slot: usize) -> bool {
        let p = self.nodes[idx].parents[slot];
        self.nodes[p.0].needs_grad
    }

    fn propagate(&mut self, idx: usize) {
        let grad = self.nodes[idx].grad.clone().expect("grad present");
        let parents = self.nodes[idx].parents.clone();
        match &self.nodes[idx].op {
            Op::Input | Op::Param => {}
            Op::Add => {
                for slot in 0..2 {
                    if self.parent_needs_grad(idx, slot) {
                        self.accumulate(parents[slot], &grad);
                    }
                }
            }
            Op::Sub => {
                if self.parent_needs_grad(idx, 0) {
                    self.accumulate(parents[0], &grad);
                }
                if self.parent_needs_grad(idx, 1) {
                    let neg = grad.map(|v| -v);
                    self.accumulate(parents[1], &neg);
                }
            }
            Op::Mul => {
                let a = self.nodes[parents[0].0].value.clone();
                let b = self.nodes[parents[1].0].value.clone();
                if self.parent_needs_grad(idx, 0) {
                    let d = Tensor::from_vec(
                        a.shape().to_vec(),
                        grad.data().iter().zip(b.data()).map(|(g, y)| *g * *y).collect(),
                    )
                    .expect("shape preserved");
                    self.accumulate(parents[0], &d);
                }
                if self.parent_needs_grad(idx, 1) {
                    let d = Tensor::from_vec(
                        b.shape().to_vec(),
                        grad.data().iter().zip(a.data()).map(|(g, x)| *g * *x).collect(),
                    )
                    .expect("shape preserved");
                    self.accumulate(parents[1], &d);
                }
            }
            Op::AddBias => {
                let k = *self.nodes[idx].value.shape().last().unwrap();
                if self.parent_needs_grad(idx, 0) {
                    self.accumulate(parents[0], &grad);
                }
                if self.parent_needs_grad(idx, 1) {
                    let mut bias_grad = vec![S::zero(); k];
                    for (i, g) in grad.data().iter().enumerate() {
                        bias_grad[i % k] += *g;
                    }
                    let d = Tensor::from_vec(vec![k], bias_grad).expect("bias shape");
                    self.accumulate(parents[1], &d);
                }
            }
            Op::Affine { a, .. } => {
                if self.parent_needs_grad(idx, 0) {
                    let a = *a;
                    let d = grad.map(|g| a * g);
                    self.accumulate(parents[0], &d);
                }
            }
            Op::Matmul => {
                let a = self.nodes[parents[0].0].value.clone();
                let b = self.nodes[parents[1].0].value.clone();
                let (n, k) = (a.shape()[0], a.shape()[1]);
                let m = b.shape()[1];
                if self.parent_needs_grad(idx, 0) {
                    // dA = g · Bᵀ
                    let mut da = vec![S::zero(); n * k];
                    for i in 0..n {
                        for p in 0..k {
                            let mut acc = S::zero();
                            for j in 0..m {
                                acc += grad.data()[i * m + j] * b.data()[p * m + j];
                            }
                            da[i * k + p] = acc;
                        }
                    }
                    let d = Tensor::from_vec(vec![n, k], da).expect("dA shape");
                    self.accumulate(parents[0], &d);
                }
                if self.parent_needs_grad(idx, 1) {
                    // dB = Aᵀ · g
                    let mut db = vec![S::zero(); k * m];
                    for i in 0..n {
                        for p in 0..k {
                            let x = a.data()[i * k + p];
                            if x == S::zero() {
                                continue;
                            }
                            for j in 0..m {
                                db[p * m + j] += x * grad.data()[i * m + j];
                            }
                        }
                    }
                    let d = Tensor::from_vec(vec![k, m], db).expect("dB shape");
                    self.accumulate(parents[1], &d);
                }
            }
            Op::ConcatCols { widths } => {
                let widths = widths.clone();
                let rows = self.nodes[idx].value.shape()[0];
                let total = self.nodes[idx].value.shape()[1];
                let mut offset = 0;
                for (slot, w) in widths.iter().enumerate() {
                    if self.parent_needs_grad(idx, slot) {
                        let mut part = Vec::with_capacity(rows * w);
                        for r in 0..rows {
                            part.extend_from_slice(
                                &grad.data()[r * total + offset..r * total + offset + w],
                            );
                        }
                        let d = Tensor::from_vec(vec![rows, *w], part).expect("part shape");
                        self.accumulate(parents[slot], &d);
                    }
                    offset += w;
                }
            }
            Op::MeanAxis { axis } => {
                if self.parent_needs_grad(idx, 0) {
                    let axis = *axis;
                    let s = self.nodes[parents[0].0].value.shape().to_vec();
                    let (rows, cols) = (s[0], s[1]);
                    let data = if axis == 0 {
                        let inv = S::one() / S::from_usize_lossy(rows);
                        (0..rows * cols).map(|i| grad.data()[i % cols] * inv).collect()
                    } else {
                        let inv = S::one() / S::from_usize_lossy(cols);
                        (0..rows * cols).map(|i| grad.data()[i / cols] * inv).collect()
                    };
                    let d = Tensor::from_vec(vec![rows, cols], data).expect("mean shape");
                    self.accumulate(parents[0], &d);
                }
            }
            Op::MeanAll => {
                if self.parent_needs_grad(idx, 0) {
                    let s = self.nodes[parents[0].0].value.shape().to_vec();
                    let n: usize = s.iter().product();
                    let g = grad.item() / S::from_usize_lossy(n);
                    let d = Tensor::filled(&s, g);
                    self.accumulate(parents[0], &d);
                }
            }
            Op::MaxOverTime { argmax } => {
                if self.parent_needs_grad(idx, 0) {
                    let argmax = argmax.clone();
                    let s = self.nodes[parents[0].0].value.shape().to_vec();
                    let (l, f) = (s[1], s[2]);
                    let b = s[0];
                    let mut dx = vec![S::zero(); b * l * f];
                    for i in 0..b {
                        for j in 0..f {
                            let t = argmax[i * f + j];
                            dx[(i * l + t) * f + j] += grad.data()[i * f + j];
                        }
                    }
                    let d = Tensor::from_vec(s, dx).expect("max shape");
                    self.accumulate(parents[0], &d);
                }
            }
            Op::Sigmoid => {
                if self.parent_needs_grad(idx, 0) {
                    let y = self.nodes[idx].value.clone();
                    let d = Tensor::from_vec(
                        y.shape().to_vec(),
                        grad.data()
                            .iter()
                            .zip(y.data())
                            .map(|(g, y)| *g * *y * (S::one() - *y))
                            .collect(),
                    )
                    .expect("shape preserved");
                    self.accumulate(parents[0], &d);
                }
            }
            Op::Tanh => {
                if self.parent_needs_grad(idx, 0) {
                    let y = self.nodes[idx].value.clone();
                    let d = Tensor::from_vec(
                        y.shape().to_vec(),
                        grad.data()
                            .iter()
                            .zip(y.data())
                            .map(|(g, y)| *g * (S::one() - *y * *y))
                            .collect(),
                    )
                    .expect("shape preserved");
                    self.accumulate(parents[0], &d);
                }
            }
            Op::Relu => {
                if self.parent_needs_grad(idx, 0) {
                    let x = self.nodes[parents[0].0].value.clone();
                    let d = Tensor::from_vec(
                        x.shape().to_vec(),
                        grad.data()
                            .iter()
                            .zip(x.data())
                            .map(|(g, x)| if *x > S::zero() { *g } else { S::zero() })
                            .collect(),
                    )
                    .expect("shape preserved");
                    self.accumulate(parents[0], &d);
                }
            }
            Op::LeakyRelu { slope } => {
                if self.parent_needs_grad(idx, 0) {
                    let slope = *slope;
                    let x = self.nodes[parents[0].0].value.clone();
                    let d = Tensor::from_vec(
                        x.shape().to_vec(),
                        grad.data()
                            .iter()
                            .zip(x.data())
                            .map(|(g, x)| if *x > S::zero() { *g } else { slope * *g })
                            .collect(),
                    )
                    .expect("shape preserved");
                    self.accumulate(parents[0], &d);
                }
            }
            Op::Dropout { mask, scale } => {
                if self.parent_needs_grad(idx, 0) {
                    let scale = *scale;
                    let d = Tensor::from_vec(
                        grad.shape().to_vec(),
                        grad.data()
                            .iter()
                            .zip(mask)
                            .map(|(g, keep)| if *keep { *g * scale } else { S::zero() })
                            .collect(),
                    )
                    .expect("shape preserved");
                    self.accumulate(parents[0], &d);
                }
            }
            Op::Gather { ids } => {
                if self.parent_needs_grad(idx, 0) {
                    let ids = ids.clone();
                    let s = self.nodes[parents[0].0].value.shape().to_vec();
                    let d_cols = s[1];
                    let mut dt = vec![S::zero(); s[0] * d_cols];
                    for (row, &id) in ids.iter().enumerate() {
                        for c in 0..d_cols {
                            dt[id * d_cols + c] += grad.data()[row * d_cols + c];
                        }
                    }
                    let d = Tensor::from_vec(s, dt).expect("table shape");
                    self.accumulate(parents[0], &d);
                }
            }
            Op::Reshape { from } => {
                if self.parent_needs_grad(idx, 0) {
                    let d = Tensor::from_vec(from.clone(), grad.data().to_vec())
                        .expect("reshape shape");
                    self.accumulate(parents[0], &d);
                }
            }
            Op::Conv1d { width } => {
                let width = *width;
                let xs = self.nodes[parents[0].0].value.shape().to_vec();
                let ws = self.nodes[parents[1].0].value.shape().to_vec();
                let (b, t, d) = (xs[0], xs[1], xs[2]);
                let f = ws[0];
                let l = t - width + 1;
                let window = width * d;
                let x = self.nodes[parents[0].0].value.clone();
                let w = self.nodes[parents[1].0].value.clone();
                if self.parent_needs_grad(idx, 0) {
                    let mut dx = vec![S::zero(); b * t * d];
                    for i in 0..b {
                        for pos in 0..l {
                            for j in 0..f {
                                let g = grad.data()[(i * l + pos) * f + j];
                                if g == S::zero() {
                                    continue;
                                }
                                let w_row = &w.data()[j * window..(j + 1) * window];
                                let x_off = (i * t + pos) * d;
                                for (q, wv) in w_row.iter().enumerate() {
                                    dx[x_off + q] += g * *wv;
                                }
                            }
                        }
                    }
                    let dt = Tensor::from_vec(xs.clone(), dx).expect("conv dx shape");
                    self.accumulate(parents[0], &dt);
                }
                if self.parent_needs_grad(idx, 1) {
                    let mut dw = vec![S::zero(); f * window];
                    for i in 0..b {
                        for pos in 0..l {
                            let x_off = (i * t + pos) * d;
                            let x_win = &x.data()[x_off..x_off + window];
                            for j in 0..f {
                                let g = grad.data()[(i * l + pos) * f + j];
                                if g == S::zero() {
                                    continue;
                                }
                                let w_row = &mut dw[j * window..(j + 1) * window];
                                for (acc, xv) in w_row.iter_mut().zip(x_win) {
                                    *acc += g * *xv;
                                }
                            }
                        }
                    }
                    let dt = Tensor::from_vec(ws, dw).expect("conv dw shape");
                    self.accumulate(parents[1], &dt);
                }
            }
            Op::TimeStep { t } => {
                if self.parent_needs_grad(idx, 0) {
                    let t = *t;
                    let s = self.nodes[parents[0].0].value.shape().to_vec();
                    let (b, steps, d) = (s[0], s[1], s[2]);
                    let mut dx = vec![S::zero(); b * steps * d];
                    for i in 0..b {
                        let off = (i * steps + t) * d;
                        dx[off..off + d].copy_from_slice(&grad.data()[i * d..(i + 1) * d]);
                    }
                    let dt = Tensor::from_vec(s, dx).expect("time step shape");
                    self.accumulate(parents[0], &dt);
                }
            }
            Op::SliceCols { lo } => {
                if self.parent_needs_grad(idx, 0) {
                    let lo = *lo;
                    let s = self.nodes[parents[0].0].value.shape().to_vec();
                    let (rows, cols) = (s[0], s[1]);
                    let w = self.nodes[idx].value.shape()[1];
                    let mut dx = vec![S::zero(); rows * cols];
                    for r in 0..rows {
                        dx[r * cols + lo..r * cols + lo + w]
                            .copy_from_slice(&grad.data()[r * w..(r + 1) * w]);
                    }
                    let d = Tensor::from_vec(s, dx).expect("slice shape");
                    self.accumulate(parents[0], &d);
                }
            }
            Op::SliceRows { lo } => {
                if self.parent_needs_grad(idx, 0) {
                    let lo = *lo;
                    let s = self.nodes[parents[0].0].value.shape().to_vec();
                    let cols = s[1];
                    let mut dx = vec![S::zero(); s[0] * cols];
                    let n = grad.data().len();
                    dx[lo * cols..lo * cols + n].copy_from_slice(grad.data());
                    let d = Tensor::from_vec(s, dx).expect("slice rows shape");
                    self.accumulate(parents[0], &d);
                }
            }
            Op::StackCols => {
                let n = parents.len();
                let b = self.nodes[idx].value.shape()[0];
                for (j, parent) in parents.iter().enumerate() {
                    if self.parent_needs_grad(idx, j) {
                        let col: Vec<S> = (0..b).map(|i| grad.data()[i * n + j]).collect();
                        let d = Tensor::from_vec(vec![b], col).expect("column shape");
                        self.accumulate(*parent, &d);
                    }
                }
            }
            Op::SoftmaxRows => {
                if self.parent_needs_grad(idx, 0) {
                    let y = self.nodes[idx].value.clone();
                    let (rows, cols) = (y.shape()[0], y.shape()[1]);
                    let mut dx = vec![S::zero(); rows * cols];
                    for r in 0..rows {
                        let y_row = &y.data()[r * cols..(r + 1) * cols];
                        let g_row = &grad.data()[r * cols..(r + 1) * cols];
                        let dot = y_row
                            .iter()
                            .zip(g_row)
                            .map(|(y, g)| *y * *g)
                            .sum::<S>();
                        for c in 0..cols {
                            dx[r * cols + c] = y_row[c] * (g_row[c] - dot);
                        }
                    }
                    let d = Tensor::from_vec(vec![rows, cols], dx).expect("softmax shape");
                    self.accumulate(parents[0], &d);
                }
            }
            Op::SoftmaxCrossEntropy { targets } => {
                if self.parent_needs_grad(idx, 0) {
                    let targets = targets.clone();
                    let logits = self.nodes[parents[0].0].value.clone();
                    let (rows, cols) = (logits.shape()[0], logits.shape()[1]);
                    let g = grad.item() / S::from_usize_lossy(rows);
                    let mut dx = vec![S::zero(); rows * cols];
                    let mut probs = vec![S::zero(); cols];
                    for (r, &target) in targets.iter().enumerate() {
                        softmax_into(&logits.data()[r * cols..(r + 1) * cols], &mut probs);
                        for c in 0..cols {
                            let delta = if c == target { S::one() } else { S::zero() };
                            dx[r * cols + c] = (probs[c] - delta) * g;
                        }
                    }
                    let d = Tensor::from_vec(vec![rows, cols], dx).expect("ce shape");
                    self.accumulate(parents[0], &d);
                }
            }
            Op::LogSoftmaxCol { col } => {
                if self.parent_needs_grad(idx, 0) {
                    let col = *col;
                    let logits = self.nodes[parents[0].0].value.clone();
                    let (rows, cols) = (logits.shape()[0], logits.shape()[1]);
                    let mut dx = vec![S::zero(); rows * cols];
                    let mut probs = vec![S::zero(); cols];
                    for r in 0..rows {
                        softmax_into(&logits.data()[r * cols..(r + 1) * cols], &mut probs);
                        let g = grad.data()[r];
                        for c in 0..cols {
                            let delta = if c == col { S::one() } else { S::zero() };
                            dx[r * cols + c] = g * (delta - probs[c]);
                        }
                    }
                    let d = Tensor::from_vec(vec![rows, cols], dx).expect("lsc shape");
                    self.accumulate(parents[0], &d);
                }
            }
            Op::LogOneMinusSoftmaxCol { col } => {
                if self.parent_needs_grad(idx, 0) {
                    let col = *col;
                    let logits = self.nodes[parents[0].0].value.clone();
                    let (rows, cols) = (logits.shape()[0], logits.shape()[1]);
                    let mut dx = vec![S::zero(); rows * cols];
                    let mut probs = vec![S::zero(); cols];
                    for r in 0..rows {
                        let row = &logits.data()[r * cols..(r + 1) * cols];
                        softmax_into(row, &mut probs);
                        // softmax over the complement within the row
                        let excl: Vec<S> = row
                            .iter()
                            .enumerate()
                            .filter(|(j, _)| *j != col)
                            .map(|(_, v)| *v)
                            .collect();
                        let lse_excl = log_sum_exp(&excl);
                        let g = grad.data()[r];
                        for c in 0..cols {
                            let q = if c == col {
                                S::zero()
                            } else {
                                (row[c] - lse_excl).exp()
                            };
                            dx[r * cols + c] = g * (q - probs[c]);
                        }
                    }
                    let d = Tensor::from_vec(vec![rows, cols], dx).expect("lomc shape");
                    self.accumulate(parents[0], &d);
                }
            }
            Op::L2Sq => {
                if self.parent_needs_grad(idx, 0) {
                    let x = self.nodes[parents[0].0].value.clone();
                    let g = grad.item();
                    let two = S::one() + S::one();
                    let d = x.map(|v| two * v * g);
                    self.accumulate(parents[0], &d);
                }
            }
            Op::ScaleRows => {
                let x = self.nodes[parents[0].0].value.clone();
                let sc = self.nodes[parents[1].0].value.clone();
                let (rows, cols) = (x.shape()[0], x.shape()[1]);
                if self.parent_needs_grad(idx, 0) {
                    let data = (0..rows * cols)
                        .map(|i| grad.data()[i] * sc.data()[i / cols])
                        .collect();
                    let d = Tensor::from_vec(vec![rows, cols], data).expect("scale shape");
                    self.accumulate(parents[0], &d);
                }
                if self.parent_needs_grad(idx, 1) {
                    let data = (0..rows)
                        .map(|r| {
                            (0..cols)
                                .map(|c| grad.data()[r * cols + c] * x.data()[r * cols + c])
                                .sum::<S>()
                        })
                        .collect();
                    let d = Tensor::from_vec(vec![rows], data).expect("scales shape");
                    self.accumulate(parents[1], &d);
                }
            }
        }
    }
}

/// Max-subtracted softmax into a preallocated buffer.
fn softmax_into<S: Scalar>(row: &[S], out: &mut [S]) {
    let max = row.iter().copied().fold(S::neg_infinity(), S::max);
    let mut total = S::zero();
    for (o, v) in out.iter_mut().zip(row) {
        *o = (*v - max).exp();
        total += *o;
    }
    for o in out.iter_mut() {
        *o /= total;
    }
}

/// Max-subtracted log-sum-exp.
fn log_sum_exp<S: Scalar>(row: &[S]) -> S {
    let max = row.iter().copied().fold(S::neg_infinity(), S::max);
    let sum = row.iter().map(|v| (*v - max).exp()).sum::<S>();
    max + sum.ln()
}

#[cfg(test)]
mod tests {
    use super::*;

    type G = Graph<f64>;

    fn t(shape: &[usize], data: &[f64]) -> Tensor<f64> {
        Tensor::from_vec(shape.to_vec(), data.to_vec()).unwrap()
    }

    #[test]
    fn softmax_ce_uniform_logits_is_ln_k() {
        for k in [2usize, 3, 7] {
            let mut g = G::new();
            let logits = g.input(Tensor::zeros(&[4, k]));
            let loss = g.softmax_cross_entropy(logits, &[0, 1, 0, k - 1]).unwrap();
            assert!((g.value(loss).item() - (k as f64).ln()).abs() < 1e-12);
        }
    }

    #[test]
    fn relu_on_negative_is_zero() {
        let mut g = G::new();
        let x = g.input(t(&[2, 2], &[-1.0, -2.0, -0.5, -3.0]));
        let y = g.relu(x);
        assert!(g.value(y).data().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn matmul_matches_triple_loop() {
        let mut g = G::new();
        let a_data: Vec<f64> = (0..6).map(|i| i as f64 * 0.5 - 1.0).collect();
        let b_data: Vec<f64> = (0..12).map(|i| (i as f64).sin()).collect();
        let a = g.input(t(&[2, 3], &a_data));
        let b = g.input(t(&[3, 4], &b_data));
        let c = g.matmul(a, b).unwrap();
        assert_eq!(g.value(c).shape(), &[2, 4]);
        for i in 0..2 {
            for j in 0..4 {
                let mut expect = 0.0;
                for p in 0..3 {
                    expect += a_data[i * 3 + p] * b_data[p * 4 + j];
                }
                assert!((g.value(c).at2(i, j) - expect).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn l2sq_gradient_is_two_x() {
        let mut g = G::new();
        let w = g.param(t(&[1], &[3.0]));
        let loss = g.l2_sq(w);
        g.backward(loss).unwrap();
        assert_eq!(g.grad(w).unwrap().data(), &[6.0]);
    }

    #[test]
    fn constant_loss_leaves_params_at_zero_grad() {
        let mut g = G::new();
        let w = g.param(t(&[2], &[1.0, -1.0]));
        let x = g.input(t(&[2], &[0.0, 0.0]));
        let prod = g.mul(w, x).unwrap();
        let loss = g.mean_all(prod);
        g.backward(loss).unwrap();
        assert!(g.grad(w).unwrap().data().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn non_scalar_loss_rejected() {
        let mut g = G::new();
        let w = g.param(t(&[2], &[1.0, 2.0]));
        assert!(matches!(
            g.backward(w),
            Err(GraphError::NonScalarLoss(_))
        ));
    }

    #[test]
    fn shape_mismatch_names_op() {
        let mut g = G::new();
        let a = g.input(Tensor::zeros(&[2, 3]));
        let b = g.input(Tensor::zeros(&[3, 3]));
        match g.add(a, b) {
            Err(GraphError::Shape { op, .. }) => assert_eq!(op, "add"),
            other => panic!("unexpected: {other:?}"),
        }
    }

    #[test]
    fn dropout_rate_zero_is_identity() {
        let mut rng = crate::rng::stream(0, crate::rng::Component::Dropout);
        let mut g = G::new();
        let x = g.input(t(&[2, 2], &[1.0, 2.0, 3.0, 4.0]));
        let y = g.dropout(x, 0.0, &mut rng).unwrap();
        assert_eq!(g.value(y).data(), g.value(x).data());
    }

    #[test]
    fn dropout_masks_reproducible_per_seed() {
        let make = || {
            let mut rng = crate::rng::stream(5, crate::rng::Component::Dropout);
            let mut g = G::new();
            let x = g.input(Tensor::filled(&[4, 8], 1.0));
            let y = g.dropout(x, 0.5, &mut rng).unwrap();
            g.value(y).data().to_vec()
        };
        assert_eq!(make(), make());
    }

    #[test]
    fn gradient_accumulation_is_construction_order_independent() {
        // Same function with independent branches built in different order.
        let build = |swap: bool| {
            let mut g = G::new();
            let w = g.param(t(&[2], &[0.7, -0.3]));
            let (first, second) = if swap {
                let s = g.l2_sq(w);
                let m = g.mean_all(w);
                (m, s)
            } else {
                let m = g.mean_all(w);
                let s = g.l2_sq(w);
                (m, s)
            };
            let loss = g.add(first, second).unwrap();
            g.backward(loss).unwrap();
            g.grad(w).unwrap().data().to_vec()
        };
        let a = build(false);
        let b = build(true);
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn log_one_minus_softmax_matches_direct() {
        let mut g = G::new();
        let logits = g.input(t(&[1, 3], &[0.3, -0.2, 0.9]));
        let out = g.log_one_minus_softmax_col(logits, 2).unwrap();
        let p: f64 = {
            let row: [f64; 3] = [0.3, -0.2, 0.9];
            let z: f64 = row.iter().map(|v| v.exp()).sum();
            row[2].exp() / z
        };
        assert!((g.value(out).data()[0] - (1.0 - p).ln()).abs() < 1e-12);
    }

    #[test]
    fn softmax_rows_sum_to_one() {
        let mut g = G::new();
        let x = g.input(t(&[2, 3], &[0.1, 5.0, -2.0, 1.0, 1.0, 1.0]));
        let y = g.softmax_rows(x).unwrap();
        for r in 0..2 {
            let sum: f64 = g.value(y).row(r).iter().sum();
            assert!((sum - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn max_over_time_picks_first_on_ties() {
        let mut g = G::new();
        // B=1, L=3, F=2
        let x = g.input(t(&[1, 3, 2], &[1.0, 0.0, 1.0, 2.0, 0.5, 2.0]));
        let y = g.max_over_time(x).unwrap();
        assert_eq!(g.value(y).data(), &[1.0, 2.0]);
        let loss = g.mean_all(y);
        let _ = loss;
    }
}
