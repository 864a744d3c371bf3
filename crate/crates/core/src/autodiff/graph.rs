//! Tape-based reverse-mode differentiation over rank-2 tensors.
//!
//! Every operation appends a node to the [`Graph`] arena; node ids are
//! allocated in topological order, so the backward sweep is a plain reverse
//! scan from the loss. Each forward op also adds its floating point operation
//! count to a running tally that instrumented FLOPs checks read back.

use crate::autodiff::tensor::Tensor;
use crate::error::{Error, Result};

/// Handle to a node in a [`Graph`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

/// Fill value for masked attention logits. Finite so that fully masked rows
/// degrade to uniform weights instead of NaN.
pub const MASK_FILL: f64 = -1e9;

pub const LAYER_NORM_EPS: f64 = 1e-5;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Bcast {
    Same,
    Row,
    Col,
    Scalar,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    Rows,
    Cols,
}

#[derive(Debug, Clone)]
enum Op {
    Leaf,
    MatMul,
    Add(Bcast),
    Sub(Bcast),
    Mul(Bcast),
    Scale(f64),
    AddScalar,
    Concat(Axis, Vec<usize>),
    Softmax,
    GatedSoftmax { self_keep: bool, ratio: Vec<f64> },
    LayerNorm { xhat: Vec<f64>, inv_std: Vec<f64> },
    Sigmoid,
    Relu,
    Log,
    Sum,
    Mean,
    MeanRows,
    Variance,
    MaskedFill(Vec<bool>),
    Clamp(f64, f64),
    StraightThrough,
    GatherRows(Vec<usize>),
    SliceCols(usize),
    Transpose,
    Reshape,
}

impl Op {
    fn tag(&self) -> &'static str {
        match self {
            Op::Leaf => "leaf",
            Op::MatMul => "matmul",
            Op::Add(_) => "add",
            Op::Sub(_) => "sub",
            Op::Mul(_) => "mul",
            Op::Scale(_) => "scale",
            Op::AddScalar => "add_scalar",
            Op::Concat(..) => "concat",
            Op::Softmax => "row_softmax",
            Op::GatedSoftmax { .. } => "gated_row_softmax",
            Op::LayerNorm { .. } => "layer_norm",
            Op::Sigmoid => "sigmoid",
            Op::Relu => "relu",
            Op::Log => "log",
            Op::Sum => "sum",
            Op::Mean => "mean",
            Op::MeanRows => "mean_rows",
            Op::Variance => "variance",
            Op::MaskedFill(_) => "masked_fill",
            Op::Clamp(..) => "clamp",
            Op::StraightThrough => "straight_through",
            Op::GatherRows(_) => "gather_rows",
            Op::SliceCols(_) => "slice_cols",
            Op::Transpose => "transpose",
            Op::Reshape => "reshape",
        }
    }
}

#[derive(Debug)]
struct Node {
    op: Op,
    inputs: Vec<usize>,
    value: Tensor,
    requires_grad: bool,
}

/// Computation graph. Single-threaded; build one per forward pass.
#[derive(Debug, Default)]
pub struct Graph {
    nodes: Vec<Node>,
    grads: Vec<Option<Vec<f64>>>,
    consumed: bool,
    flops: u64,
}

fn gemm(
    m: usize,
    k: usize,
    n: usize,
    a: &[f64],
    a_strides: (usize, usize),
    b: &[f64],
    b_strides: (usize, usize),
    c: &mut [f64],
    beta: f64,
) {
    debug_assert!(c.len() >= m * n);
    // SAFETY: callers pass buffers sized m*k, k*n and m*n under the given strides.
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            1.0,
            a.as_ptr(),
            a_strides.0 as isize,
            a_strides.1 as isize,
            b.as_ptr(),
            b_strides.0 as isize,
            b_strides.1 as isize,
            beta,
            c.as_mut_ptr(),
            n as isize,
            1,
        );
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

impl Graph {
    pub fn new() -> Self {
        Self::default()
    }

    /// Floating point operations performed by forward ops so far.
    pub fn flops(&self) -> u64 {
        self.flops
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, v: Var) -> &Tensor {
        &self.nodes[v.0].value
    }

    pub fn requires_grad(&self, v: Var) -> bool {
        self.nodes[v.0].requires_grad
    }

    /// Gradient of the last backward's loss with respect to `v`; zeros when
    /// `v` was not on a path to the loss.
    pub fn grad(&self, v: Var) -> Vec<f64> {
        match self.grads.get(v.0) {
            Some(Some(g)) => g.clone(),
            _ => vec![0.0; self.nodes[v.0].value.numel()],
        }
    }

    pub fn leaf(&mut self, mut t: Tensor, requires_grad: bool) -> Var {
        t.requires_grad = requires_grad;
        t.grad = None;
        self.nodes.push(Node {
            op: Op::Leaf,
            inputs: vec![],
            value: t,
            requires_grad,
        });
        Var(self.nodes.len() - 1)
    }

    pub fn param(&mut self, t: Tensor) -> Var {
        self.leaf(t, true)
    }

    pub fn constant(&mut self, t: Tensor) -> Var {
        self.leaf(t, false)
    }

    fn push(&mut self, op: Op, inputs: &[Var], value: Tensor, flops: u64) -> Var {
        let requires_grad = inputs.iter().any(|v| self.nodes[v.0].requires_grad);
        self.flops += flops;
        let mut value = value;
        value.requires_grad = requires_grad;
        self.nodes.push(Node {
            op,
            inputs: inputs.iter().map(|v| v.0).collect(),
            value,
            requires_grad,
        });
        Var(self.nodes.len() - 1)
    }

    fn dims(&self, v: Var, op: &'static str) -> Result<(usize, usize)> {
        let s = self.nodes[v.0].value.shape();
        match s {
            [r, c] => Ok((*r, *c)),
            _ => Err(Error::dim(op, format!("expected rank-2 input, got {s:?}"))),
        }
    }

    fn bcast_kind(&self, a: Var, b: Var, op: &'static str) -> Result<Bcast> {
        let (ar, ac) = self.dims(a, op)?;
        let (br, bc) = self.dims(b, op)?;
        Ok(if (ar, ac) == (br, bc) {
            Bcast::Same
        } else if (br, bc) == (1, 1) {
            Bcast::Scalar
        } else if br == 1 && bc == ac {
            Bcast::Row
        } else if bc == 1 && br == ar {
            Bcast::Col
        } else {
            return Err(Error::dim(op, format!("{:?} vs {:?}", [ar, ac], [br, bc])));
        })
    }

    fn elementwise(
        &mut self,
        a: Var,
        b: Var,
        op: &'static str,
        f: impl Fn(f64, f64) -> f64,
    ) -> Result<(Bcast, Tensor)> {
        let kind = self.bcast_kind(a, b, op)?;
        let (r, c) = self.dims(a, op)?;
        let av = self.nodes[a.0].value.data();
        let bv = self.nodes[b.0].value.data();
        let mut out = Vec::with_capacity(r * c);
        for i in 0..r {
            for j in 0..c {
                let bj = match kind {
                    Bcast::Same => i * c + j,
                    Bcast::Row => j,
                    Bcast::Col => i,
                    Bcast::Scalar => 0,
                };
                out.push(f(av[i * c + j], bv[bj]));
            }
        }
        Ok((kind, Tensor::matrix(r, c, out)?))
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let (m, k) = self.dims(a, "matmul")?;
        let (k2, n) = self.dims(b, "matmul")?;
        if k != k2 {
            return Err(Error::dim("matmul", format!("{:?} x {:?}", [m, k], [k2, n])));
        }
        let mut out = vec![0.0; m * n];
        gemm(
            m,
            k,
            n,
            self.nodes[a.0].value.data(),
            (k, 1),
            self.nodes[b.0].value.data(),
            (n, 1),
            &mut out,
            0.0,
        );
        let flops = (m * n * (2 * k - 1)) as u64;
        Ok(self.push(Op::MatMul, &[a, b], Tensor::matrix(m, n, out)?, flops))
    }

    /// `a + b`; `b` may be a row vector, column vector or 1x1 broadcast.
    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        let (kind, t) = self.elementwise(a, b, "add", |x, y| x + y)?;
        let f = t.numel() as u64;
        Ok(self.push(Op::Add(kind), &[a, b], t, f))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        let (kind, t) = self.elementwise(a, b, "sub", |x, y| x - y)?;
        let f = t.numel() as u64;
        Ok(self.push(Op::Sub(kind), &[a, b], t, f))
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        let (kind, t) = self.elementwise(a, b, "mul", |x, y| x * y)?;
        let f = t.numel() as u64;
        Ok(self.push(Op::Mul(kind), &[a, b], t, f))
    }

    pub fn scale(&mut self, a: Var, s: f64) -> Result<Var> {
        let src = &self.nodes[a.0].value;
        let data = src.data().iter().map(|x| x * s).collect();
        let t = Tensor::new(src.shape(), data)?;
        let f = t.numel() as u64;
        Ok(self.push(Op::Scale(s), &[a], t, f))
    }

    pub fn add_scalar(&mut self, a: Var, s: f64) -> Result<Var> {
        let src = &self.nodes[a.0].value;
        let data = src.data().iter().map(|x| x + s).collect();
        let t = Tensor::new(src.shape(), data)?;
        let f = t.numel() as u64;
        Ok(self.push(Op::AddScalar, &[a], t, f))
    }

    pub fn concat(&mut self, parts: &[Var], axis: Axis) -> Result<Var> {
        if parts.is_empty() {
            return Err(Error::dim("concat", "no inputs"));
        }
        let dims: Vec<(usize, usize)> = parts
            .iter()
            .map(|&p| self.dims(p, "concat"))
            .collect::<Result<_>>()?;
        let t = match axis {
            Axis::Rows => {
                let c = dims[0].1;
                if dims.iter().any(|d| d.1 != c) {
                    return Err(Error::dim("concat", format!("column mismatch {dims:?}")));
                }
                let mut data = Vec::new();
                for &p in parts {
                    data.extend_from_slice(self.nodes[p.0].value.data());
                }
                Tensor::matrix(dims.iter().map(|d| d.0).sum(), c, data)?
            }
            Axis::Cols => {
                let r = dims[0].0;
                if dims.iter().any(|d| d.0 != r) {
                    return Err(Error::dim("concat", format!("row mismatch {dims:?}")));
                }
                let total: usize = dims.iter().map(|d| d.1).sum();
                let mut data = Vec::with_capacity(r * total);
                for i in 0..r {
                    for &p in parts {
                        data.extend_from_slice(self.nodes[p.0].value.row(i));
                    }
                }
                Tensor::matrix(r, total, data)?
            }
        };
        let sizes = dims
            .iter()
            .map(|d| if axis == Axis::Rows { d.0 } else { d.1 })
            .collect();
        Ok(self.push(Op::Concat(axis, sizes), parts, t, 0))
    }

    /// Softmax over each row, with row-max subtraction.
    pub fn row_softmax(&mut self, a: Var) -> Result<Var> {
        let (r, c) = self.dims(a, "row_softmax")?;
        let src = self.nodes[a.0].value.data();
        let mut out = vec![0.0; r * c];
        for i in 0..r {
            let row = &src[i * c..(i + 1) * c];
            let mx = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let o = &mut out[i * c..(i + 1) * c];
            let mut z = 0.0;
            for (oj, &x) in o.iter_mut().zip(row) {
                *oj = (x - mx).exp();
                z += *oj;
            }
            for oj in o.iter_mut() {
                *oj /= z;
            }
        }
        let f = (r * (4 * c - 1)) as u64;
        Ok(self.push(Op::Softmax, &[a], Tensor::matrix(r, c, out)?, f))
    }

    /// Row softmax where column `j` is weighted by `gate[j]` before
    /// normalisation: `p_ij = g_j e^{s_ij} / sum_k g_k e^{s_ik}`.
    ///
    /// With `self_keep` the diagonal weight is pinned to 1, so a gated-off
    /// token still attends to itself. Gate values of exactly 0 and 1 reproduce
    /// hard masking; the gradient with respect to a closed gate is the
    /// first-order effect of reopening it.
    pub fn gated_row_softmax(&mut self, scores: Var, gate: Var, self_keep: bool) -> Result<Var> {
        let (r, c) = self.dims(scores, "gated_row_softmax")?;
        let (gr, gc) = self.dims(gate, "gated_row_softmax")?;
        if gr != 1 || gc != c || (self_keep && r != c) {
            return Err(Error::dim(
                "gated_row_softmax",
                format!("scores {:?}, gate {:?}", [r, c], [gr, gc]),
            ));
        }
        let src = self.nodes[scores.0].value.data();
        let g = self.nodes[gate.0].value.data();
        let mut out = vec![0.0; r * c];
        let mut ratio = vec![0.0; r * c];
        for i in 0..r {
            let row = &src[i * c..(i + 1) * c];
            let mx = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let mut z = 0.0;
            for j in 0..c {
                let e = (row[j] - mx).exp();
                let gj = if self_keep && i == j { 1.0 } else { g[j] };
                ratio[i * c + j] = e;
                out[i * c + j] = gj * e;
                z += gj * e;
            }
            if z > 0.0 {
                for j in 0..c {
                    out[i * c + j] /= z;
                    ratio[i * c + j] /= z;
                }
            }
        }
        let f = (r * (5 * c - 1)) as u64;
        Ok(self.push(
            Op::GatedSoftmax { self_keep, ratio },
            &[scores, gate],
            Tensor::matrix(r, c, out)?,
            f,
        ))
    }

    /// Row-wise layer normalisation with affine `gamma`, `beta` (both 1 x d).
    pub fn layer_norm(&mut self, x: Var, gamma: Var, beta: Var) -> Result<Var> {
        let (r, d) = self.dims(x, "layer_norm")?;
        for p in [gamma, beta] {
            if self.dims(p, "layer_norm")? != (1, d) {
                return Err(Error::dim(
                    "layer_norm",
                    format!("affine {:?} for width {d}", self.nodes[p.0].value.shape()),
                ));
            }
        }
        let src = self.nodes[x.0].value.data();
        let gv = self.nodes[gamma.0].value.data();
        let bv = self.nodes[beta.0].value.data();
        let mut xhat = vec![0.0; r * d];
        let mut inv_std = vec![0.0; r];
        let mut out = vec![0.0; r * d];
        for i in 0..r {
            let row = &src[i * d..(i + 1) * d];
            let mean = row.iter().sum::<f64>() / d as f64;
            let var = row.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / d as f64;
            let is = 1.0 / (var + LAYER_NORM_EPS).sqrt();
            inv_std[i] = is;
            for j in 0..d {
                let h = (row[j] - mean) * is;
                xhat[i * d + j] = h;
                out[i * d + j] = h * gv[j] + bv[j];
            }
        }
        // mean 1, centred square 3, normalise 2, affine 2 per element
        let f = (r * 8 * d) as u64;
        Ok(self.push(
            Op::LayerNorm { xhat, inv_std },
            &[x, gamma, beta],
            Tensor::matrix(r, d, out)?,
            f,
        ))
    }

    pub fn sigmoid(&mut self, a: Var) -> Result<Var> {
        let src = &self.nodes[a.0].value;
        let data = src.data().iter().map(|&x| sigmoid(x)).collect();
        let t = Tensor::new(src.shape(), data)?;
        let f = 3 * t.numel() as u64;
        Ok(self.push(Op::Sigmoid, &[a], t, f))
    }

    pub fn relu(&mut self, a: Var) -> Result<Var> {
        let src = &self.nodes[a.0].value;
        let data = src.data().iter().map(|&x| x.max(0.0)).collect();
        let t = Tensor::new(src.shape(), data)?;
        let f = t.numel() as u64;
        Ok(self.push(Op::Relu, &[a], t, f))
    }

    pub fn log(&mut self, a: Var) -> Result<Var> {
        let src = &self.nodes[a.0].value;
        if let Some(bad) = src.data().iter().find(|&&x| x <= 0.0 || x.is_nan()) {
            return Err(Error::Domain {
                op: "log",
                detail: format!("non-positive input {bad}"),
            });
        }
        let data = src.data().iter().map(|x| x.ln()).collect();
        let t = Tensor::new(src.shape(), data)?;
        let f = t.numel() as u64;
        Ok(self.push(Op::Log, &[a], t, f))
    }

    pub fn sum(&mut self, a: Var) -> Result<Var> {
        let src = &self.nodes[a.0].value;
        let s = src.data().iter().sum();
        let f = (src.numel() - 1) as u64;
        Ok(self.push(Op::Sum, &[a], Tensor::scalar(s), f))
    }

    pub fn mean(&mut self, a: Var) -> Result<Var> {
        let src = &self.nodes[a.0].value;
        let s = src.data().iter().sum::<f64>() / src.numel() as f64;
        let f = src.numel() as u64;
        Ok(self.push(Op::Mean, &[a], Tensor::scalar(s), f))
    }

    /// Column-wise mean over rows: `n x d -> 1 x d`.
    pub fn mean_rows(&mut self, a: Var) -> Result<Var> {
        let (r, c) = self.dims(a, "mean_rows")?;
        let src = self.nodes[a.0].value.data();
        let mut out = vec![0.0; c];
        for i in 0..r {
            for j in 0..c {
                out[j] += src[i * c + j];
            }
        }
        out.iter_mut().for_each(|v| *v /= r as f64);
        let f = (r * c) as u64;
        Ok(self.push(Op::MeanRows, &[a], Tensor::matrix(1, c, out)?, f))
    }

    /// Population variance of all elements.
    pub fn variance(&mut self, a: Var) -> Result<Var> {
        let src = self.nodes[a.0].value.data();
        let n = src.len() as f64;
        let mean = src.iter().sum::<f64>() / n;
        let var = src.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        let f = 4 * src.len() as u64;
        Ok(self.push(Op::Variance, &[a], Tensor::scalar(var), f))
    }

    /// Writes `value` wherever `mask` is true. `mask` has the input's full
    /// size or one row's worth, broadcast down the rows.
    pub fn masked_fill(&mut self, a: Var, mask: &[bool], value: f64) -> Result<Var> {
        let (r, c) = self.dims(a, "masked_fill")?;
        let full: Vec<bool> = if mask.len() == r * c {
            mask.to_vec()
        } else if mask.len() == c {
            (0..r).flat_map(|_| mask.iter().copied()).collect()
        } else {
            return Err(Error::dim(
                "masked_fill",
                format!("mask of {} for input {:?}", mask.len(), [r, c]),
            ));
        };
        let src = self.nodes[a.0].value.data();
        let data = src
            .iter()
            .zip(&full)
            .map(|(&x, &m)| if m { value } else { x })
            .collect();
        let t = Tensor::matrix(r, c, data)?;
        Ok(self.push(Op::MaskedFill(full), &[a], t, 0))
    }

    pub fn clamp(&mut self, a: Var, lo: f64, hi: f64) -> Result<Var> {
        let src = &self.nodes[a.0].value;
        let data = src.data().iter().map(|x| x.clamp(lo, hi)).collect();
        let t = Tensor::new(src.shape(), data)?;
        Ok(self.push(Op::Clamp(lo, hi), &[a], t, 0))
    }

    /// Forward value `hard`, backward gradient routed unchanged into `soft`.
    pub fn straight_through(&mut self, hard: Tensor, soft: Var) -> Result<Var> {
        if hard.shape() != self.nodes[soft.0].value.shape() {
            return Err(Error::dim(
                "straight_through",
                format!("{:?} vs {:?}", hard.shape(), self.nodes[soft.0].value.shape()),
            ));
        }
        Ok(self.push(Op::StraightThrough, &[soft], hard, 0))
    }

    pub fn gather_rows(&mut self, a: Var, idx: &[usize]) -> Result<Var> {
        if idx.is_empty() {
            return Err(Error::dim("gather_rows", "empty index"));
        }
        let t = self.nodes[a.0].value.gather_rows(idx)?;
        Ok(self.push(Op::GatherRows(idx.to_vec()), &[a], t, 0))
    }

    pub fn slice_rows(&mut self, a: Var, start: usize, len: usize) -> Result<Var> {
        let idx: Vec<usize> = (start..start + len).collect();
        self.gather_rows(a, &idx)
    }

    pub fn slice_cols(&mut self, a: Var, start: usize, len: usize) -> Result<Var> {
        let (r, c) = self.dims(a, "slice_cols")?;
        if len == 0 || start + len > c {
            return Err(Error::dim(
                "slice_cols",
                format!("{start}..{} of {c}", start + len),
            ));
        }
        let src = &self.nodes[a.0].value;
        let mut data = Vec::with_capacity(r * len);
        for i in 0..r {
            data.extend_from_slice(&src.row(i)[start..start + len]);
        }
        let t = Tensor::matrix(r, len, data)?;
        Ok(self.push(Op::SliceCols(start), &[a], t, 0))
    }

    pub fn transpose(&mut self, a: Var) -> Result<Var> {
        let (r, c) = self.dims(a, "transpose")?;
        let src = self.nodes[a.0].value.data();
        let mut data = vec![0.0; r * c];
        for i in 0..r {
            for j in 0..c {
                data[j * r + i] = src[i * c + j];
            }
        }
        let t = Tensor::matrix(c, r, data)?;
        Ok(self.push(Op::Transpose, &[a], t, 0))
    }

    pub fn reshape(&mut self, a: Var, shape: &[usize]) -> Result<Var> {
        let src = &self.nodes[a.0].value;
        let t = Tensor::new(shape, src.data().to_vec())
            .map_err(|_| Error::dim("reshape", format!("{:?} -> {shape:?}", src.shape())))?;
        Ok(self.push(Op::Reshape, &[a], t, 0))
    }

    /// Back-propagates from a scalar `loss`. A graph supports one backward
    /// pass; build a fresh graph for the next step.
    pub fn backward(&mut self, loss: Var) -> Result<()> {
        if self.consumed {
            return Err(Error::Contract("backward called twice on the same graph".into()));
        }
        if self.nodes[loss.0].value.numel() != 1 {
            return Err(Error::Contract(format!(
                "backward needs a scalar loss, got shape {:?}",
                self.nodes[loss.0].value.shape()
            )));
        }
        self.consumed = true;
        let mut grads: Vec<Option<Vec<f64>>> = vec![None; self.nodes.len()];
        grads[loss.0] = Some(vec![1.0]);
        for id in (0..=loss.0).rev() {
            if !self.nodes[id].requires_grad {
                continue;
            }
            let Some(dy) = grads[id].take() else { continue };
            self.propagate(id, &dy, &mut grads)?;
            grads[id] = Some(dy);
        }
        self.grads = grads;
        Ok(())
    }

    fn propagate(&self, id: usize, dy: &[f64], grads: &mut [Option<Vec<f64>>]) -> Result<()> {
        let node = &self.nodes[id];
        let ins = &node.inputs;
        let wants = |i: usize| self.nodes[ins[i]].requires_grad;
        let numel = |i: usize| self.nodes[ins[i]].value.numel();
        let mut acc = |target: usize, g: &[f64]| {
            let slot = grads[target].get_or_insert_with(|| vec![0.0; g.len()]);
            for (s, v) in slot.iter_mut().zip(g) {
                *s += v;
            }
        };
        let val = |i: usize| self.nodes[ins[i]].value.data();
        let out = node.value.data();
        match &node.op {
            Op::Leaf => {}
            Op::MatMul => {
                let (m, k) = self.nodes[ins[0]].value.dims2()?;
                let n = self.nodes[ins[1]].value.cols();
                if wants(0) {
                    let mut da = vec![0.0; m * k];
                    // dA = dY (m x n) . B^T (n x k)
                    gemm(m, n, k, dy, (n, 1), val(1), (1, n), &mut da, 0.0);
                    acc(ins[0], &da);
                }
                if wants(1) {
                    let mut db = vec![0.0; k * n];
                    // dB = A^T (k x m) . dY (m x n)
                    gemm(k, m, n, val(0), (1, k), dy, (n, 1), &mut db, 0.0);
                    acc(ins[1], &db);
                }
            }
            Op::Add(kind) | Op::Sub(kind) | Op::Mul(kind) => {
                let (r, c) = node.value.dims2()?;
                let is_mul = matches!(node.op, Op::Mul(_));
                let sign = if matches!(node.op, Op::Sub(_)) { -1.0 } else { 1.0 };
                let bidx = |i: usize, j: usize| match kind {
                    Bcast::Same => i * c + j,
                    Bcast::Row => j,
                    Bcast::Col => i,
                    Bcast::Scalar => 0,
                };
                if wants(0) {
                    let da: Vec<f64> = if is_mul {
                        let b = val(1);
                        (0..r * c).map(|e| dy[e] * b[bidx(e / c, e % c)]).collect()
                    } else {
                        dy.to_vec()
                    };
                    acc(ins[0], &da);
                }
                if wants(1) {
                    let mut db = vec![0.0; numel(1)];
                    let a = val(0);
                    for i in 0..r {
                        for j in 0..c {
                            let e = i * c + j;
                            let g = if is_mul { dy[e] * a[e] } else { sign * dy[e] };
                            db[bidx(i, j)] += g;
                        }
                    }
                    acc(ins[1], &db);
                }
            }
            Op::Scale(s) => {
                let g: Vec<f64> = dy.iter().map(|v| v * s).collect();
                acc(ins[0], &g);
            }
            Op::AddScalar | Op::Reshape | Op::StraightThrough => acc(ins[0], dy),
            Op::Concat(axis, sizes) => {
                let (r, c) = node.value.dims2()?;
                let mut offset = 0;
                for (p, &size) in sizes.iter().enumerate() {
                    if wants(p) {
                        let g: Vec<f64> = match axis {
                            Axis::Rows => dy[offset * c..(offset + size) * c].to_vec(),
                            Axis::Cols => (0..r)
                                .flat_map(|i| dy[i * c + offset..i * c + offset + size].iter())
                                .copied()
                                .collect(),
                        };
                        acc(ins[p], &g);
                    }
                    offset += size;
                }
            }
            Op::Softmax => {
                let (r, c) = node.value.dims2()?;
                let mut g = vec![0.0; r * c];
                for i in 0..r {
                    let p = &out[i * c..(i + 1) * c];
                    let d = &dy[i * c..(i + 1) * c];
                    let dot: f64 = p.iter().zip(d).map(|(a, b)| a * b).sum();
                    for j in 0..c {
                        g[i * c + j] = p[j] * (d[j] - dot);
                    }
                }
                acc(ins[0], &g);
            }
            Op::GatedSoftmax { self_keep, ratio } => {
                let (r, c) = node.value.dims2()?;
                let mut gs = vec![0.0; r * c];
                let mut gg = vec![0.0; c];
                for i in 0..r {
                    let p = &out[i * c..(i + 1) * c];
                    let d = &dy[i * c..(i + 1) * c];
                    let dot: f64 = p.iter().zip(d).map(|(a, b)| a * b).sum();
                    for j in 0..c {
                        let centred = d[j] - dot;
                        gs[i * c + j] = p[j] * centred;
                        if !(*self_keep && i == j) {
                            gg[j] += ratio[i * c + j] * centred;
                        }
                    }
                }
                if wants(0) {
                    acc(ins[0], &gs);
                }
                if wants(1) {
                    acc(ins[1], &gg);
                }
            }
            Op::LayerNorm { xhat, inv_std } => {
                let (r, d) = node.value.dims2()?;
                let gamma = val(1);
                if wants(0) {
                    let mut gx = vec![0.0; r * d];
                    for i in 0..r {
                        let mut m1 = 0.0;
                        let mut m2 = 0.0;
                        for j in 0..d {
                            let dh = dy[i * d + j] * gamma[j];
                            m1 += dh;
                            m2 += dh * xhat[i * d + j];
                        }
                        m1 /= d as f64;
                        m2 /= d as f64;
                        for j in 0..d {
                            let dh = dy[i * d + j] * gamma[j];
                            gx[i * d + j] = inv_std[i] * (dh - m1 - xhat[i * d + j] * m2);
                        }
                    }
                    acc(ins[0], &gx);
                }
                if wants(1) || wants(2) {
                    let mut gg = vec![0.0; d];
                    let mut gb = vec![0.0; d];
                    for i in 0..r {
                        for j in 0..d {
                            gg[j] += dy[i * d + j] * xhat[i * d + j];
                            gb[j] += dy[i * d + j];
                        }
                    }
                    if wants(1) {
                        acc(ins[1], &gg);
                    }
                    if wants(2) {
                        acc(ins[2], &gb);
                    }
                }
            }
            Op::Sigmoid => {
                let g: Vec<f64> = out.iter().zip(dy).map(|(s, d)| d * s * (1.0 - s)).collect();
                acc(ins[0], &g);
            }
            Op::Relu => {
                let g: Vec<f64> = val(0)
                    .iter()
                    .zip(dy)
                    .map(|(x, d)| if *x > 0.0 { *d } else { 0.0 })
                    .collect();
                acc(ins[0], &g);
            }
            Op::Log => {
                let g: Vec<f64> = val(0).iter().zip(dy).map(|(x, d)| d / x).collect();
                acc(ins[0], &g);
            }
            Op::Sum => acc(ins[0], &vec![dy[0]; numel(0)]),
            Op::Mean => {
                let n = numel(0);
                acc(ins[0], &vec![dy[0] / n as f64; n]);
            }
            Op::MeanRows => {
                let (r, c) = self.nodes[ins[0]].value.dims2()?;
                let g: Vec<f64> = (0..r * c).map(|e| dy[e % c] / r as f64).collect();
                acc(ins[0], &g);
            }
            Op::Variance => {
                let x = val(0);
                let n = x.len() as f64;
                let mean = x.iter().sum::<f64>() / n;
                let g: Vec<f64> = x.iter().map(|v| dy[0] * 2.0 * (v - mean) / n).collect();
                acc(ins[0], &g);
            }
            Op::MaskedFill(mask) => {
                let g: Vec<f64> = dy
                    .iter()
                    .zip(mask)
                    .map(|(d, m)| if *m { 0.0 } else { *d })
                    .collect();
                acc(ins[0], &g);
            }
            Op::Clamp(lo, hi) => {
                let g: Vec<f64> = val(0)
                    .iter()
                    .zip(dy)
                    .map(|(x, d)| if x < lo || x > hi { 0.0 } else { *d })
                    .collect();
                acc(ins[0], &g);
            }
            Op::GatherRows(idx) => {
                let c = node.value.cols();
                let mut g = vec![0.0; numel(0)];
                for (k, &row) in idx.iter().enumerate() {
                    for j in 0..c {
                        g[row * c + j] += dy[k * c + j];
                    }
                }
                acc(ins[0], &g);
            }
            Op::SliceCols(start) => {
                let (r, len) = node.value.dims2()?;
                let c = self.nodes[ins[0]].value.cols();
                let mut g = vec![0.0; r * c];
                for i in 0..r {
                    g[i * c + start..i * c + start + len].copy_from_slice(&dy[i * len..(i + 1) * len]);
                }
                acc(ins[0], &g);
            }
            Op::Transpose => {
                let (r, c) = node.value.dims2()?;
                let mut g = vec![0.0; r * c];
                for i in 0..r {
                    for j in 0..c {
                        g[j * r + i] = dy[i * c + j];
                    }
                }
                acc(ins[0], &g);
            }
        }
        Ok(())
    }

    /// Operation tag of the node behind `v`.
    pub fn op_tag(&self, v: Var) -> &'static str {
        self.nodes[v.0].op.tag()
    }
}
