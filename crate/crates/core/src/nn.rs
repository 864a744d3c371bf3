//! Layers shared by the predictor and the estimator, built from graph
//! primitives. Parameters are looked up by name prefix in [`Bindings`].

use rand::Rng;

use crate::autodiff::{Axis, Graph, Var, MASK_FILL};
use crate::error::Result;
use crate::params::{Bindings, ParameterStore};

/// How attention is restricted across tokens.
#[derive(Debug, Clone, Copy)]
pub enum Gate<'a> {
    /// Every token sees every token.
    All,
    /// `keep[j] == false` removes token `j` as a key for every other query.
    Hard(&'a [bool]),
    /// Differentiable per-token gate (1 x n) in `[0, 1]`.
    Soft(Var),
}

pub fn init_linear<R: Rng + ?Sized>(
    store: &mut ParameterStore,
    prefix: &str,
    d_in: usize,
    d_out: usize,
    rng: &mut R,
) {
    store.insert_xavier(&format!("{prefix}.w"), d_in, d_out, rng);
    store.insert_zeros(&format!("{prefix}.b"), 1, d_out);
}

pub fn init_layer_norm(store: &mut ParameterStore, prefix: &str, d: usize) {
    store.insert_ones(&format!("{prefix}.g"), 1, d);
    store.insert_zeros(&format!("{prefix}.b"), 1, d);
}

pub fn init_attention<R: Rng + ?Sized>(store: &mut ParameterStore, prefix: &str, d: usize, rng: &mut R) {
    for p in ["q", "k", "v", "o"] {
        init_linear(store, &format!("{prefix}.{p}"), d, d, rng);
    }
}

/// Pre-norm transformer block: attention and a ReLU feed-forward, each with
/// a residual connection.
pub fn init_block<R: Rng + ?Sized>(
    store: &mut ParameterStore,
    prefix: &str,
    d: usize,
    d_ff: usize,
    rng: &mut R,
) {
    init_layer_norm(store, &format!("{prefix}.ln1"), d);
    init_attention(store, &format!("{prefix}.attn"), d, rng);
    init_layer_norm(store, &format!("{prefix}.ln2"), d);
    init_linear(store, &format!("{prefix}.ff1"), d, d_ff, rng);
    init_linear(store, &format!("{prefix}.ff2"), d_ff, d, rng);
}

pub fn linear(g: &mut Graph, b: &Bindings, prefix: &str, x: Var) -> Result<Var> {
    let w = b.get(&format!("{prefix}.w"))?;
    let bias = b.get(&format!("{prefix}.b"))?;
    let y = g.matmul(x, w)?;
    g.add(y, bias)
}

pub fn layer_norm(g: &mut Graph, b: &Bindings, prefix: &str, x: Var) -> Result<Var> {
    let gamma = b.get(&format!("{prefix}.g"))?;
    let beta = b.get(&format!("{prefix}.b"))?;
    g.layer_norm(x, gamma, beta)
}

pub fn feed_forward(g: &mut Graph, b: &Bindings, prefix: &str, x: Var) -> Result<Var> {
    let h = linear(g, b, &format!("{prefix}.ff1"), x)?;
    let h = g.relu(h)?;
    linear(g, b, &format!("{prefix}.ff2"), h)
}

/// Scaled dot-product attention of `q` over `k`/`v` for every head, heads
/// concatenated along columns. No output projection.
fn attend(g: &mut Graph, q: Var, k: Var, v: Var, n_heads: usize, gate: Gate<'_>) -> Result<Var> {
    let d = g.value(q).cols();
    let dk = d / n_heads;
    let scale = 1.0 / (dk as f64).sqrt();
    let n_q = g.value(q).rows();
    let n_k = g.value(k).rows();
    let hard_mask: Option<Vec<bool>> = match gate {
        Gate::Hard(keep) => Some(
            (0..n_q * n_k)
                .map(|e| {
                    let (i, j) = (e / n_k, e % n_k);
                    !keep[j] && i != j
                })
                .collect(),
        ),
        _ => None,
    };
    let mut heads = Vec::with_capacity(n_heads);
    for h in 0..n_heads {
        let qh = g.slice_cols(q, h * dk, dk)?;
        let kh = g.slice_cols(k, h * dk, dk)?;
        let vh = g.slice_cols(v, h * dk, dk)?;
        let kt = g.transpose(kh)?;
        let s = g.matmul(qh, kt)?;
        let s = g.scale(s, scale)?;
        let p = match gate {
            Gate::All => g.row_softmax(s)?,
            Gate::Hard(_) => {
                let s = g.masked_fill(s, hard_mask.as_deref().expect("mask built"), MASK_FILL)?;
                g.row_softmax(s)?
            }
            Gate::Soft(gv) => g.gated_row_softmax(s, gv, true)?,
        };
        heads.push(g.matmul(p, vh)?);
    }
    if heads.len() == 1 {
        Ok(heads[0])
    } else {
        g.concat(&heads, Axis::Cols)
    }
}

/// Multi-head self-attention. With `segment` set, rows are split into
/// consecutive independent sequences of that length.
pub fn self_attention(
    g: &mut Graph,
    b: &Bindings,
    prefix: &str,
    x: Var,
    n_heads: usize,
    segment: Option<usize>,
    gate: Gate<'_>,
) -> Result<Var> {
    let q = linear(g, b, &format!("{prefix}.q"), x)?;
    let k = linear(g, b, &format!("{prefix}.k"), x)?;
    let v = linear(g, b, &format!("{prefix}.v"), x)?;
    let n = g.value(x).rows();
    let mixed = match segment {
        Some(len) if len < n => {
            let mut parts = Vec::with_capacity(n / len);
            for start in (0..n).step_by(len) {
                let qs = g.slice_rows(q, start, len)?;
                let ks = g.slice_rows(k, start, len)?;
                let vs = g.slice_rows(v, start, len)?;
                parts.push(attend(g, qs, ks, vs, n_heads, gate)?);
            }
            g.concat(&parts, Axis::Rows)?
        }
        _ => attend(g, q, k, v, n_heads, gate)?,
    };
    linear(g, b, &format!("{prefix}.o"), mixed)
}

pub fn transformer_block(
    g: &mut Graph,
    b: &Bindings,
    prefix: &str,
    x: Var,
    n_heads: usize,
    segment: Option<usize>,
    gate: Gate<'_>,
) -> Result<Var> {
    let h = layer_norm(g, b, &format!("{prefix}.ln1"), x)?;
    let a = self_attention(g, b, &format!("{prefix}.attn"), h, n_heads, segment, gate)?;
    let x = g.add(x, a)?;
    let h = layer_norm(g, b, &format!("{prefix}.ln2"), x)?;
    let f = feed_forward(g, b, prefix, h)?;
    g.add(x, f)
}

/// Block where only token 0 issues a query; every token receives its share
/// of that query's attention, `a_j * v_j`, as its update.
pub fn primary_query_block(g: &mut Graph, b: &Bindings, prefix: &str, x: Var, n_heads: usize) -> Result<Var> {
    let h = layer_norm(g, b, &format!("{prefix}.ln1"), x)?;
    let att = format!("{prefix}.attn");
    let h0 = g.slice_rows(h, 0, 1)?;
    let q = linear(g, b, &format!("{att}.q"), h0)?;
    let k = linear(g, b, &format!("{att}.k"), h)?;
    let v = linear(g, b, &format!("{att}.v"), h)?;
    let d = g.value(q).cols();
    let dk = d / n_heads;
    let scale = 1.0 / (dk as f64).sqrt();
    let mut heads = Vec::with_capacity(n_heads);
    for hd in 0..n_heads {
        let qh = g.slice_cols(q, hd * dk, dk)?;
        let kh = g.slice_cols(k, hd * dk, dk)?;
        let vh = g.slice_cols(v, hd * dk, dk)?;
        let kt = g.transpose(kh)?;
        let s = g.matmul(qh, kt)?;
        let s = g.scale(s, scale)?;
        let p = g.row_softmax(s)?;
        let pc = g.transpose(p)?;
        heads.push(g.mul(vh, pc)?);
    }
    let mixed = if heads.len() == 1 {
        heads[0]
    } else {
        g.concat(&heads, Axis::Cols)?
    };
    let a = linear(g, b, &format!("{att}.o"), mixed)?;
    let x = g.add(x, a)?;
    let h = layer_norm(g, b, &format!("{prefix}.ln2"), x)?;
    let f = feed_forward(g, b, prefix, h)?;
    g.add(x, f)
}
