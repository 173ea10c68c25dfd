//! Reverse-mode autodiff tape over [`Tensor2`] values.
//!
//! The tape records the handful of primitives the router needs. Each
//! constructor runs the forward computation immediately and pushes one
//! node; [`Tape::backward`] walks the nodes in exact reverse order and
//! accumulates gradients additively, so calling it twice on the same
//! tape is pure.
//!
//! Loss-shaped primitives (`contrast_term`, `sigmoid_bce`) are fused:
//! they consume scalar similarity nodes and use log-sum-exp/softplus
//! forms internally so no intermediate `exp` can overflow.

use super::tensor::{dot, norm, Tensor2};
use crate::error::{Error, Result};

/// Handle to a tape node.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct VarId(pub(crate) usize);

#[derive(Debug)]
enum Op {
    Leaf,
    /// y = W x
    MatVec { w: VarId, x: VarId },
    /// y = W x + b
    Affine { w: VarId, x: VarId, b: VarId },
    Tanh { x: VarId },
    Add { a: VarId, b: VarId },
    Softmax { x: VarId },
    /// Row extraction from a matrix leaf; backward scatters into that row.
    Row { m: VarId, idx: usize },
    Dot { a: VarId, b: VarId },
    Scale { x: VarId, c: f64 },
    /// Scalars stacked into a vector.
    Stack { parts: Vec<VarId> },
    /// Vectors concatenated into one vector.
    Concat { parts: Vec<VarId> },
    /// y = sum_i weights[i] * items[i]
    WeightedSum { weights: VarId, items: Vec<VarId> },
    CosineSim { a: VarId, b: VarId },
    /// -log( exp(p/tau) / (exp(p/tau) + sum_n exp(n/tau)) ) over scalar sims.
    ContrastTerm {
        pos: VarId,
        negs: Vec<VarId>,
        inv_tau: f64,
    },
    /// Binary cross-entropy of sigmoid(logit) against a fixed target.
    SigmoidBce { logit: VarId, target: f64 },
    /// Scalar linear combination sum_i coeffs[i] * terms[i].
    SumScaled { terms: Vec<VarId>, coeffs: Vec<f64> },
}

struct Node {
    value: Tensor2,
    op: Op,
}

/// Recorded forward computation.
pub struct Tape {
    nodes: Vec<Node>,
}

impl Default for Tape {
    fn default() -> Self {
        Self::new()
    }
}

impl Tape {
    pub fn new() -> Self {
        Self { nodes: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, id: VarId) -> &Tensor2 {
        &self.nodes[id.0].value
    }

    fn push(&mut self, value: Tensor2, op: Op) -> VarId {
        self.nodes.push(Node { value, op });
        VarId(self.nodes.len() - 1)
    }

    /// Inserts an input (parameter or constant) node.
    pub fn leaf(&mut self, value: Tensor2) -> VarId {
        self.push(value, Op::Leaf)
    }

    pub fn constant(&mut self, v: f64) -> VarId {
        self.leaf(Tensor2::scalar(v))
    }

    fn expect_vector(&self, id: VarId, what: &str) -> Result<usize> {
        let t = self.value(id);
        if t.cols() != 1 {
            return Err(Error::ShapeMismatch(format!(
                "{what}: expected column vector, got {}x{}",
                t.rows(),
                t.cols()
            )));
        }
        Ok(t.rows())
    }

    fn expect_scalar(&self, id: VarId, what: &str) -> Result<f64> {
        let t = self.value(id);
        if t.len() != 1 {
            return Err(Error::ShapeMismatch(format!(
                "{what}: expected scalar, got {}x{}",
                t.rows(),
                t.cols()
            )));
        }
        Ok(t.item())
    }

    /// y = W x
    pub fn matvec(&mut self, w: VarId, x: VarId) -> Result<VarId> {
        let n = self.expect_vector(x, "matvec input")?;
        let wt = self.value(w);
        if wt.cols() != n {
            return Err(Error::ShapeMismatch(format!(
                "matvec: {}x{} matrix applied to {}-vector",
                wt.rows(),
                wt.cols(),
                n
            )));
        }
        let y = wt.matvec(self.value(x).data());
        Ok(self.push(Tensor2::vector(y), Op::MatVec { w, x }))
    }

    /// y = W x + b
    pub fn affine(&mut self, w: VarId, x: VarId, b: VarId) -> Result<VarId> {
        let n = self.expect_vector(x, "affine input")?;
        let m = self.expect_vector(b, "affine bias")?;
        let wt = self.value(w);
        if wt.cols() != n || wt.rows() != m {
            return Err(Error::ShapeMismatch(format!(
                "affine: {}x{} matrix with {}-vector input and {}-vector bias",
                wt.rows(),
                wt.cols(),
                n,
                m
            )));
        }
        let mut y = wt.matvec(self.value(x).data());
        for (yi, bi) in y.iter_mut().zip(self.value(b).data()) {
            *yi += bi;
        }
        Ok(self.push(Tensor2::vector(y), Op::Affine { w, x, b }))
    }

    pub fn tanh(&mut self, x: VarId) -> VarId {
        let y: Vec<f64> = self.value(x).data().iter().map(|v| v.tanh()).collect();
        let shape = (self.value(x).rows(), self.value(x).cols());
        let t = Tensor2::from_vec(shape.0, shape.1, y).expect("tanh preserves shape");
        self.push(t, Op::Tanh { x })
    }

    pub fn add(&mut self, a: VarId, b: VarId) -> Result<VarId> {
        if !self.value(a).same_shape(self.value(b)) {
            return Err(Error::ShapeMismatch("add: operand shapes differ".into()));
        }
        let mut y = self.value(a).clone();
        y.add_assign(self.value(b));
        Ok(self.push(y, Op::Add { a, b }))
    }

    /// Numerically stable softmax over a vector (max-subtraction).
    pub fn softmax(&mut self, x: VarId) -> Result<VarId> {
        self.expect_vector(x, "softmax input")?;
        let xs = self.value(x).data();
        let max = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let exps: Vec<f64> = xs.iter().map(|v| (v - max).exp()).collect();
        let sum: f64 = exps.iter().sum();
        let y: Vec<f64> = exps.iter().map(|e| e / sum).collect();
        Ok(self.push(Tensor2::vector(y), Op::Softmax { x }))
    }

    /// Extracts row `idx` of a matrix node as a column vector.
    pub fn row(&mut self, m: VarId, idx: usize) -> Result<VarId> {
        let t = self.value(m);
        if idx >= t.rows() {
            return Err(Error::Invalid(format!(
                "row index {idx} out of range for {} rows",
                t.rows()
            )));
        }
        let v = t.row(idx).to_vec();
        Ok(self.push(Tensor2::vector(v), Op::Row { m, idx }))
    }

    pub fn dot(&mut self, a: VarId, b: VarId) -> Result<VarId> {
        let n = self.expect_vector(a, "dot lhs")?;
        let m = self.expect_vector(b, "dot rhs")?;
        if n != m {
            return Err(Error::ShapeMismatch(format!("dot: {n} vs {m}")));
        }
        let v = dot(self.value(a).data(), self.value(b).data());
        Ok(self.push(Tensor2::scalar(v), Op::Dot { a, b }))
    }

    pub fn scale(&mut self, x: VarId, c: f64) -> VarId {
        let t = self.value(x);
        let y: Vec<f64> = t.data().iter().map(|v| v * c).collect();
        let t = Tensor2::from_vec(t.rows(), t.cols(), y).expect("scale preserves shape");
        self.push(t, Op::Scale { x, c })
    }

    /// Stacks scalar nodes into a vector.
    pub fn stack(&mut self, parts: &[VarId]) -> Result<VarId> {
        if parts.is_empty() {
            return Err(Error::Invalid("stack of zero scalars".into()));
        }
        let mut v = Vec::with_capacity(parts.len());
        for &p in parts {
            v.push(self.expect_scalar(p, "stack part")?);
        }
        Ok(self.push(
            Tensor2::vector(v),
            Op::Stack {
                parts: parts.to_vec(),
            },
        ))
    }

    /// Concatenates vector nodes.
    pub fn concat(&mut self, parts: &[VarId]) -> Result<VarId> {
        if parts.is_empty() {
            return Err(Error::Invalid("concat of zero vectors".into()));
        }
        let mut v = Vec::new();
        for &p in parts {
            self.expect_vector(p, "concat part")?;
            v.extend_from_slice(self.value(p).data());
        }
        Ok(self.push(
            Tensor2::vector(v),
            Op::Concat {
                parts: parts.to_vec(),
            },
        ))
    }

    /// y = sum_i weights[i] * items[i]
    pub fn weighted_sum(&mut self, weights: VarId, items: &[VarId]) -> Result<VarId> {
        let m = self.expect_vector(weights, "weights")?;
        if m != items.len() || items.is_empty() {
            return Err(Error::ShapeMismatch(format!(
                "weighted_sum: {m} weights over {} items",
                items.len()
            )));
        }
        let n = self.expect_vector(items[0], "weighted_sum item")?;
        let mut y = vec![0.0; n];
        for (i, &item) in items.iter().enumerate() {
            if self.expect_vector(item, "weighted_sum item")? != n {
                return Err(Error::ShapeMismatch("weighted_sum: item sizes differ".into()));
            }
            let w = self.value(weights).data()[i];
            for (acc, v) in y.iter_mut().zip(self.value(item).data()) {
                *acc += w * v;
            }
        }
        Ok(self.push(
            Tensor2::vector(y),
            Op::WeightedSum {
                weights,
                items: items.to_vec(),
            },
        ))
    }

    /// a.b / (|a||b|); errors on zero-norm input.
    pub fn cosine_sim(&mut self, a: VarId, b: VarId) -> Result<VarId> {
        let n = self.expect_vector(a, "cosine lhs")?;
        if self.expect_vector(b, "cosine rhs")? != n {
            return Err(Error::ShapeMismatch("cosine: dimensions differ".into()));
        }
        let na = norm(self.value(a).data());
        let nb = norm(self.value(b).data());
        if na == 0.0 || nb == 0.0 {
            return Err(Error::Invalid("cosine similarity of zero-norm vector".into()));
        }
        let s = dot(self.value(a).data(), self.value(b).data()) / (na * nb);
        Ok(self.push(Tensor2::scalar(s), Op::CosineSim { a, b }))
    }

    /// One positive-anchored term of the contrastive objective, over
    /// scalar similarity nodes. Empty `negs` yields exactly 0.
    pub fn contrast_term(&mut self, pos: VarId, negs: &[VarId], tau: f64) -> Result<VarId> {
        if tau <= 0.0 {
            return Err(Error::Invalid(format!("temperature must be positive, got {tau}")));
        }
        let p = self.expect_scalar(pos, "contrast positive")?;
        let inv_tau = 1.0 / tau;
        let mut zs = Vec::with_capacity(negs.len());
        for &n in negs {
            let s = self.expect_scalar(n, "contrast negative")?;
            zs.push((s - p) * inv_tau);
        }
        // log(1 + sum exp(z)) via log-sum-exp over {0} U z.
        let value = if zs.is_empty() {
            0.0
        } else {
            let m = zs.iter().cloned().fold(0.0f64, f64::max);
            let sum = (-m).exp() + zs.iter().map(|z| (z - m).exp()).sum::<f64>();
            m + sum.ln()
        };
        Ok(self.push(
            Tensor2::scalar(value),
            Op::ContrastTerm {
                pos,
                negs: negs.to_vec(),
                inv_tau,
            },
        ))
    }

    /// -[y log s + (1-y) log(1-s)] with s = sigmoid(logit), in
    /// softplus form: softplus(logit) - y*logit.
    pub fn sigmoid_bce(&mut self, logit: VarId, target: f64) -> Result<VarId> {
        if !(0.0..=1.0).contains(&target) {
            return Err(Error::Invalid(format!("bce target outside [0,1]: {target}")));
        }
        let s = self.expect_scalar(logit, "bce logit")?;
        let value = softplus(s) - target * s;
        Ok(self.push(Tensor2::scalar(value), Op::SigmoidBce { logit, target }))
    }

    /// Scalar combination sum_i coeffs[i]*terms[i].
    pub fn sum_scaled(&mut self, terms: &[VarId], coeffs: &[f64]) -> Result<VarId> {
        if terms.len() != coeffs.len() {
            return Err(Error::ShapeMismatch(format!(
                "sum_scaled: {} terms, {} coefficients",
                terms.len(),
                coeffs.len()
            )));
        }
        let mut v = 0.0;
        for (&t, &c) in terms.iter().zip(coeffs) {
            v += c * self.expect_scalar(t, "sum_scaled term")?;
        }
        Ok(self.push(
            Tensor2::scalar(v),
            Op::SumScaled {
                terms: terms.to_vec(),
                coeffs: coeffs.to_vec(),
            },
        ))
    }

    /// Accumulates d(loss)/d(node) for every node, walking the record
    /// in reverse. `loss` must be scalar. Pure: does not mutate the tape.
    pub fn backward(&self, loss: VarId) -> Gradients {
        debug_assert_eq!(self.value(loss).len(), 1, "backward from non-scalar");
        let mut grads: Vec<Option<Tensor2>> = (0..self.nodes.len()).map(|_| None).collect();
        grads[loss.0] = Some(Tensor2::scalar(1.0));

        for id in (0..self.nodes.len()).rev() {
            let Some(gy) = grads[id].take() else { continue };
            self.apply_backward(id, &gy, &mut grads);
            grads[id] = Some(gy);
        }
        Gradients { grads }
    }

    fn apply_backward(&self, id: usize, gy: &Tensor2, grads: &mut [Option<Tensor2>]) {
        let node = &self.nodes[id];
        match &node.op {
            Op::Leaf => {}
            Op::MatVec { w, x } => {
                let wt = self.value(*w);
                let xv = self.value(*x).data();
                let g = gy.data();
                grad_slot(grads, *w, wt.rows(), wt.cols()).add_outer(g, xv);
                let gx = wt.matvec_transpose(g);
                add_vec(grad_slot(grads, *x, xv.len(), 1), &gx);
            }
            Op::Affine { w, x, b } => {
                let wt = self.value(*w);
                let xv = self.value(*x).data();
                let g = gy.data();
                grad_slot(grads, *w, wt.rows(), wt.cols()).add_outer(g, xv);
                add_vec(grad_slot(grads, *b, g.len(), 1), g);
                let gx = wt.matvec_transpose(g);
                add_vec(grad_slot(grads, *x, xv.len(), 1), &gx);
            }
            Op::Tanh { x } => {
                let y = node.value.data();
                let slot = grad_slot(grads, *x, node.value.rows(), node.value.cols());
                for ((s, &g), &yv) in slot.data_mut().iter_mut().zip(gy.data()).zip(y) {
                    *s += g * (1.0 - yv * yv);
                }
            }
            Op::Add { a, b } => {
                add_vec(
                    grad_slot(grads, *a, node.value.rows(), node.value.cols()),
                    gy.data(),
                );
                add_vec(
                    grad_slot(grads, *b, node.value.rows(), node.value.cols()),
                    gy.data(),
                );
            }
            Op::Softmax { x } => {
                let y = node.value.data();
                let g = gy.data();
                let inner = dot(y, g);
                let slot = grad_slot(grads, *x, y.len(), 1);
                for ((s, &yv), &gv) in slot.data_mut().iter_mut().zip(y).zip(g) {
                    *s += yv * (gv - inner);
                }
            }
            Op::Row { m, idx } => {
                let mt = self.value(*m);
                let cols = mt.cols();
                let slot = grad_slot(grads, *m, mt.rows(), cols);
                let dst = &mut slot.data_mut()[idx * cols..(idx + 1) * cols];
                for (d, &g) in dst.iter_mut().zip(gy.data()) {
                    *d += g;
                }
            }
            Op::Dot { a, b } => {
                let g = gy.item();
                let av = self.value(*a).data().to_vec();
                let bv = self.value(*b).data().to_vec();
                axpy(grad_slot(grads, *a, av.len(), 1), g, &bv);
                axpy(grad_slot(grads, *b, bv.len(), 1), g, &av);
            }
            Op::Scale { x, c } => {
                let slot = grad_slot(grads, *x, node.value.rows(), node.value.cols());
                for (s, &g) in slot.data_mut().iter_mut().zip(gy.data()) {
                    *s += c * g;
                }
            }
            Op::Stack { parts } => {
                for (i, &p) in parts.iter().enumerate() {
                    grad_slot(grads, p, 1, 1).data_mut()[0] += gy.data()[i];
                }
            }
            Op::Concat { parts } => {
                let mut off = 0;
                for &p in parts {
                    let n = self.value(p).rows();
                    add_vec(grad_slot(grads, p, n, 1), &gy.data()[off..off + n]);
                    off += n;
                }
            }
            Op::WeightedSum { weights, items } => {
                let g = gy.data();
                let wv = self.value(*weights).data().to_vec();
                for (i, &item) in items.iter().enumerate() {
                    let iv = self.value(item).data().to_vec();
                    grad_slot(grads, *weights, wv.len(), 1).data_mut()[i] += dot(g, &iv);
                    axpy(grad_slot(grads, item, iv.len(), 1), wv[i], g);
                }
            }
            Op::CosineSim { a, b } => {
                let g = gy.item();
                let av = self.value(*a).data().to_vec();
                let bv = self.value(*b).data().to_vec();
                let na = norm(&av);
                let nb = norm(&bv);
                let s = dot(&av, &bv) / (na * nb);
                {
                    let slot = grad_slot(grads, *a, av.len(), 1);
                    for i in 0..av.len() {
                        slot.data_mut()[i] += g * (bv[i] / (na * nb) - s * av[i] / (na * na));
                    }
                }
                let slot = grad_slot(grads, *b, bv.len(), 1);
                for i in 0..bv.len() {
                    slot.data_mut()[i] += g * (av[i] / (na * nb) - s * bv[i] / (nb * nb));
                }
            }
            Op::ContrastTerm { pos, negs, inv_tau } => {
                if negs.is_empty() {
                    return;
                }
                let g = gy.item();
                let p = self.value(*pos).item();
                let zs: Vec<f64> = negs
                    .iter()
                    .map(|&n| (self.value(n).item() - p) * inv_tau)
                    .collect();
                let m = zs.iter().cloned().fold(0.0f64, f64::max);
                let denom = (-m).exp() + zs.iter().map(|z| (z - m).exp()).sum::<f64>();
                let mut total = 0.0;
                for (&n, &z) in negs.iter().zip(&zs) {
                    let pn = (z - m).exp() / denom;
                    grad_slot(grads, n, 1, 1).data_mut()[0] += g * pn * inv_tau;
                    total += pn;
                }
                grad_slot(grads, *pos, 1, 1).data_mut()[0] -= g * total * inv_tau;
            }
            Op::SigmoidBce { logit, target } => {
                let g = gy.item();
                let s = sigmoid(self.value(*logit).item());
                grad_slot(grads, *logit, 1, 1).data_mut()[0] += g * (s - target);
            }
            Op::SumScaled { terms, coeffs } => {
                let g = gy.item();
                for (&t, &c) in terms.iter().zip(coeffs) {
                    grad_slot(grads, t, 1, 1).data_mut()[0] += g * c;
                }
            }
        }
    }
}

/// Per-node gradients from one backward pass.
pub struct Gradients {
    grads: Vec<Option<Tensor2>>,
}

impl Gradients {
    pub fn get(&self, id: VarId) -> Option<&Tensor2> {
        self.grads[id.0].as_ref()
    }

    /// Gradient for `id`, densified to the given shape when absent.
    pub fn dense(&self, id: VarId, rows: usize, cols: usize) -> Tensor2 {
        match &self.grads[id.0] {
            Some(t) => t.clone(),
            None => Tensor2::zeros(rows, cols),
        }
    }
}

fn grad_slot(grads: &mut [Option<Tensor2>], id: VarId, rows: usize, cols: usize) -> &mut Tensor2 {
    grads[id.0].get_or_insert_with(|| Tensor2::zeros(rows, cols))
}

fn add_vec(slot: &mut Tensor2, src: &[f64]) {
    for (d, &s) in slot.data_mut().iter_mut().zip(src) {
        *d += s;
    }
}

fn axpy(slot: &mut Tensor2, a: f64, x: &[f64]) {
    for (d, &v) in slot.data_mut().iter_mut().zip(x) {
        *d += a * v;
    }
}

pub(crate) fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

pub(crate) fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

/// Per-head attention parameters staged on a tape: `wq/wk/wv[h]` are
/// `(dim/heads) x dim` matrices, `wo` is `dim x dim`.
pub struct AttentionVars {
    pub wq: Vec<VarId>,
    pub wk: Vec<VarId>,
    pub wv: Vec<VarId>,
    pub wo: VarId,
}

/// Scaled dot-product attention with a single attention query over a
/// short key=value sequence. Scores are scaled by 1/sqrt(per-head dim),
/// head outputs concatenated and mapped through `wo`.
pub fn multi_head_attention(
    tape: &mut Tape,
    query: VarId,
    kv: &[VarId],
    vars: &AttentionVars,
) -> Result<VarId> {
    if kv.is_empty() {
        return Err(Error::Invalid("attention requires a non-empty key/value list".into()));
    }
    let heads = vars.wq.len();
    if heads == 0 || vars.wk.len() != heads || vars.wv.len() != heads {
        return Err(Error::ShapeMismatch(
            "attention: per-head parameter lists must be equal and non-empty".into(),
        ));
    }
    let mut head_outputs = Vec::with_capacity(heads);
    for h in 0..heads {
        let qh = tape.matvec(vars.wq[h], query)?;
        let per_head = tape.value(qh).rows();
        let scale = 1.0 / (per_head as f64).sqrt();
        let mut scores = Vec::with_capacity(kv.len());
        let mut values = Vec::with_capacity(kv.len());
        for &item in kv {
            let key = tape.matvec(vars.wk[h], item)?;
            let val = tape.matvec(vars.wv[h], item)?;
            let raw = tape.dot(qh, key)?;
            scores.push(tape.scale(raw, scale));
            values.push(val);
        }
        let stacked = tape.stack(&scores)?;
        let attn = tape.softmax(stacked)?;
        head_outputs.push(tape.weighted_sum(attn, &values)?);
    }
    let merged = tape.concat(&head_outputs)?;
    tape.matvec(vars.wo, merged)
}
