//! The router forward pass.
//!
//! Each candidate model owns two learned rows: a knowledge embedding
//! (what it can answer from its weights alone) and a capability
//! embedding (how well it exploits retrieved evidence). A query is
//! projected into the same space by a two-layer head over its frozen
//! base embedding; the document and the (document, query) interaction
//! get their own projections. With a document present, the capability
//! row attends over the document and interaction vectors and the
//! resulting shift is added to the knowledge row; routing picks the
//! model whose (shifted) knowledge representation is most similar to
//! the query. Without a document the knowledge rows are compared
//! directly and the document-side parameters are inert.
//!
//! All forward ops are recorded on a [`Tape`], so the same code path
//! serves inference (values only) and training (values + gradients).

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::checkpoint::{load_checkpoint, save_checkpoint, CheckpointHeader, CHECKPOINT_VERSION};
use crate::diffmath::{multi_head_attention, AttentionVars, Tape, Tensor2, VarId};
use crate::embed::{EmbeddingProvider, TextChannel};
use crate::error::{Error, Result};
use crate::rng::DetRng;

/// Two affine layers with a tanh between: the trainable head applied on
/// top of a frozen base embedding.
#[derive(Clone, Debug, PartialEq)]
pub struct ProjectionParams {
    pub w1: Tensor2,
    pub b1: Tensor2,
    pub w2: Tensor2,
    pub b2: Tensor2,
}

/// Per-head attention weights; `wq/wk/wv[h]` are `(dim/heads) x dim`,
/// `wo` is `dim x dim`.
#[derive(Clone, Debug, PartialEq)]
pub struct AttentionParams {
    pub wq: Vec<Tensor2>,
    pub wk: Vec<Tensor2>,
    pub wv: Vec<Tensor2>,
    pub wo: Tensor2,
}

/// All trainable router state.
///
/// Flattening order (also the checkpoint blob order): knowledge table,
/// capability table, shared projection (w1, b1, w2, b2), cross
/// projection (w1, b1, w2, b2), attention (wq per head, wk per head,
/// wv per head, wo).
#[derive(Clone, Debug, PartialEq)]
pub struct RouterParams {
    pub n_models: usize,
    pub dim: usize,
    pub heads: usize,
    pub dim_base: usize,
    pub seed: u64,
    /// One row per model: parametric-knowledge embedding.
    pub knowledge: Tensor2,
    /// One row per model: capability-to-use-documents embedding.
    pub capability: Tensor2,
    /// Shared head for query and document texts.
    pub shared_proj: ProjectionParams,
    /// Head for the (document, query) interaction embedding.
    pub cross_proj: ProjectionParams,
    pub attn: AttentionParams,
    /// Ablation: when false, attention sees only the document vector.
    pub use_cross: bool,
    /// Ablation: when false, the knowledge row doubles as the attention
    /// query and the capability table is inert.
    pub use_capability: bool,
}

/// Uniform init in [-1/sqrt(dim), 1/sqrt(dim)] for tables and weights;
/// zero biases. Deterministic per seed.
pub fn init_params(
    n_models: usize,
    dim: usize,
    heads: usize,
    dim_base: usize,
    seed: u64,
) -> Result<RouterParams> {
    if n_models == 0 {
        return Err(Error::Invalid("need at least one model".into()));
    }
    if dim == 0 || dim_base == 0 || heads == 0 {
        return Err(Error::Invalid("dim, dim_base and heads must be positive".into()));
    }
    if dim % heads != 0 {
        return Err(Error::Invalid(format!(
            "dim {dim} must be divisible by heads {heads}"
        )));
    }
    let bound = 1.0 / (dim as f64).sqrt();
    let mut rng = DetRng::seed_from_u64(seed);
    let mut draw = |rows: usize, cols: usize| -> Tensor2 {
        let data = (0..rows * cols)
            .map(|_| rng.uniform_in(-bound, bound))
            .collect();
        Tensor2::from_vec(rows, cols, data).expect("init shapes are consistent")
    };

    let knowledge = draw(n_models, dim);
    let capability = draw(n_models, dim);
    let proj = |rng_draw: &mut dyn FnMut(usize, usize) -> Tensor2| ProjectionParams {
        w1: rng_draw(dim, dim_base),
        b1: Tensor2::zeros(dim, 1),
        w2: rng_draw(dim, dim),
        b2: Tensor2::zeros(dim, 1),
    };
    let shared_proj = proj(&mut draw);
    let cross_proj = proj(&mut draw);
    let per_head = dim / heads;
    let attn = AttentionParams {
        wq: (0..heads).map(|_| draw(per_head, dim)).collect(),
        wk: (0..heads).map(|_| draw(per_head, dim)).collect(),
        wv: (0..heads).map(|_| draw(per_head, dim)).collect(),
        wo: draw(dim, dim),
    };

    Ok(RouterParams {
        n_models,
        dim,
        heads,
        dim_base,
        seed,
        knowledge,
        capability,
        shared_proj,
        cross_proj,
        attn,
        use_cross: true,
        use_capability: true,
    })
}

impl RouterParams {
    fn tensors(&self) -> Vec<&Tensor2> {
        let mut out = vec![
            &self.knowledge,
            &self.capability,
            &self.shared_proj.w1,
            &self.shared_proj.b1,
            &self.shared_proj.w2,
            &self.shared_proj.b2,
            &self.cross_proj.w1,
            &self.cross_proj.b1,
            &self.cross_proj.w2,
            &self.cross_proj.b2,
        ];
        out.extend(self.attn.wq.iter());
        out.extend(self.attn.wk.iter());
        out.extend(self.attn.wv.iter());
        out.push(&self.attn.wo);
        out
    }

    fn tensors_mut(&mut self) -> Vec<&mut Tensor2> {
        let mut out: Vec<&mut Tensor2> = vec![
            &mut self.knowledge,
            &mut self.capability,
            &mut self.shared_proj.w1,
            &mut self.shared_proj.b1,
            &mut self.shared_proj.w2,
            &mut self.shared_proj.b2,
            &mut self.cross_proj.w1,
            &mut self.cross_proj.b1,
            &mut self.cross_proj.w2,
            &mut self.cross_proj.b2,
        ];
        out.extend(self.attn.wq.iter_mut());
        out.extend(self.attn.wk.iter_mut());
        out.extend(self.attn.wv.iter_mut());
        out.push(&mut self.attn.wo);
        out
    }

    pub fn num_params(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }

    /// All parameters as one flat vector in declaration order.
    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.num_params());
        for t in self.tensors() {
            out.extend_from_slice(t.data());
        }
        out
    }

    /// Writes a flat vector (in declaration order) back into the
    /// structured parameters.
    pub fn assign_flat(&mut self, flat: &[f64]) -> Result<()> {
        if flat.len() != self.num_params() {
            return Err(Error::ShapeMismatch(format!(
                "expected {} parameters, got {}",
                self.num_params(),
                flat.len()
            )));
        }
        let mut off = 0;
        for t in self.tensors_mut() {
            let n = t.len();
            t.data_mut().copy_from_slice(&flat[off..off + n]);
            off += n;
        }
        Ok(())
    }

    /// Inserts every parameter tensor as a tape leaf (declaration
    /// order) and pre-extracts per-model rows.
    pub fn stage(&self, tape: &mut Tape) -> StagedParams {
        let knowledge_tbl = tape.leaf(self.knowledge.clone());
        let capability_tbl = tape.leaf(self.capability.clone());
        let stage_proj = |tape: &mut Tape, p: &ProjectionParams| StagedProjection {
            w1: tape.leaf(p.w1.clone()),
            b1: tape.leaf(p.b1.clone()),
            w2: tape.leaf(p.w2.clone()),
            b2: tape.leaf(p.b2.clone()),
        };
        let shared = stage_proj(tape, &self.shared_proj);
        let cross = stage_proj(tape, &self.cross_proj);
        let attn = AttentionVars {
            wq: self.attn.wq.iter().map(|t| tape.leaf(t.clone())).collect(),
            wk: self.attn.wk.iter().map(|t| tape.leaf(t.clone())).collect(),
            wv: self.attn.wv.iter().map(|t| tape.leaf(t.clone())).collect(),
            wo: tape.leaf(self.attn.wo.clone()),
        };

        let mut slots = vec![
            knowledge_tbl,
            capability_tbl,
            shared.w1,
            shared.b1,
            shared.w2,
            shared.b2,
            cross.w1,
            cross.b1,
            cross.w2,
            cross.b2,
        ];
        slots.extend(attn.wq.iter().copied());
        slots.extend(attn.wk.iter().copied());
        slots.extend(attn.wv.iter().copied());
        slots.push(attn.wo);

        let knowledge_rows = (0..self.n_models)
            .map(|i| tape.row(knowledge_tbl, i).expect("row in range"))
            .collect();
        let capability_rows = (0..self.n_models)
            .map(|i| tape.row(capability_tbl, i).expect("row in range"))
            .collect();

        StagedParams {
            n_models: self.n_models,
            slots,
            knowledge_rows,
            capability_rows,
            shared,
            cross,
            attn,
            use_cross: self.use_cross,
            use_capability: self.use_capability,
        }
    }

    /// Gradient of a tape loss w.r.t. every parameter, flattened in
    /// declaration order (zeros where a tensor was untouched).
    pub fn flat_gradient(
        &self,
        tape: &Tape,
        staged: &StagedParams,
        grads: &crate::diffmath::Gradients,
    ) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.num_params());
        for &slot in &staged.slots {
            let v = tape.value(slot);
            out.extend_from_slice(grads.dense(slot, v.rows(), v.cols()).data());
        }
        out
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let header = CheckpointHeader {
            kind: "router".into(),
            version: CHECKPOINT_VERSION,
            n: self.n_models,
            dim: self.dim,
            dim_base: self.dim_base,
            seed: self.seed,
            heads: Some(self.heads),
            rank: None,
            use_cross: Some(self.use_cross),
            use_capability: Some(self.use_capability),
        };
        save_checkpoint(path, &header, &self.flatten())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let (header, blob) = load_checkpoint(path)?;
        if header.kind != "router" {
            return Err(Error::Invalid(format!(
                "checkpoint kind {:?} is not a router checkpoint",
                header.kind
            )));
        }
        if header.version != CHECKPOINT_VERSION {
            return Err(Error::Invalid(format!(
                "unsupported checkpoint version {}",
                header.version
            )));
        }
        let heads = header
            .heads
            .ok_or_else(|| Error::Invalid("router checkpoint missing heads".into()))?;
        let mut params = init_params(header.n, header.dim, heads, header.dim_base, header.seed)?;
        params.use_cross = header.use_cross.unwrap_or(true);
        params.use_capability = header.use_capability.unwrap_or(true);
        params.assign_flat(&blob)?;
        if !blob.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("checkpoint contains non-finite values".into()));
        }
        Ok(params)
    }

    /// Convenience wrapper: similarity scores on a fresh tape. With a
    /// document, scores compare the query against each model's shifted
    /// knowledge representation; without one, against the knowledge
    /// rows alone.
    pub fn score_models(
        &self,
        provider: &EmbeddingProvider,
        query_text: &str,
        doc_text: Option<&str>,
    ) -> Result<Vec<f64>> {
        let mut tape = Tape::new();
        let staged = self.stage(&mut tape);
        let fwd = forward_pass(&mut tape, &staged, provider, query_text, doc_text)?;
        let sims = fwd.routing_sims();
        Ok(sims.iter().map(|&id| tape.value(id).item()).collect())
    }

    /// Scores then routes, tagging the decision with the setting used.
    pub fn decide(
        &self,
        provider: &EmbeddingProvider,
        query_text: &str,
        doc_text: Option<&str>,
    ) -> Result<RoutingDecision> {
        let scores = self.score_models(provider, query_text, doc_text)?;
        let setting = if doc_text.is_some() {
            Setting::Rag
        } else {
            Setting::NoRag
        };
        route(&scores, setting)
    }
}

/// Projection head leaves on a tape.
#[derive(Clone, Copy, Debug)]
pub struct StagedProjection {
    pub w1: VarId,
    pub b1: VarId,
    pub w2: VarId,
    pub b2: VarId,
}

/// Router parameters staged as tape leaves.
pub struct StagedParams {
    pub n_models: usize,
    /// Leaves in declaration order; used to flatten gradients.
    pub slots: Vec<VarId>,
    pub knowledge_rows: Vec<VarId>,
    pub capability_rows: Vec<VarId>,
    pub shared: StagedProjection,
    pub cross: StagedProjection,
    pub attn: AttentionVars,
    pub use_cross: bool,
    pub use_capability: bool,
}

fn apply_projection(tape: &mut Tape, proj: &StagedProjection, x: VarId) -> Result<VarId> {
    let hidden = tape.affine(proj.w1, x, proj.b1)?;
    let activated = tape.tanh(hidden);
    tape.affine(proj.w2, activated, proj.b2)
}

/// Query text -> D-vector through the shared head.
pub fn encode_query(
    tape: &mut Tape,
    staged: &StagedParams,
    provider: &EmbeddingProvider,
    query_text: &str,
) -> Result<VarId> {
    let base = provider.text_embedding(query_text, TextChannel::Query)?;
    let x = tape.leaf(Tensor2::vector(base.into_values()));
    apply_projection(tape, &staged.shared, x)
}

/// Document text -> D-vector through the same shared head.
pub fn encode_document(
    tape: &mut Tape,
    staged: &StagedParams,
    provider: &EmbeddingProvider,
    doc_text: &str,
) -> Result<VarId> {
    let base = provider.text_embedding(doc_text, TextChannel::Document)?;
    let x = tape.leaf(Tensor2::vector(base.into_values()));
    apply_projection(tape, &staged.shared, x)
}

/// (document, query) interaction -> D-vector through the cross head.
pub fn encode_cross(
    tape: &mut Tape,
    staged: &StagedParams,
    provider: &EmbeddingProvider,
    doc_text: &str,
    query_text: &str,
) -> Result<VarId> {
    let base = provider.cross_embedding(doc_text, query_text)?;
    let x = tape.leaf(Tensor2::vector(base.into_values()));
    apply_projection(tape, &staged.cross, x)
}

/// Document-induced knowledge shift: the capability vector attends over
/// the document and interaction vectors.
pub fn fuse(
    tape: &mut Tape,
    staged: &StagedParams,
    attn_query: VarId,
    v_d: VarId,
    v_c: Option<VarId>,
) -> Result<VarId> {
    let kv: Vec<VarId> = match v_c {
        Some(c) => vec![v_d, c],
        None => vec![v_d],
    };
    multi_head_attention(tape, attn_query, &kv, &staged.attn)
}

/// Shifted knowledge representation of one model given the encoded
/// document and interaction vectors.
pub fn rag_representation(
    tape: &mut Tape,
    staged: &StagedParams,
    model_id: usize,
    v_d: VarId,
    v_c: Option<VarId>,
) -> Result<VarId> {
    if model_id >= staged.n_models {
        return Err(Error::Invalid(format!(
            "model_id {model_id} out of range for {} models",
            staged.n_models
        )));
    }
    let attn_query = if staged.use_capability {
        staged.capability_rows[model_id]
    } else {
        staged.knowledge_rows[model_id]
    };
    let shift = fuse(tape, staged, attn_query, v_d, v_c)?;
    tape.add(staged.knowledge_rows[model_id], shift)
}

/// Everything one query's forward pass produces. `knowledge_sims` are
/// always present; the document-side nodes exist only when a document
/// was supplied.
pub struct ForwardPass {
    pub v_q: VarId,
    pub v_d: Option<VarId>,
    pub v_c: Option<VarId>,
    pub knowledge_sims: Vec<VarId>,
    pub rag_reps: Option<Vec<VarId>>,
    pub rag_sims: Option<Vec<VarId>>,
}

impl ForwardPass {
    /// Similarities the routing decision is based on: document-aware
    /// when a document was given, knowledge-only otherwise.
    pub fn routing_sims(&self) -> &[VarId] {
        match &self.rag_sims {
            Some(s) => s,
            None => &self.knowledge_sims,
        }
    }
}

/// Runs the full forward pass for one query on the given tape.
pub fn forward_pass(
    tape: &mut Tape,
    staged: &StagedParams,
    provider: &EmbeddingProvider,
    query_text: &str,
    doc_text: Option<&str>,
) -> Result<ForwardPass> {
    let v_q = encode_query(tape, staged, provider, query_text)?;

    let mut knowledge_sims = Vec::with_capacity(staged.n_models);
    for i in 0..staged.n_models {
        knowledge_sims.push(tape.cosine_sim(v_q, staged.knowledge_rows[i])?);
    }

    let (mut v_d, mut v_c, mut rag_reps, mut rag_sims) = (None, None, None, None);
    if let Some(doc) = doc_text {
        let d = encode_document(tape, staged, provider, doc)?;
        let c = if staged.use_cross {
            Some(encode_cross(tape, staged, provider, doc, query_text)?)
        } else {
            None
        };
        let mut reps = Vec::with_capacity(staged.n_models);
        let mut sims = Vec::with_capacity(staged.n_models);
        for i in 0..staged.n_models {
            let rep = rag_representation(tape, staged, i, d, c)?;
            sims.push(tape.cosine_sim(v_q, rep)?);
            reps.push(rep);
        }
        v_d = Some(d);
        v_c = c;
        rag_reps = Some(reps);
        rag_sims = Some(sims);
    }

    Ok(ForwardPass {
        v_q,
        v_d,
        v_c,
        knowledge_sims,
        rag_reps,
        rag_sims,
    })
}

/// Which labels a decision was made against.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Setting {
    NoRag,
    Rag,
}

/// Per-model scores plus the selected model.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RoutingDecision {
    pub scores: Vec<f64>,
    pub chosen: usize,
    pub setting: Setting,
}

/// Argmax with ties broken toward the lowest index (the most efficient
/// model in registry order).
pub fn route(scores: &[f64], setting: Setting) -> Result<RoutingDecision> {
    if scores.is_empty() {
        return Err(Error::Invalid("cannot route over zero scores".into()));
    }
    if !scores.iter().all(|s| s.is_finite()) {
        return Err(Error::NonFinite("routing scores must be finite".into()));
    }
    let mut chosen = 0;
    for (i, &s) in scores.iter().enumerate() {
        if s > scores[chosen] {
            chosen = i;
        }
    }
    Ok(RoutingDecision {
        scores: scores.to_vec(),
        chosen,
        setting,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hash_provider(dim: usize) -> EmbeddingProvider {
        EmbeddingProvider::feature_hash(dim).unwrap()
    }

    #[test]
    fn init_is_deterministic_per_seed() {
        let a = init_params(3, 8, 2, 16, 7).unwrap();
        let b = init_params(3, 8, 2, 16, 7).unwrap();
        assert_eq!(a, b);
        let c = init_params(3, 8, 2, 16, 8).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn init_shapes_and_bounds() {
        let p = init_params(3, 8, 2, 16, 1).unwrap();
        assert_eq!(p.knowledge.rows(), 3);
        assert_eq!(p.knowledge.cols(), 8);
        assert_eq!(p.attn.wq.len(), 2);
        assert_eq!(p.attn.wq[0].rows(), 4);
        let bound = 1.0 / 8f64.sqrt();
        for t in [&p.knowledge, &p.capability, &p.shared_proj.w1, &p.attn.wo] {
            for v in t.data() {
                assert!(v.abs() <= bound, "{v} exceeds {bound}");
            }
        }
        for v in p.shared_proj.b1.data() {
            assert_eq!(*v, 0.0);
        }
    }

    #[test]
    fn init_rejects_indivisible_heads() {
        assert!(init_params(2, 10, 3, 4, 0).is_err());
        assert!(init_params(0, 8, 2, 4, 0).is_err());
    }

    #[test]
    fn query_and_document_encoders_are_identical() {
        let params = init_params(2, 8, 2, 16, 3).unwrap();
        let provider = hash_provider(16);
        let mut tape = Tape::new();
        let staged = params.stage(&mut tape);
        let q = encode_query(&mut tape, &staged, &provider, "same text here").unwrap();
        let d = encode_document(&mut tape, &staged, &provider, "same text here").unwrap();
        assert_eq!(tape.value(q).data(), tape.value(d).data());
    }

    #[test]
    fn projection_matches_hand_computed_trace() {
        // dim_base = dim = 4, hand-set weights, single-token text so the
        // base embedding is a signed one-hot.
        let provider = hash_provider(4);
        let base = provider
            .text_embedding("trace", TextChannel::Query)
            .unwrap()
            .into_values();

        let mut params = init_params(1, 4, 1, 4, 0).unwrap();
        let w1 = Tensor2::from_vec(
            4,
            4,
            vec![
                0.5, 0.0, 0.0, 0.0, //
                0.0, -0.3, 0.0, 0.0, //
                0.1, 0.0, 0.7, 0.0, //
                0.0, 0.0, 0.0, 1.0,
            ],
        )
        .unwrap();
        let b1 = Tensor2::vector(vec![0.1, -0.2, 0.0, 0.05]);
        let w2 = Tensor2::from_vec(
            4,
            4,
            vec![
                1.0, 1.0, 0.0, 0.0, //
                0.0, 2.0, 0.0, 0.0, //
                0.0, 0.0, -1.0, 0.0, //
                0.5, 0.0, 0.0, 0.25,
            ],
        )
        .unwrap();
        let b2 = Tensor2::vector(vec![0.0, 0.1, 0.2, -0.3]);
        params.shared_proj = ProjectionParams {
            w1: w1.clone(),
            b1: b1.clone(),
            w2: w2.clone(),
            b2: b2.clone(),
        };

        let mut tape = Tape::new();
        let staged = params.stage(&mut tape);
        let got = encode_query(&mut tape, &staged, &provider, "trace").unwrap();

        // Independent scalar trace.
        let mut hidden = [0.0f64; 4];
        for r in 0..4 {
            for c in 0..4 {
                hidden[r] += w1.get(r, c) * base[c];
            }
            hidden[r] = (hidden[r] + b1.data()[r]).tanh();
        }
        let mut expected = [0.0f64; 4];
        for r in 0..4 {
            for c in 0..4 {
                expected[r] += w2.get(r, c) * hidden[c];
            }
            expected[r] += b2.data()[r];
        }
        for (a, b) in tape.value(got).data().iter().zip(&expected) {
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
    }

    #[test]
    fn cross_encoding_is_order_sensitive_and_deterministic() {
        let params = init_params(2, 8, 2, 16, 5).unwrap();
        let provider = hash_provider(16);
        let mut tape = Tape::new();
        let staged = params.stage(&mut tape);
        let dq = encode_cross(&mut tape, &staged, &provider, "doc words", "query words").unwrap();
        let qd = encode_cross(&mut tape, &staged, &provider, "query words", "doc words").unwrap();
        let dq2 = encode_cross(&mut tape, &staged, &provider, "doc words", "query words").unwrap();
        assert_ne!(tape.value(dq).data(), tape.value(qd).data());
        assert_eq!(tape.value(dq).data(), tape.value(dq2).data());
    }

    #[test]
    fn zero_attention_output_leaves_knowledge_unshifted() {
        let mut params = init_params(2, 8, 2, 16, 9).unwrap();
        params.attn.wo = Tensor2::zeros(8, 8);
        let provider = hash_provider(16);
        let mut tape = Tape::new();
        let staged = params.stage(&mut tape);
        let d = encode_document(&mut tape, &staged, &provider, "some doc").unwrap();
        let c = encode_cross(&mut tape, &staged, &provider, "some doc", "a query").unwrap();
        let rep = rag_representation(&mut tape, &staged, 1, d, Some(c)).unwrap();
        assert_eq!(tape.value(rep).data(), params.knowledge.row(1));
    }

    #[test]
    fn shifted_representation_is_knowledge_plus_shift() {
        let params = init_params(3, 8, 2, 16, 11).unwrap();
        let provider = hash_provider(16);
        let mut tape = Tape::new();
        let staged = params.stage(&mut tape);
        let d = encode_document(&mut tape, &staged, &provider, "context").unwrap();
        let c = encode_cross(&mut tape, &staged, &provider, "context", "question").unwrap();
        let shift = fuse(&mut tape, &staged, staged.capability_rows[2], d, Some(c)).unwrap();
        let rep = rag_representation(&mut tape, &staged, 2, d, Some(c)).unwrap();
        for i in 0..8 {
            let expected = params.knowledge.get(2, i) + tape.value(shift).data()[i];
            assert!((tape.value(rep).data()[i] - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn rag_representation_rejects_bad_model_id() {
        let params = init_params(2, 8, 2, 16, 0).unwrap();
        let provider = hash_provider(16);
        let mut tape = Tape::new();
        let staged = params.stage(&mut tape);
        let d = encode_document(&mut tape, &staged, &provider, "doc").unwrap();
        assert!(rag_representation(&mut tape, &staged, 2, d, None).is_err());
    }

    #[test]
    fn single_model_score_is_a_valid_cosine() {
        let params = init_params(1, 8, 2, 16, 13).unwrap();
        let provider = hash_provider(16);
        let scores = params
            .score_models(&provider, "what is this", Some("the context"))
            .unwrap();
        assert_eq!(scores.len(), 1);
        assert!(scores[0] >= -1.0 && scores[0] <= 1.0);
    }

    #[test]
    fn no_document_scores_ignore_document_parameters() {
        let params = init_params(3, 8, 2, 16, 17).unwrap();
        let provider = hash_provider(16);
        let base = params.score_models(&provider, "plain query", None).unwrap();

        let mut perturbed = params.clone();
        for t in [
            &mut perturbed.capability,
            &mut perturbed.cross_proj.w1,
            &mut perturbed.attn.wo,
        ] {
            for v in t.data_mut() {
                *v += 0.37;
            }
        }
        for i in 0..perturbed.heads {
            for v in perturbed.attn.wq[i].data_mut() {
                *v -= 0.11;
            }
        }
        let same = perturbed.score_models(&provider, "plain query", None).unwrap();
        assert_eq!(base, same);
    }

    #[test]
    fn two_model_scores_match_independent_cosines() {
        let mut params = init_params(2, 4, 1, 4, 19).unwrap();
        params.knowledge = Tensor2::from_vec(
            2,
            4,
            vec![0.9, -0.1, 0.3, 0.0, -0.4, 0.8, 0.2, 0.6],
        )
        .unwrap();
        let provider = hash_provider(4);

        // v_q from the (already hand-trace-verified) shared projection.
        let mut tape = Tape::new();
        let staged = params.stage(&mut tape);
        let v_q = encode_query(&mut tape, &staged, &provider, "q tokens").unwrap();
        let qv = tape.value(v_q).data().to_vec();

        let cos = |a: &[f64], b: &[f64]| {
            let d: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
            let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
            let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
            d / (na * nb)
        };
        let scores = params.score_models(&provider, "q tokens", None).unwrap();
        assert!((scores[0] - cos(&qv, params.knowledge.row(0))).abs() < 1e-12);
        assert!((scores[1] - cos(&qv, params.knowledge.row(1))).abs() < 1e-12);
    }

    #[test]
    fn forward_is_pure() {
        let params = init_params(3, 8, 2, 16, 23).unwrap();
        let provider = hash_provider(16);
        let a = params
            .score_models(&provider, "repeatable", Some("doc text"))
            .unwrap();
        let b = params
            .score_models(&provider, "repeatable", Some("doc text"))
            .unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn route_picks_highest_score() {
        let d = route(&[0.1, 0.9, 0.3], Setting::Rag).unwrap();
        assert_eq!(d.chosen, 1);
    }

    #[test]
    fn route_breaks_ties_to_lowest_index() {
        let d = route(&[0.5, 0.5], Setting::NoRag).unwrap();
        assert_eq!(d.chosen, 0);
    }

    #[test]
    fn route_matches_linear_scan_oracle() {
        let mut rng = DetRng::seed_from_u64(29);
        for _ in 0..100 {
            let n = 1 + rng.below(10);
            let scores: Vec<f64> = (0..n).map(|_| rng.uniform_in(-1.0, 1.0)).collect();
            let d = route(&scores, Setting::Rag).unwrap();
            let mut best = 0;
            for i in 0..n {
                if scores[i] > scores[best] {
                    best = i;
                }
            }
            assert_eq!(d.chosen, best);
        }
    }

    #[test]
    fn route_is_invariant_to_positive_affine_rescaling() {
        let mut rng = DetRng::seed_from_u64(31);
        for _ in 0..50 {
            let scores: Vec<f64> = (0..6).map(|_| rng.uniform_in(-1.0, 1.0)).collect();
            let c = rng.uniform_in(0.1, 5.0);
            let shift = rng.uniform_in(-2.0, 2.0);
            let rescaled: Vec<f64> = scores.iter().map(|s| c * s + shift).collect();
            assert_eq!(
                route(&scores, Setting::Rag).unwrap().chosen,
                route(&rescaled, Setting::Rag).unwrap().chosen
            );
        }
    }

    #[test]
    fn route_rejects_empty_and_non_finite() {
        assert!(route(&[], Setting::Rag).is_err());
        assert!(route(&[0.1, f64::NAN], Setting::Rag).is_err());
    }

    #[test]
    fn checkpoint_round_trip_is_bit_exact() {
        let params = init_params(3, 8, 2, 16, 37).unwrap();
        let f = tempfile::NamedTempFile::new().unwrap();
        params.save(f.path()).unwrap();
        let back = RouterParams::load(f.path()).unwrap();
        assert_eq!(back, params);
        let flat_a = params.flatten();
        let flat_b = back.flatten();
        for (a, b) in flat_a.iter().zip(&flat_b) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn flatten_assign_round_trip() {
        let mut params = init_params(2, 8, 4, 8, 41).unwrap();
        let flat = params.flatten();
        assert_eq!(flat.len(), params.num_params());
        let mut doubled = flat.clone();
        for v in &mut doubled {
            *v *= 2.0;
        }
        params.assign_flat(&doubled).unwrap();
        assert_eq!(params.flatten(), doubled);
    }

    use crate::rng::DetRng;
}
