//! Router optimization.
//!
//! For each training query the forward pass yields 2N representations:
//! every model's knowledge row (no-document setting) and its shifted
//! representation (document setting). Labels sort those into positive
//! and negative sets; with the query embedding as the anchor, each
//! positive contributes one softmax-style contrastive term whose
//! denominator holds that positive plus every negative. Because both
//! settings pool into one pair of sets, cross-setting and intra-setting
//! contrasts arise together; ablation scopes restrict which negatives a
//! positive may see. A sigmoid binary cross-entropy term over all 2N
//! similarities sharpens per-model discrimination, weighted by lambda.
//!
//! The loop is deterministic end to end: label resolution, epoch
//! shuffles, and the fixed-shape parallel gradient reduction all derive
//! from the run seed.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{Outcome, ResponseDataset, ResponseRecord};
use crate::diffmath::{OptConfig, OptState, Tape, VarId};
use crate::embed::EmbeddingProvider;
use crate::error::{Error, Result};
use crate::model::{forward_pass, ForwardPass, RouterParams, Setting, StagedParams};
use crate::rng::DetRng;

/// Sub-batch width for the parallel gradient reduction. Fixed (not
/// thread-count dependent) so summation order is bit-stable.
const REDUCE_CHUNK: usize = 8;

/// How raw outcome values become {0,1} training labels.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelMode {
    /// Labels must already be exactly 0 or 1.
    Binary,
    /// Continuous scores in [0,1] are sampled to {0,1} with probability
    /// equal to the score, independently per setting.
    Probabilistic,
}

/// Which negatives each positive is contrasted against.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ContrastScope {
    /// Pooled sets: every positive sees every negative.
    Full,
    /// Only negatives from the *other* setting.
    CscOnly,
    /// Only negatives from the *same* setting.
    IscOnly,
    /// Contrastive term disabled (classification loss only).
    Off,
}

/// Training hyperparameters.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct TrainConfig {
    pub tau: f64,
    pub lambda: f64,
    pub lr: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
    pub label_mode: LabelMode,
    pub contrast: ContrastScope,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weight_decay: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            tau: 0.2,
            lambda: 2.0,
            lr: 5e-5,
            batch_size: 64,
            epochs: 10,
            seed: 0,
            label_mode: LabelMode::Binary,
            contrast: ContrastScope::Full,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            weight_decay: 0.01,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tau > 0.0) {
            return Err(Error::Invalid(format!("tau must be > 0, got {}", self.tau)));
        }
        if self.lambda < 0.0 {
            return Err(Error::Invalid(format!(
                "lambda must be >= 0, got {}",
                self.lambda
            )));
        }
        if self.batch_size == 0 {
            return Err(Error::Invalid("batch_size must be >= 1".into()));
        }
        Ok(())
    }

    fn opt_config(&self) -> OptConfig {
        OptConfig {
            lr: self.lr,
            beta1: self.beta1,
            beta2: self.beta2,
            eps: self.eps,
            weight_decay: self.weight_decay,
        }
    }
}

/// Resolves one outcome pair to {0,1} labels (no-document, document).
pub fn resolve_labels(
    outcome: &Outcome,
    mode: LabelMode,
    rng: &mut DetRng,
) -> Result<(u8, u8)> {
    outcome.validate()?;
    match mode {
        LabelMode::Binary => {
            if !outcome.is_binary() {
                return Err(Error::Invalid(format!(
                    "binary label mode given fractional labels ({}, {})",
                    outcome.no_rag, outcome.rag
                )));
            }
            Ok((outcome.no_rag as u8, outcome.rag as u8))
        }
        LabelMode::Probabilistic => {
            let no_rag = rng.bernoulli(outcome.no_rag) as u8;
            let rag = rng.bernoulli(outcome.rag) as u8;
            Ok((no_rag, rag))
        }
    }
}

/// One representation in a contrast set, with its provenance.
#[derive(Clone, Copy, Debug)]
pub struct ContrastEntry {
    pub rep: VarId,
    pub model_id: usize,
    pub setting: Setting,
}

/// Positive and negative representation sets for one query.
#[derive(Clone, Debug, Default)]
pub struct ContrastSets {
    pub positives: Vec<ContrastEntry>,
    pub negatives: Vec<ContrastEntry>,
}

/// Sorts both settings' representations of every model into the pooled
/// positive/negative sets according to the resolved labels.
pub fn build_contrast_sets(
    fwd: &ForwardPass,
    staged: &StagedParams,
    labels: &[(u8, u8)],
) -> Result<ContrastSets> {
    let rag_reps = fwd.rag_reps.as_ref().ok_or_else(|| {
        Error::Invalid("contrast sets need a document-setting forward pass".into())
    })?;
    if labels.len() != staged.n_models {
        return Err(Error::ShapeMismatch(format!(
            "{} labels for {} models",
            labels.len(),
            staged.n_models
        )));
    }
    let mut sets = ContrastSets::default();
    for (i, &(y_no_rag, y_rag)) in labels.iter().enumerate() {
        let knowledge = ContrastEntry {
            rep: staged.knowledge_rows[i],
            model_id: i,
            setting: Setting::NoRag,
        };
        let shifted = ContrastEntry {
            rep: rag_reps[i],
            model_id: i,
            setting: Setting::Rag,
        };
        if y_no_rag == 1 {
            sets.positives.push(knowledge);
        } else {
            sets.negatives.push(knowledge);
        }
        if y_rag == 1 {
            sets.positives.push(shifted);
        } else {
            sets.negatives.push(shifted);
        }
    }
    Ok(sets)
}

pub(crate) fn negative_allowed(scope: ContrastScope, pos: Setting, neg: Setting) -> bool {
    match scope {
        ContrastScope::Full => true,
        ContrastScope::CscOnly => pos != neg,
        ContrastScope::IscOnly => pos == neg,
        ContrastScope::Off => false,
    }
}

/// Contrastive loss over the given sets: one term per positive, its
/// denominator holding that positive plus every admitted negative.
/// Empty positives — or a positive with no admitted negatives — add 0.
pub fn contrastive_loss(
    tape: &mut Tape,
    v_q: VarId,
    sets: &ContrastSets,
    tau: f64,
    scope: ContrastScope,
) -> Result<VarId> {
    if matches!(scope, ContrastScope::Off) {
        return tape.sum_scaled(&[], &[]);
    }
    let pos_sims: Vec<(VarId, Setting)> = sets
        .positives
        .iter()
        .map(|e| Ok((tape.cosine_sim(v_q, e.rep)?, e.setting)))
        .collect::<Result<_>>()?;
    let neg_sims: Vec<(VarId, Setting)> = sets
        .negatives
        .iter()
        .map(|e| Ok((tape.cosine_sim(v_q, e.rep)?, e.setting)))
        .collect::<Result<_>>()?;

    let mut terms = Vec::with_capacity(pos_sims.len());
    for &(pos, pos_setting) in &pos_sims {
        let negs: Vec<VarId> = neg_sims
            .iter()
            .filter(|(_, s)| negative_allowed(scope, pos_setting, *s))
            .map(|(id, _)| *id)
            .collect();
        terms.push(tape.contrast_term(pos, &negs, tau)?);
    }
    let coeffs = vec![1.0; terms.len()];
    tape.sum_scaled(&terms, &coeffs)
}

/// Binary cross-entropy of sigmoid(similarity) against each label.
pub fn classification_loss(
    tape: &mut Tape,
    v_q: VarId,
    labeled_reps: &[(VarId, u8)],
) -> Result<VarId> {
    if labeled_reps.is_empty() {
        return Err(Error::Invalid("classification loss over an empty list".into()));
    }
    let mut terms = Vec::with_capacity(labeled_reps.len());
    for &(rep, y) in labeled_reps {
        let sim = tape.cosine_sim(v_q, rep)?;
        terms.push(tape.sigmoid_bce(sim, y as f64)?);
    }
    let coeffs = vec![1.0; terms.len()];
    tape.sum_scaled(&terms, &coeffs)
}

/// The three loss nodes of one query.
pub struct LossParts {
    pub total: VarId,
    pub contrastive: VarId,
    pub classification: VarId,
}

/// Builds the full per-query objective (contrastive + lambda *
/// classification) on the tape and returns it with the forward pass.
pub fn total_loss(
    tape: &mut Tape,
    staged: &StagedParams,
    provider: &EmbeddingProvider,
    record: &ResponseRecord,
    labels: &[(u8, u8)],
    config: &TrainConfig,
) -> Result<(LossParts, ForwardPass)> {
    let doc = record.doc_text.as_deref().ok_or_else(|| {
        Error::Invalid(format!(
            "record {:?} has no doc_text; training requires documents",
            record.query_id
        ))
    })?;
    let fwd = forward_pass(tape, staged, provider, &record.query_text, Some(doc))?;
    let sets = build_contrast_sets(&fwd, staged, labels)?;
    let contrastive = contrastive_loss(tape, fwd.v_q, &sets, config.tau, config.contrast)?;

    let rag_reps = fwd.rag_reps.as_ref().expect("document forward pass");
    let mut labeled = Vec::with_capacity(2 * staged.n_models);
    for (i, &(y_no_rag, _)) in labels.iter().enumerate() {
        labeled.push((staged.knowledge_rows[i], y_no_rag));
    }
    for (i, &(_, y_rag)) in labels.iter().enumerate() {
        labeled.push((rag_reps[i], y_rag));
    }
    let classification = classification_loss(tape, fwd.v_q, &labeled)?;

    let total = tape.sum_scaled(&[contrastive, classification], &[1.0, config.lambda])?;
    Ok((
        LossParts {
            total,
            contrastive,
            classification,
        },
        fwd,
    ))
}

/// Per-epoch training telemetry.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TrainReport {
    /// Mean per-record total loss, one entry per epoch.
    pub epoch_loss: Vec<f64>,
    /// Routing accuracy on the training records (document setting,
    /// measured on the fly as each record is processed).
    pub epoch_accuracy: Vec<f64>,
    pub steps: u64,
    pub num_params: usize,
    pub records: usize,
}

struct RecordResult {
    grad: Vec<f64>,
    loss: f64,
    correct: f64,
}

fn process_record(
    params: &RouterParams,
    provider: &EmbeddingProvider,
    record: &ResponseRecord,
    labels: &[(u8, u8)],
    config: &TrainConfig,
) -> Result<RecordResult> {
    let mut tape = Tape::new();
    let staged = params.stage(&mut tape);
    let (parts, fwd) = total_loss(&mut tape, &staged, provider, record, labels, config)?;
    let loss = tape.value(parts.total).item();
    let grads = tape.backward(parts.total);
    let grad = params.flat_gradient(&tape, &staged, &grads);

    // Streaming train accuracy: the document-setting argmax at the time
    // this record was visited.
    let sims = fwd.rag_sims.as_ref().expect("document forward pass");
    let mut best = 0;
    for (i, &sim) in sims.iter().enumerate() {
        if tape.value(sim).item() > tape.value(sims[best]).item() {
            best = i;
        }
    }
    let correct = labels[best].1 as f64;

    Ok(RecordResult {
        grad,
        loss,
        correct,
    })
}

/// Runs the training recipe: deterministic epoch shuffles, mean loss
/// per batch, one optimizer step per batch. Returns the trained
/// parameters and per-epoch telemetry.
pub fn train(
    train_set: &ResponseDataset,
    provider: &EmbeddingProvider,
    mut params: RouterParams,
    config: &TrainConfig,
) -> Result<(RouterParams, TrainReport)> {
    config.validate()?;
    if train_set.records.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if train_set.registry.len() != params.n_models {
        return Err(Error::ShapeMismatch(format!(
            "registry has {} models, router built for {}",
            train_set.registry.len(),
            params.n_models
        )));
    }
    for r in &train_set.records {
        if r.doc_text.is_none() {
            return Err(Error::Invalid(format!(
                "record {:?} has no doc_text; training requires documents",
                r.query_id
            )));
        }
    }

    // Labels are resolved once, up front, from their own seed stream.
    let mut label_rng = DetRng::derive(config.seed, 1);
    let labels: Vec<Vec<(u8, u8)>> = train_set
        .records
        .iter()
        .map(|r| {
            r.outcomes
                .iter()
                .map(|o| resolve_labels(o, config.label_mode, &mut label_rng))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;

    let mut flat = params.flatten();
    let mut opt = OptState::new(flat.len(), config.opt_config());
    let n = train_set.records.len();
    let mut report = TrainReport {
        epoch_loss: Vec::with_capacity(config.epochs),
        epoch_accuracy: Vec::with_capacity(config.epochs),
        steps: 0,
        num_params: flat.len(),
        records: n,
    };

    for epoch in 0..config.epochs {
        let mut order: Vec<usize> = (0..n).collect();
        let mut shuffle_rng = DetRng::derive(config.seed, 2 + epoch as u64);
        shuffle_rng.shuffle(&mut order);

        let mut loss_sum = 0.0;
        let mut correct_sum = 0.0;
        for batch in order.chunks(config.batch_size) {
            // Fixed-width sub-chunks keep the reduction order independent
            // of the thread count.
            let chunk_results: Vec<Result<(Vec<f64>, f64, f64)>> = batch
                .par_chunks(REDUCE_CHUNK)
                .map(|chunk| {
                    let mut grad = vec![0.0; params.num_params()];
                    let mut loss = 0.0;
                    let mut correct = 0.0;
                    for &idx in chunk {
                        let r = process_record(
                            &params,
                            provider,
                            &train_set.records[idx],
                            &labels[idx],
                            config,
                        )?;
                        for (g, v) in grad.iter_mut().zip(&r.grad) {
                            *g += v;
                        }
                        loss += r.loss;
                        correct += r.correct;
                    }
                    Ok((grad, loss, correct))
                })
                .collect();

            let mut grad = vec![0.0; flat.len()];
            let mut batch_loss = 0.0;
            for result in chunk_results {
                let (g, l, c) = result?;
                for (acc, v) in grad.iter_mut().zip(&g) {
                    *acc += v;
                }
                batch_loss += l;
                correct_sum += c;
            }
            if !batch_loss.is_finite() {
                return Err(Error::NonFinite(format!(
                    "loss diverged at epoch {epoch}, step {}",
                    opt.step_count() + 1
                )));
            }
            let scale = 1.0 / batch.len() as f64;
            for g in &mut grad {
                *g *= scale;
            }
            loss_sum += batch_loss;
            opt.step(&mut flat, &grad)?;
            params.assign_flat(&flat)?;
        }

        report.epoch_loss.push(loss_sum / n as f64);
        report.epoch_accuracy.push(correct_sum / n as f64);
    }
    report.steps = opt.step_count();

    Ok((params, report))
}
