//! Comparison routers.
//!
//! None of these see the document: they are the query-only and
//! rule-based strategies the learned router is measured against. All of
//! them consume document-setting correctness labels.
//!
//! - random / weighted: sampling baselines,
//! - oracle single best: the best fixed model per task, from labels,
//! - oracle: per-query ideal routing, the performance ceiling,
//! - k-NN: historical performance of the nearest training queries,
//! - matrix factorization: low-rank model/query latents trained with
//!   the same optimizer as the main trainer.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::checkpoint::{load_checkpoint, save_checkpoint, CheckpointHeader, CHECKPOINT_VERSION};
use crate::data::ResponseDataset;
use crate::diffmath::{sigmoid, OptConfig, OptState, Tape, Tensor2};
use crate::embed::{EmbeddingProvider, TextChannel};
use crate::error::{Error, Result};
use crate::rng::DetRng;

/// Uniform model pick.
pub fn random_route(n_models: usize, rng: &mut DetRng) -> Result<usize> {
    if n_models == 0 {
        return Err(Error::Invalid("no models to route over".into()));
    }
    Ok(rng.below(n_models))
}

/// Categorical sample from an explicit routing distribution.
pub fn weighted_route(distribution: &[f64], rng: &mut DetRng) -> Result<usize> {
    if distribution.is_empty() {
        return Err(Error::Invalid("empty routing distribution".into()));
    }
    if distribution.iter().any(|p| *p < 0.0 || !p.is_finite()) {
        return Err(Error::Invalid(
            "routing distribution entries must be finite and >= 0".into(),
        ));
    }
    let total: f64 = distribution.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::Invalid(format!(
            "routing distribution sums to {total}, expected 1"
        )));
    }
    let draw = rng.uniform();
    let mut acc = 0.0;
    for (i, p) in distribution.iter().enumerate() {
        acc += p;
        if draw < acc {
            return Ok(i);
        }
    }
    Ok(distribution.len() - 1)
}

/// Routing frequencies of a decision sequence; feeds `weighted_route`.
pub fn routing_distribution(decisions: &[usize], n_models: usize) -> Result<Vec<f64>> {
    if decisions.is_empty() {
        return Err(Error::Invalid("no decisions to build a distribution from".into()));
    }
    let mut counts = vec![0usize; n_models];
    for &d in decisions {
        if d >= n_models {
            return Err(Error::Invalid(format!("decision {d} out of range")));
        }
        counts[d] += 1;
    }
    Ok(counts
        .iter()
        .map(|&c| c as f64 / decisions.len() as f64)
        .collect())
}

/// Best fixed model for one task.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TaskBest {
    pub task: String,
    pub model_id: usize,
    /// Accuracy as a percentage.
    pub accuracy: f64,
}

/// Output of the oracle-single-best baseline.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SingleBestReport {
    pub per_task: Vec<TaskBest>,
    /// Unweighted mean of per-task accuracies, percent.
    pub macro_avg: f64,
}

/// Picks the best model per task from a per-model, per-task accuracy
/// table (percentages; rows = models in registry order). Ties go to the
/// lower model index.
pub fn single_best_from_accuracies(
    tasks: &[String],
    table: &[Vec<f64>],
) -> Result<SingleBestReport> {
    if tasks.is_empty() || table.is_empty() {
        return Err(Error::Invalid("empty accuracy table".into()));
    }
    for row in table {
        if row.len() != tasks.len() {
            return Err(Error::ShapeMismatch(format!(
                "row with {} entries for {} tasks",
                row.len(),
                tasks.len()
            )));
        }
    }
    let mut per_task = Vec::with_capacity(tasks.len());
    for (t, task) in tasks.iter().enumerate() {
        let mut best = 0;
        for m in 1..table.len() {
            if table[m][t] > table[best][t] {
                best = m;
            }
        }
        per_task.push(TaskBest {
            task: task.clone(),
            model_id: best,
            accuracy: table[best][t],
        });
    }
    let macro_avg = per_task.iter().map(|t| t.accuracy).sum::<f64>() / per_task.len() as f64;
    Ok(SingleBestReport {
        per_task,
        macro_avg,
    })
}

/// Oracle single best over a labeled dataset: groups records by task
/// (sorted task names), scores every model by mean document-setting
/// label, and keeps the per-task maximum.
pub fn oracle_single_best(ds: &ResponseDataset) -> Result<SingleBestReport> {
    if ds.records.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut tasks: Vec<String> = ds.records.iter().map(|r| r.task.clone()).collect();
    tasks.sort();
    tasks.dedup();

    let n = ds.registry.len();
    let mut table = vec![vec![0.0f64; tasks.len()]; n];
    for (t, task) in tasks.iter().enumerate() {
        let rows: Vec<_> = ds.records.iter().filter(|r| &r.task == task).collect();
        for m in 0..n {
            let acc =
                rows.iter().map(|r| r.outcomes[m].rag).sum::<f64>() / rows.len() as f64;
            table[m][t] = 100.0 * acc;
        }
    }
    single_best_from_accuracies(&tasks, &table)
}

/// Ideal per-query routing: mean over queries of the best available
/// document-setting label.
pub fn oracle_accuracy(rag_labels: &[Vec<f64>]) -> f64 {
    if rag_labels.is_empty() {
        return 0.0;
    }
    rag_labels
        .iter()
        .map(|row| row.iter().cloned().fold(0.0, f64::max))
        .sum::<f64>()
        / rag_labels.len() as f64
}

/// Expected accuracy of uniform random routing (mean over all
/// query-model pairs); the noise-free version of `random_route`.
pub fn expected_random_accuracy(rag_labels: &[Vec<f64>]) -> f64 {
    if rag_labels.is_empty() {
        return 0.0;
    }
    rag_labels
        .iter()
        .map(|row| row.iter().sum::<f64>() / row.len() as f64)
        .sum::<f64>()
        / rag_labels.len() as f64
}

/// Document-setting label matrix of a dataset, query-major.
pub fn rag_label_matrix(ds: &ResponseDataset) -> Vec<Vec<f64>> {
    ds.records
        .iter()
        .map(|r| r.outcomes.iter().map(|o| o.rag).collect())
        .collect()
}

/// Nearest-neighbor router over base query embeddings.
#[derive(Clone, Debug)]
pub struct KnnIndex {
    embeddings: Vec<Vec<f64>>,
    labels: Vec<Vec<f64>>,
    k: usize,
}

impl KnnIndex {
    /// Embeds every training query on the provider's query channel and
    /// stores its document-setting label row.
    pub fn build(
        train: &ResponseDataset,
        provider: &EmbeddingProvider,
        k: usize,
    ) -> Result<Self> {
        if train.records.is_empty() {
            return Err(Error::EmptyDataset);
        }
        if k == 0 {
            return Err(Error::Invalid("k must be >= 1".into()));
        }
        let mut embeddings = Vec::with_capacity(train.records.len());
        for r in &train.records {
            embeddings.push(
                provider
                    .text_embedding(&r.query_text, TextChannel::Query)?
                    .into_values(),
            );
        }
        Ok(Self {
            embeddings,
            labels: rag_label_matrix(train),
            k: k.min(train.records.len()),
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Per-model mean correctness over the k nearest training queries
    /// (cosine distance; neighbor ties broken by training index).
    pub fn scores(&self, query_embedding: &[f64]) -> Result<Vec<f64>> {
        if query_embedding.len() != self.embeddings[0].len() {
            return Err(Error::ShapeMismatch(format!(
                "query embedding dim {} vs index dim {}",
                query_embedding.len(),
                self.embeddings[0].len()
            )));
        }
        let mut dists: Vec<(f64, usize)> = self
            .embeddings
            .iter()
            .enumerate()
            .map(|(i, e)| {
                let dot: f64 = e.iter().zip(query_embedding).map(|(a, b)| a * b).sum();
                (1.0 - dot, i)
            })
            .collect();
        dists.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

        let n_models = self.labels[0].len();
        let mut scores = vec![0.0f64; n_models];
        for &(_, idx) in dists.iter().take(self.k) {
            for (s, l) in scores.iter_mut().zip(&self.labels[idx]) {
                *s += l;
            }
        }
        for s in &mut scores {
            *s /= self.k as f64;
        }
        Ok(scores)
    }

    /// Argmax of `scores` with the efficiency (lowest index) tie-break.
    pub fn route(&self, query_embedding: &[f64]) -> Result<usize> {
        let scores = self.scores(query_embedding)?;
        let mut best = 0;
        for (i, &s) in scores.iter().enumerate() {
            if s > scores[best] {
                best = i;
            }
        }
        Ok(best)
    }
}

/// Matrix-factorization router: per-model latent rows and an affine map
/// taking base query embeddings into the latent space.
#[derive(Clone, Debug)]
pub struct MfModel {
    /// N x rank.
    pub latents: Tensor2,
    /// rank x dim_base.
    pub map_w: Tensor2,
    /// rank.
    pub map_b: Tensor2,
    pub rank: usize,
    pub seed: u64,
}

/// Matrix-factorization training hyperparameters.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct MfConfig {
    pub rank: usize,
    pub epochs: usize,
    pub lr: f64,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for MfConfig {
    fn default() -> Self {
        Self {
            rank: 64,
            epochs: 200,
            lr: 1e-3,
            batch_size: 64,
            seed: 0,
        }
    }
}

/// Near-tie width for the matrix-factorization argmax: converged scores
/// within this of the maximum count as tied and resolve to the most
/// efficient model.
pub const MF_TIE_TOL: f64 = 1e-6;

impl MfModel {
    /// Raw logits `latent_i . (W e + b)` per model.
    pub fn logits(&self, query_embedding: &[f64]) -> Result<Vec<f64>> {
        if query_embedding.len() != self.map_w.cols() {
            return Err(Error::ShapeMismatch(format!(
                "query embedding dim {} vs map dim {}",
                query_embedding.len(),
                self.map_w.cols()
            )));
        }
        let mut z = self.map_w.matvec(query_embedding);
        for (zi, bi) in z.iter_mut().zip(self.map_b.data()) {
            *zi += bi;
        }
        Ok((0..self.latents.rows())
            .map(|i| {
                self.latents
                    .row(i)
                    .iter()
                    .zip(&z)
                    .map(|(a, b)| a * b)
                    .sum()
            })
            .collect())
    }

    /// Sigmoid-squashed correctness estimates in (0,1).
    pub fn scores(&self, query_embedding: &[f64]) -> Result<Vec<f64>> {
        Ok(self
            .logits(query_embedding)?
            .into_iter()
            .map(sigmoid)
            .collect())
    }

    /// Argmax with near-ties (within [`MF_TIE_TOL`]) resolved to the
    /// lowest model index.
    pub fn route(&self, query_embedding: &[f64]) -> Result<usize> {
        let scores = self.scores(query_embedding)?;
        let max = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        for (i, &s) in scores.iter().enumerate() {
            if max - s <= MF_TIE_TOL {
                return Ok(i);
            }
        }
        unreachable!("max is attained by some score");
    }

    fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::new();
        out.extend_from_slice(self.latents.data());
        out.extend_from_slice(self.map_w.data());
        out.extend_from_slice(self.map_b.data());
        out
    }

    fn assign_flat(&mut self, flat: &[f64]) -> Result<()> {
        let expected = self.latents.len() + self.map_w.len() + self.map_b.len();
        if flat.len() != expected {
            return Err(Error::ShapeMismatch(format!(
                "expected {expected} parameters, got {}",
                flat.len()
            )));
        }
        let (a, rest) = flat.split_at(self.latents.len());
        let (b, c) = rest.split_at(self.map_w.len());
        self.latents.data_mut().copy_from_slice(a);
        self.map_w.data_mut().copy_from_slice(b);
        self.map_b.data_mut().copy_from_slice(c);
        Ok(())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let header = CheckpointHeader {
            kind: "mf".into(),
            version: CHECKPOINT_VERSION,
            n: self.latents.rows(),
            dim: self.rank,
            dim_base: self.map_w.cols(),
            seed: self.seed,
            heads: None,
            rank: Some(self.rank),
            use_cross: None,
            use_capability: None,
        };
        save_checkpoint(path, &header, &self.flatten())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let (header, blob) = load_checkpoint(path)?;
        if header.kind != "mf" {
            return Err(Error::Invalid(format!(
                "checkpoint kind {:?} is not a matrix-factorization checkpoint",
                header.kind
            )));
        }
        let rank = header
            .rank
            .ok_or_else(|| Error::Invalid("mf checkpoint missing rank".into()))?;
        let mut model = init_mf(header.n, rank, header.dim_base, header.seed)?;
        model.assign_flat(&blob)?;
        Ok(model)
    }
}

fn init_mf(n_models: usize, rank: usize, dim_base: usize, seed: u64) -> Result<MfModel> {
    if rank == 0 {
        return Err(Error::Invalid("rank must be >= 1".into()));
    }
    if n_models == 0 || dim_base == 0 {
        return Err(Error::Invalid("need models and a base dimension".into()));
    }
    let bound = 1.0 / (rank as f64).sqrt();
    let mut rng = DetRng::derive(seed, 20);
    let mut draw = |rows: usize, cols: usize| {
        Tensor2::from_vec(
            rows,
            cols,
            (0..rows * cols)
                .map(|_| rng.uniform_in(-bound, bound))
                .collect(),
        )
        .expect("consistent shapes")
    };
    Ok(MfModel {
        latents: draw(n_models, rank),
        map_w: draw(rank, dim_base),
        map_b: Tensor2::zeros(rank, 1),
        rank,
        seed,
    })
}

/// Trains the factorization by binary cross-entropy on
/// sigmoid(latent . mapped-query) against document-setting labels,
/// with the same decoupled-weight-decay optimizer as the main trainer
/// (decay 0 here). Labels must be binary.
pub fn mf_train(
    train: &ResponseDataset,
    provider: &EmbeddingProvider,
    config: &MfConfig,
) -> Result<MfModel> {
    if train.records.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if config.batch_size == 0 {
        return Err(Error::Invalid("batch_size must be >= 1".into()));
    }
    let n_models = train.registry.len();
    let mut labels = Vec::with_capacity(train.records.len());
    let mut embeddings = Vec::with_capacity(train.records.len());
    for r in &train.records {
        for o in &r.outcomes {
            if !o.is_binary() {
                return Err(Error::Invalid(format!(
                    "record {:?} has non-binary labels; matrix factorization needs {{0,1}}",
                    r.query_id
                )));
            }
        }
        labels.push(r.outcomes.iter().map(|o| o.rag).collect::<Vec<f64>>());
        embeddings.push(
            provider
                .text_embedding(&r.query_text, TextChannel::Query)?
                .into_values(),
        );
    }

    let mut model = init_mf(n_models, config.rank, provider.dim(), config.seed)?;
    let mut flat = model.flatten();
    let mut opt = OptState::new(
        flat.len(),
        OptConfig {
            lr: config.lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            weight_decay: 0.0,
        },
    );

    let n = train.records.len();
    for epoch in 0..config.epochs {
        let mut order: Vec<usize> = (0..n).collect();
        let mut rng = DetRng::derive(config.seed, 21 + epoch as u64);
        rng.shuffle(&mut order);

        for batch in order.chunks(config.batch_size) {
            let mut tape = Tape::new();
            let latents = tape.leaf(model.latents.clone());
            let w = tape.leaf(model.map_w.clone());
            let b = tape.leaf(model.map_b.clone());
            let mut per_query = Vec::with_capacity(batch.len());
            for &idx in batch {
                let e = tape.leaf(Tensor2::vector(embeddings[idx].clone()));
                let z = tape.affine(w, e, b)?;
                let mut terms = Vec::with_capacity(n_models);
                for m in 0..n_models {
                    let lrow = tape.row(latents, m)?;
                    let logit = tape.dot(lrow, z)?;
                    terms.push(tape.sigmoid_bce(logit, labels[idx][m])?);
                }
                per_query.push(tape.sum_scaled(&terms, &vec![1.0; terms.len()])?);
            }
            let coeff = 1.0 / batch.len() as f64;
            let loss = tape.sum_scaled(&per_query, &vec![coeff; per_query.len()])?;
            if !tape.value(loss).item().is_finite() {
                return Err(Error::NonFinite(format!(
                    "matrix factorization diverged at epoch {epoch}"
                )));
            }
            let grads = tape.backward(loss);
            let mut grad = Vec::with_capacity(flat.len());
            for (&slot, t) in [latents, w, b].iter().zip([
                &model.latents,
                &model.map_w,
                &model.map_b,
            ]) {
                grad.extend_from_slice(grads.dense(slot, t.rows(), t.cols()).data());
            }
            opt.step(&mut flat, &grad)?;
            model.assign_flat(&flat)?;
        }
    }
    Ok(model)
}
