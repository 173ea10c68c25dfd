//! Command implementations behind the `ragroute` binary: simulate,
//! train, route, eval, sweep, report, config. The binary itself only
//! parses flags; everything here is callable from library code and
//! tests. All outputs are deterministic for a fixed config and seed —
//! wall-clock timestamps appear only in manifests.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::baselines::{
    expected_random_accuracy, mf_train, oracle_accuracy, oracle_single_best, rag_label_matrix,
    random_route, routing_distribution, single_best_from_accuracies, weighted_route, KnnIndex,
    MfConfig, MfModel,
};
use crate::checkpoint::load_checkpoint;
use crate::data::{
    load_response_dataset, save_response_dataset, sha256_file, split_dataset, validate_dataset,
    ModelRegistry, ResponseDataset,
};
use crate::diffmath::sigmoid;
use crate::embed::{EmbeddingProvider, TextChannel};
use crate::error::{Error, Result};
use crate::evaluation::{
    area, gap_to_match, peak_acc, read_curve_csv, sweep, write_curve_csv, MetricsReport,
};
use crate::model::{init_params, RouterParams, RoutingDecision};
use crate::plot::render_curves_svg;
use crate::rng::DetRng;
use crate::synth::{generate_dataset, generate_pool, NoiseMix};
use crate::trainer::{train, ContrastScope, LabelMode, TrainConfig, TrainReport};

/// Flat run configuration (TOML). Unknown keys are rejected; defaults
/// are printable with `ragroute config --dump-defaults`. Command-line
/// flags override file values.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub seed: u64,
    pub out_dir: String,

    // simulate
    pub models: usize,
    pub queries: usize,
    pub test_queries: usize,
    pub topics: usize,
    pub mix_golden: f64,
    pub mix_relevant: f64,
    pub mix_irrelevant: f64,
    pub mix_counterfactual: f64,

    // router architecture
    pub dim: usize,
    pub heads: usize,
    pub dim_base: usize,

    // trainer
    pub tau: f64,
    pub lambda: f64,
    pub lr: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub weight_decay: f64,
    pub label_mode: String,

    // ablations
    pub csc_only: bool,
    pub isc_only: bool,
    pub drop_cross_encoder: bool,
    pub drop_capability_table: bool,

    // evaluation
    pub grid_step: f64,
    pub latency_window_s: f64,
    pub knn_k: usize,
    pub mf_rank: usize,
    pub mf_epochs: usize,
    pub mf_lr: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            out_dir: "out".into(),
            models: 15,
            queries: 2300,
            test_queries: 300,
            topics: 16,
            mix_golden: 1.0,
            mix_relevant: 1.0,
            mix_irrelevant: 1.0,
            mix_counterfactual: 1.0,
            dim: 768,
            heads: 8,
            dim_base: 256,
            tau: 0.2,
            lambda: 2.0,
            lr: 5e-5,
            batch_size: 64,
            epochs: 10,
            weight_decay: 0.01,
            label_mode: "binary".into(),
            csc_only: false,
            isc_only: false,
            drop_cross_encoder: false,
            drop_capability_table: false,
            grid_step: 1e-4,
            latency_window_s: 1.0,
            knn_k: 16,
            mf_rank: 64,
            mf_epochs: 200,
            mf_lr: 1e-3,
        }
    }
}

impl RunConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = fs::read_to_string(&path)?;
        toml::from_str(&text).map_err(|e| Error::Invalid(format!("config: {e}")))
    }

    pub fn dump_defaults() -> String {
        toml::to_string_pretty(&Self::default()).expect("default config serializes")
    }

    pub fn label_mode(&self) -> Result<LabelMode> {
        match self.label_mode.as_str() {
            "binary" => Ok(LabelMode::Binary),
            "probabilistic" => Ok(LabelMode::Probabilistic),
            other => Err(Error::Invalid(format!(
                "label_mode must be \"binary\" or \"probabilistic\", got {other:?}"
            ))),
        }
    }

    pub fn contrast_scope(&self) -> Result<ContrastScope> {
        match (self.csc_only, self.isc_only) {
            (false, false) => Ok(ContrastScope::Full),
            (true, false) => Ok(ContrastScope::CscOnly),
            (false, true) => Ok(ContrastScope::IscOnly),
            (true, true) => Err(Error::Invalid(
                "csc_only and isc_only are mutually exclusive".into(),
            )),
        }
    }

    pub fn noise_mix(&self) -> NoiseMix {
        NoiseMix {
            weights: [
                self.mix_golden,
                self.mix_relevant,
                self.mix_irrelevant,
                self.mix_counterfactual,
            ],
        }
    }

    pub fn train_config(&self) -> Result<TrainConfig> {
        Ok(TrainConfig {
            tau: self.tau,
            lambda: self.lambda,
            lr: self.lr,
            batch_size: self.batch_size,
            epochs: self.epochs,
            seed: self.seed,
            label_mode: self.label_mode()?,
            contrast: self.contrast_scope()?,
            weight_decay: self.weight_decay,
            ..TrainConfig::default()
        })
    }

    pub fn mf_config(&self) -> MfConfig {
        MfConfig {
            rank: self.mf_rank,
            epochs: self.mf_epochs,
            lr: self.mf_lr,
            batch_size: self.batch_size,
            seed: self.seed,
        }
    }

    pub fn out_path(&self, name: &str) -> PathBuf {
        Path::new(&self.out_dir).join(name)
    }
}

fn now_unix() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

/// What `simulate` wrote and the digest of the full dataset file.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SimulateManifest {
    pub seed: u64,
    pub models: usize,
    pub queries: usize,
    pub test_queries: usize,
    pub topics: usize,
    pub noise_mix: [f64; 4],
    pub dataset_digest: String,
    pub train_records: usize,
    pub test_records: usize,
    pub missing_doc: usize,
    pub created_unix: u64,
}

/// Generates the synthetic pool + dataset and splits it. Writes
/// registry.json, dataset.jsonl, train.jsonl, test.jsonl, latents.json
/// and simulate_manifest.json under the output directory.
pub fn cmd_simulate(config: &RunConfig) -> Result<SimulateManifest> {
    if config.test_queries == 0 || config.test_queries >= config.queries {
        return Err(Error::Invalid(format!(
            "test_queries must lie in (0, queries); got {} of {}",
            config.test_queries, config.queries
        )));
    }
    fs::create_dir_all(&config.out_dir)?;
    let (pool, registry) = generate_pool(config.models, config.topics, config.seed)?;
    let mix = config.noise_mix();
    let (dataset, sidecar) = generate_dataset(
        &pool,
        &registry,
        config.queries,
        config.topics,
        config.seed,
        &mix,
    )?;

    registry.save(config.out_path("registry.json"))?;
    save_response_dataset(&dataset, config.out_path("dataset.jsonl"))?;
    sidecar.save(config.out_path("latents.json"))?;

    let fraction = config.test_queries as f64 / config.queries as f64;
    let (train_set, test_set) = split_dataset(&dataset, fraction, config.seed)?;
    save_response_dataset(&train_set, config.out_path("train.jsonl"))?;
    save_response_dataset(&test_set, config.out_path("test.jsonl"))?;

    let digest = sha256_file(config.out_path("dataset.jsonl"))?;
    let report = validate_dataset(&dataset);
    let manifest = SimulateManifest {
        seed: config.seed,
        models: config.models,
        queries: config.queries,
        test_queries: config.test_queries,
        topics: config.topics,
        noise_mix: mix.weights,
        dataset_digest: digest,
        train_records: train_set.records.len(),
        test_records: test_set.records.len(),
        missing_doc: report.missing_doc,
        created_unix: now_unix(),
    };
    let mut text = serde_json::to_string_pretty(&manifest)?;
    text.push('\n');
    fs::write(config.out_path("simulate_manifest.json"), text)?;
    Ok(manifest)
}

/// Full hyperparameter record of a training run.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TrainManifest {
    pub n_models: usize,
    pub dim: usize,
    pub heads: usize,
    pub dim_base: usize,
    pub drop_cross_encoder: bool,
    pub drop_capability_table: bool,
    pub train_config: TrainConfig,
    pub dataset_digest: String,
    pub report: TrainReport,
    pub created_unix: u64,
}

/// Trains a router on a JSONL dataset and writes `router.ckpt` plus
/// `train_manifest.json`.
pub fn cmd_train(
    config: &RunConfig,
    registry_path: &Path,
    train_path: &Path,
) -> Result<TrainManifest> {
    fs::create_dir_all(&config.out_dir)?;
    let registry = ModelRegistry::load(registry_path)?;
    let train_set = load_response_dataset(train_path, &registry)?;
    let provider = EmbeddingProvider::feature_hash(config.dim_base)?;

    let mut params = init_params(
        registry.len(),
        config.dim,
        config.heads,
        config.dim_base,
        config.seed,
    )?;
    params.use_cross = !config.drop_cross_encoder;
    params.use_capability = !config.drop_capability_table;

    let train_config = config.train_config()?;
    let (trained, report) = train(&train_set, &provider, params, &train_config)?;
    trained.save(config.out_path("router.ckpt"))?;

    let manifest = TrainManifest {
        n_models: registry.len(),
        dim: config.dim,
        heads: config.heads,
        dim_base: config.dim_base,
        drop_cross_encoder: config.drop_cross_encoder,
        drop_capability_table: config.drop_capability_table,
        train_config,
        dataset_digest: sha256_file(train_path)?,
        report,
        created_unix: now_unix(),
    };
    let mut text = serde_json::to_string_pretty(&manifest)?;
    text.push('\n');
    fs::write(config.out_path("train_manifest.json"), text)?;
    Ok(manifest)
}

/// Routes one query (document optional) with a router checkpoint.
pub fn cmd_route(
    checkpoint: &Path,
    query: &str,
    doc: Option<&str>,
) -> Result<RoutingDecision> {
    let params = RouterParams::load(checkpoint)?;
    let provider = EmbeddingProvider::feature_hash(params.dim_base)?;
    params.decide(&provider, query, doc)
}

/// Which router an evaluation run uses.
#[derive(Clone, Debug)]
pub enum EvalMethod {
    /// A saved checkpoint; router and matrix-factorization kinds both
    /// work.
    Checkpoint(PathBuf),
    /// Named baseline: random, weighted, oracle, oracle_single_best,
    /// knn, mf.
    Baseline(String),
}

/// Extra inputs some methods need.
#[derive(Clone, Debug, Default)]
pub struct EvalInputs {
    /// Training split (knn, mf, weighted).
    pub train_path: Option<PathBuf>,
    /// Router checkpoint driving the weighted baseline's distribution.
    pub checkpoint: Option<PathBuf>,
    /// Per-model per-task accuracy CSV for table-driven
    /// oracle_single_best.
    pub accuracy_table: Option<PathBuf>,
}

/// Accuracy summary written by `eval`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EvalReport {
    pub method: String,
    /// Percent accuracy per task, sorted by task name.
    pub per_task: BTreeMap<String, f64>,
    /// Unweighted mean of the per-task accuracies, percent.
    pub macro_avg: f64,
    /// Plain accuracy over all records, percent.
    pub accuracy: f64,
    pub records: usize,
}

fn decisions_to_report(
    method: &str,
    ds: &ResponseDataset,
    decisions: &[usize],
) -> Result<EvalReport> {
    let mut per_task_hit: BTreeMap<String, (f64, usize)> = BTreeMap::new();
    let mut total = 0.0;
    for (r, &d) in ds.records.iter().zip(decisions) {
        let label = if r.doc_text.is_some() {
            r.outcomes[d].rag
        } else {
            r.outcomes[d].no_rag
        };
        total += label;
        let entry = per_task_hit.entry(r.task.clone()).or_insert((0.0, 0));
        entry.0 += label;
        entry.1 += 1;
    }
    let per_task: BTreeMap<String, f64> = per_task_hit
        .into_iter()
        .map(|(task, (hits, n))| (task, 100.0 * hits / n as f64))
        .collect();
    let macro_avg = per_task.values().sum::<f64>() / per_task.len() as f64;
    Ok(EvalReport {
        method: method.to_string(),
        per_task,
        macro_avg,
        accuracy: 100.0 * total / ds.records.len() as f64,
        records: ds.records.len(),
    })
}

fn router_decisions(
    params: &RouterParams,
    provider: &EmbeddingProvider,
    ds: &ResponseDataset,
) -> Result<Vec<usize>> {
    ds.records
        .iter()
        .map(|r| {
            params
                .decide(provider, &r.query_text, r.doc_text.as_deref())
                .map(|d| d.chosen)
        })
        .collect()
}

fn load_accuracy_table(path: &Path) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let path_str = path.display().to_string();
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or_else(|| Error::Parse {
        path: path_str.clone(),
        line: 1,
        msg: "empty accuracy table".into(),
    })?;
    let tasks: Vec<String> = header
        .split(',')
        .skip(1)
        .map(|s| s.trim().to_string())
        .collect();
    let mut table = Vec::new();
    for (idx, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != tasks.len() + 1 {
            return Err(Error::Parse {
                path: path_str.clone(),
                line: idx + 1,
                msg: format!(
                    "expected {} fields, got {}",
                    tasks.len() + 1,
                    fields.len()
                ),
            });
        }
        let row: Vec<f64> = fields[1..]
            .iter()
            .map(|f| {
                f.trim().parse::<f64>().map_err(|e| Error::Parse {
                    path: path_str.clone(),
                    line: idx + 1,
                    msg: format!("bad accuracy value: {e}"),
                })
            })
            .collect::<Result<_>>()?;
        table.push(row);
    }
    Ok((tasks, table))
}

/// Evaluates a checkpoint or baseline on a labeled dataset and writes
/// `eval_<method>.json`.
pub fn cmd_eval(
    config: &RunConfig,
    method: &EvalMethod,
    registry_path: &Path,
    dataset_path: &Path,
    inputs: &EvalInputs,
) -> Result<EvalReport> {
    fs::create_dir_all(&config.out_dir)?;

    // Table-driven oracle single best needs no dataset at all.
    if let (EvalMethod::Baseline(name), Some(table_path)) =
        (method, inputs.accuracy_table.as_ref())
    {
        if name == "oracle_single_best" {
            let (tasks, table) = load_accuracy_table(table_path)?;
            let report = single_best_from_accuracies(&tasks, &table)?;
            let per_task: BTreeMap<String, f64> = report
                .per_task
                .iter()
                .map(|t| (t.task.clone(), t.accuracy))
                .collect();
            let eval = EvalReport {
                method: "oracle_single_best".into(),
                macro_avg: report.macro_avg,
                accuracy: report.macro_avg,
                records: 0,
                per_task,
            };
            write_eval(config, &eval)?;
            return Ok(eval);
        }
    }

    let registry = ModelRegistry::load(registry_path)?;
    let ds = load_response_dataset(dataset_path, &registry)?;
    if ds.records.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let provider = EmbeddingProvider::feature_hash(config.dim_base)?;

    let load_train = || -> Result<ResponseDataset> {
        let path = inputs.train_path.as_ref().ok_or_else(|| {
            Error::Invalid("this method needs --train-data".into())
        })?;
        load_response_dataset(path, &registry)
    };

    let eval = match method {
        EvalMethod::Checkpoint(path) => {
            let (header, _) = load_checkpoint(path)?;
            match header.kind.as_str() {
                "router" => {
                    let params = RouterParams::load(path)?;
                    let provider = EmbeddingProvider::feature_hash(params.dim_base)?;
                    let decisions = router_decisions(&params, &provider, &ds)?;
                    decisions_to_report("router", &ds, &decisions)?
                }
                "mf" => {
                    let model = MfModel::load(path)?;
                    let provider = EmbeddingProvider::feature_hash(model.map_w.cols())?;
                    let decisions = ds
                        .records
                        .iter()
                        .map(|r| {
                            let e = provider
                                .text_embedding(&r.query_text, TextChannel::Query)?;
                            model.route(e.values())
                        })
                        .collect::<Result<Vec<_>>>()?;
                    decisions_to_report("mf", &ds, &decisions)?
                }
                other => {
                    return Err(Error::Invalid(format!(
                        "unsupported checkpoint kind {other:?}"
                    )))
                }
            }
        }
        EvalMethod::Baseline(name) => match name.as_str() {
            "random" => {
                let mut rng = DetRng::derive(config.seed, 30);
                let decisions = ds
                    .records
                    .iter()
                    .map(|_| random_route(registry.len(), &mut rng))
                    .collect::<Result<Vec<_>>>()?;
                decisions_to_report("random", &ds, &decisions)?
            }
            "weighted" => {
                let ckpt = inputs.checkpoint.as_ref().ok_or_else(|| {
                    Error::Invalid("weighted baseline needs --checkpoint".into())
                })?;
                let params = RouterParams::load(ckpt)?;
                let provider = EmbeddingProvider::feature_hash(params.dim_base)?;
                let train_set = load_train()?;
                let train_decisions = router_decisions(&params, &provider, &train_set)?;
                let dist = routing_distribution(&train_decisions, registry.len())?;
                let mut rng = DetRng::derive(config.seed, 31);
                let decisions = ds
                    .records
                    .iter()
                    .map(|_| weighted_route(&dist, &mut rng))
                    .collect::<Result<Vec<_>>>()?;
                decisions_to_report("weighted", &ds, &decisions)?
            }
            "oracle" => {
                let acc = 100.0 * oracle_accuracy(&rag_label_matrix(&ds));
                let mut per_task = BTreeMap::new();
                let mut tasks: Vec<String> =
                    ds.records.iter().map(|r| r.task.clone()).collect();
                tasks.sort();
                tasks.dedup();
                for task in tasks {
                    let rows: Vec<Vec<f64>> = ds
                        .records
                        .iter()
                        .filter(|r| r.task == task)
                        .map(|r| r.outcomes.iter().map(|o| o.rag).collect())
                        .collect();
                    per_task.insert(task, 100.0 * oracle_accuracy(&rows));
                }
                let macro_avg =
                    per_task.values().sum::<f64>() / per_task.len() as f64;
                EvalReport {
                    method: "oracle".into(),
                    per_task,
                    macro_avg,
                    accuracy: acc,
                    records: ds.records.len(),
                }
            }
            "oracle_single_best" => {
                let report = oracle_single_best(&ds)?;
                let per_task: BTreeMap<String, f64> = report
                    .per_task
                    .iter()
                    .map(|t| (t.task.clone(), t.accuracy))
                    .collect();
                EvalReport {
                    method: "oracle_single_best".into(),
                    macro_avg: report.macro_avg,
                    // A per-task best model applied to its task's records.
                    accuracy: {
                        let mut total = 0.0;
                        for r in &ds.records {
                            let best = report
                                .per_task
                                .iter()
                                .find(|t| t.task == r.task)
                                .expect("task present");
                            total += r.outcomes[best.model_id].rag;
                        }
                        100.0 * total / ds.records.len() as f64
                    },
                    records: ds.records.len(),
                    per_task,
                }
            }
            "expected_random" => {
                let acc = 100.0 * expected_random_accuracy(&rag_label_matrix(&ds));
                EvalReport {
                    method: "expected_random".into(),
                    per_task: BTreeMap::new(),
                    macro_avg: acc,
                    accuracy: acc,
                    records: ds.records.len(),
                }
            }
            "knn" => {
                let train_set = load_train()?;
                let index = KnnIndex::build(&train_set, &provider, config.knn_k)?;
                let decisions = ds
                    .records
                    .iter()
                    .map(|r| {
                        let e = provider.text_embedding(&r.query_text, TextChannel::Query)?;
                        index.route(e.values())
                    })
                    .collect::<Result<Vec<_>>>()?;
                decisions_to_report("knn", &ds, &decisions)?
            }
            "mf" => {
                let train_set = load_train()?;
                let model = mf_train(&train_set, &provider, &config.mf_config())?;
                let decisions = ds
                    .records
                    .iter()
                    .map(|r| {
                        let e = provider.text_embedding(&r.query_text, TextChannel::Query)?;
                        model.route(e.values())
                    })
                    .collect::<Result<Vec<_>>>()?;
                decisions_to_report("mf", &ds, &decisions)?
            }
            other => {
                return Err(Error::Invalid(format!(
                    "unknown baseline {other:?}; expected random, weighted, oracle, \
                     oracle_single_best, expected_random, knn, or mf"
                )))
            }
        },
    };

    write_eval(config, &eval)?;
    Ok(eval)
}

fn write_eval(config: &RunConfig, eval: &EvalReport) -> Result<()> {
    let mut text = serde_json::to_string_pretty(eval)?;
    text.push('\n');
    fs::write(
        config.out_path(&format!("eval_{}.json", eval.method)),
        text,
    )?;
    Ok(())
}

/// Threshold sweep of a checkpoint over a test dataset: writes the
/// curve CSV and a metrics JSON, returning the metrics.
pub fn cmd_sweep(
    config: &RunConfig,
    checkpoint: &Path,
    registry_path: &Path,
    dataset_path: &Path,
) -> Result<MetricsReport> {
    fs::create_dir_all(&config.out_dir)?;
    let registry = ModelRegistry::load(registry_path)?;
    let ds = load_response_dataset(dataset_path, &registry)?;
    if ds.records.is_empty() {
        return Err(Error::EmptyDataset);
    }

    let (header, _) = load_checkpoint(checkpoint)?;
    let (method, scores): (&str, Vec<Vec<f64>>) = match header.kind.as_str() {
        "router" => {
            let params = RouterParams::load(checkpoint)?;
            if params.n_models != registry.len() {
                return Err(Error::ShapeMismatch(format!(
                    "checkpoint built for {} models, registry has {}",
                    params.n_models,
                    registry.len()
                )));
            }
            let provider = EmbeddingProvider::feature_hash(params.dim_base)?;
            let scores = ds
                .records
                .iter()
                .map(|r| {
                    Ok(params
                        .score_models(&provider, &r.query_text, r.doc_text.as_deref())?
                        .into_iter()
                        .map(sigmoid)
                        .collect())
                })
                .collect::<Result<Vec<Vec<f64>>>>()?;
            ("router", scores)
        }
        "mf" => {
            let model = MfModel::load(checkpoint)?;
            let provider = EmbeddingProvider::feature_hash(model.map_w.cols())?;
            let scores = ds
                .records
                .iter()
                .map(|r| {
                    let e = provider.text_embedding(&r.query_text, TextChannel::Query)?;
                    model.scores(e.values())
                })
                .collect::<Result<Vec<Vec<f64>>>>()?;
            ("mf", scores)
        }
        other => {
            return Err(Error::Invalid(format!(
                "unsupported checkpoint kind {other:?}"
            )))
        }
    };

    let labels = rag_label_matrix(&ds);
    let curve = sweep(&scores, &labels, &registry, config.grid_step)?;

    // Reference: the best single model on this test set.
    let n = registry.len();
    let mut best_model = 0;
    let mut best_acc = f64::MIN;
    for m in 0..n {
        let acc = labels.iter().map(|r| r[m]).sum::<f64>() / labels.len() as f64;
        if acc > best_acc {
            best_acc = acc;
            best_model = m;
        }
    }
    let best_latency_s = registry.profile(best_model).latency_ms / 1000.0;

    let curve_name = format!("curve_{method}.csv");
    write_curve_csv(&curve, config.out_path(&curve_name))?;
    let metrics = MetricsReport {
        method: method.to_string(),
        area: area(&curve, config.latency_window_s),
        peak_acc: peak_acc(&curve, config.latency_window_s),
        gap_to_match: gap_to_match(&curve, best_acc, best_latency_s),
        theta_grid_step: config.grid_step,
        curve_file: Some(curve_name),
    };
    metrics.save(config.out_path(&format!("sweep_metrics_{method}.json")))?;
    Ok(metrics)
}

/// Renders a method-comparison table (text + CSV) and an SVG of every
/// curve referenced by the metrics files.
pub fn cmd_report(config: &RunConfig, metrics_paths: &[PathBuf]) -> Result<String> {
    if metrics_paths.is_empty() {
        return Err(Error::Invalid("report needs at least one metrics file".into()));
    }
    fs::create_dir_all(&config.out_dir)?;

    let mut rows = Vec::new();
    let mut curves = Vec::new();
    for path in metrics_paths {
        let metrics = MetricsReport::load(path)?;
        if let Some(curve_file) = &metrics.curve_file {
            let curve_path = path
                .parent()
                .unwrap_or_else(|| Path::new("."))
                .join(curve_file);
            if curve_path.exists() {
                let curve = read_curve_csv(&curve_path)?;
                curves.push((
                    metrics.method.clone(),
                    curve
                        .points()
                        .iter()
                        .map(|p| (p.mean_latency_s, p.accuracy))
                        .collect::<Vec<_>>(),
                ));
            }
        }
        rows.push(metrics);
    }

    let fmt_gap = |g: Option<f64>| match g {
        Some(v) => format!("{v:.2}"),
        None => "–".to_string(),
    };

    let mut text = String::new();
    text.push_str(&format!(
        "{:<20} {:>8} {:>8} {:>8}\n",
        "method", "area", "peak", "gap (s)"
    ));
    text.push_str(&format!("{}\n", "-".repeat(48)));
    let mut csv = String::from("method,area,peak_acc,gap_to_match\n");
    for m in &rows {
        text.push_str(&format!(
            "{:<20} {:>8.2} {:>8.2} {:>8}\n",
            m.method,
            m.area,
            m.peak_acc,
            fmt_gap(m.gap_to_match)
        ));
        csv.push_str(&format!(
            "{},{},{},{}\n",
            m.method,
            m.area,
            m.peak_acc,
            m.gap_to_match
                .map(|g| g.to_string())
                .unwrap_or_else(|| "–".into())
        ));
    }

    fs::write(config.out_path("report.txt"), &text)?;
    fs::write(config.out_path("report.csv"), csv)?;
    let svg = render_curves_svg(&curves, "accuracy vs latency");
    fs::write(config.out_path("curves.svg"), svg)?;
    Ok(text)
}
