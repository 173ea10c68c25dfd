//! Deterministic synthetic model pool and labeled dataset.
//!
//! Every model gets a latent profile — per-topic knowledge, document
//! extraction skill, noise robustness — and every query a latent
//! (topic, difficulty) plus a document whose helpfulness and misleading
//! level come from one of four noise presets. Correctness is a closed
//! form over those latents:
//!
//! ```text
//! no_rag = knowledge[topic]                                >= difficulty
//! rag    = max(knowledge[topic], extraction * doc_help)
//!          - doc_mislead * (1 - robustness)                >= difficulty
//! ```
//!
//! Because the rule is deterministic and exported in a sidecar file,
//! every downstream number (oracle accuracy, gain/interference rates,
//! routing headroom) can be recomputed independently, which makes this
//! generator the ground-truth oracle for end-to-end tests. Query and
//! document texts are synthetic token sequences: topic and difficulty
//! tokens in the query, preset and topic tokens in the document, with
//! repetition counts chosen so feature hashing keeps topics linearly
//! separable.

use serde::{Deserialize, Serialize};

use crate::data::{ModelRegistry, Outcome, ProfileSpec, ResponseDataset, ResponseRecord};
use crate::error::{Error, Result};
use crate::rng::DetRng;

/// Latency range endpoints for generated pools, milliseconds.
pub const LATENCY_RANGE_MS: (f64, f64) = (20.0, 2000.0);

/// Query difficulties are drawn from this mid band; documents shift
/// answerability most when queries sit near the knowledge boundary.
pub const DIFFICULTY_RANGE: (f64, f64) = (0.50, 0.60);

const TOPIC_REPEATS: usize = 8;
const PRESET_REPEATS: usize = 6;
const DOC_TOPIC_REPEATS: usize = 2;

/// Latent profile of one synthetic model.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SynthModelLatent {
    /// Per-topic parametric knowledge in [0,1].
    pub knowledge: Vec<f64>,
    /// Skill at pulling answers out of documents, [0,1].
    pub extraction: f64,
    /// Tolerance to misleading content, [0,1].
    pub robustness: f64,
    pub latency_ms: f64,
}

/// Latent profile of one synthetic query.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct SynthQueryLatent {
    pub topic: usize,
    pub difficulty: f64,
    pub doc_help: f64,
    pub doc_mislead: f64,
}

/// Document noise preset: (helpfulness, misleading level).
#[derive(Clone, Copy, Debug)]
pub struct NoisePreset {
    pub name: &'static str,
    pub doc_help: f64,
    pub doc_mislead: f64,
}

/// The four document conditions, from clean support to actively
/// contradicting content.
pub const NOISE_PRESETS: [NoisePreset; 4] = [
    NoisePreset {
        name: "golden",
        doc_help: 0.95,
        doc_mislead: 0.05,
    },
    NoisePreset {
        name: "relevant",
        doc_help: 0.95,
        doc_mislead: 0.85,
    },
    NoisePreset {
        name: "irrelevant",
        doc_help: 0.05,
        doc_mislead: 0.45,
    },
    NoisePreset {
        name: "counterfactual",
        doc_help: 0.20,
        doc_mislead: 0.80,
    },
];

/// Relative weights over [`NOISE_PRESETS`].
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct NoiseMix {
    pub weights: [f64; 4],
}

impl Default for NoiseMix {
    fn default() -> Self {
        Self {
            weights: [1.0, 1.0, 1.0, 1.0],
        }
    }
}

impl NoiseMix {
    pub fn validate(&self) -> Result<()> {
        if self.weights.iter().any(|w| *w < 0.0) {
            return Err(Error::Invalid("noise mix weights must be >= 0".into()));
        }
        if self.weights.iter().sum::<f64>() <= 0.0 {
            return Err(Error::Invalid("noise mix weights must not all be zero".into()));
        }
        Ok(())
    }
}

/// Draws a model pool: latents uniform per seed, latencies log-spaced
/// ascending over [`LATENCY_RANGE_MS`] so registry order equals
/// generation order.
pub fn generate_pool(
    num_models: usize,
    topics: usize,
    seed: u64,
) -> Result<(Vec<SynthModelLatent>, ModelRegistry)> {
    if num_models < 2 {
        return Err(Error::Invalid(format!(
            "need at least 2 models, got {num_models}"
        )));
    }
    if topics == 0 {
        return Err(Error::Invalid("need at least one topic".into()));
    }
    let mut rng = DetRng::derive(seed, 10);
    let (lo, hi) = LATENCY_RANGE_MS;
    let ratio = hi / lo;

    let mut latents = Vec::with_capacity(num_models);
    let mut specs = Vec::with_capacity(num_models);
    for i in 0..num_models {
        let frac = i as f64 / (num_models - 1) as f64;
        let latency_ms = lo * ratio.powf(frac);
        let knowledge = (0..topics).map(|_| rng.uniform()).collect();
        let extraction = rng.uniform();
        let robustness = rng.uniform();
        latents.push(SynthModelLatent {
            knowledge,
            extraction,
            robustness,
            latency_ms,
        });
        specs.push(ProfileSpec {
            name: format!("synth-{i:02}"),
            params_b: 0.5 * (72.0f64 / 0.5).powf(frac),
            latency_ms,
            rank: None,
        });
    }
    let registry = ModelRegistry::from_specs(specs)?;
    Ok((latents, registry))
}

/// The ground-truth correctness rule.
pub fn label_outcome(model: &SynthModelLatent, query: &SynthQueryLatent) -> Outcome {
    let k = model.knowledge[query.topic];
    let no_rag = k >= query.difficulty;
    let with_doc = k.max(model.extraction * query.doc_help)
        - query.doc_mislead * (1.0 - model.robustness);
    let rag = with_doc >= query.difficulty;
    Outcome {
        no_rag: no_rag as u8 as f64,
        rag: rag as u8 as f64,
    }
}

/// Preset schedule: at each step pick the preset whose quota is least
/// filled relative to its weight (ties to the lower index). Equal
/// weights reduce to plain round-robin.
fn preset_schedule(num_queries: usize, mix: &NoiseMix) -> Vec<usize> {
    let mut counts = [0usize; 4];
    let mut out = Vec::with_capacity(num_queries);
    for _ in 0..num_queries {
        let mut best: Option<usize> = None;
        for k in 0..4 {
            if mix.weights[k] <= 0.0 {
                continue;
            }
            let fill = (counts[k] + 1) as f64 / mix.weights[k];
            let better = match best {
                None => true,
                Some(b) => fill < (counts[b] + 1) as f64 / mix.weights[b],
            };
            if better {
                best = Some(k);
            }
        }
        let k = best.expect("validated mix has a positive weight");
        counts[k] += 1;
        out.push(k);
    }
    out
}

/// Tokens repeat with letter variants so each concept spreads over
/// several hash buckets; single-bucket collisions between concepts then
/// cannot merge them.
fn spread_tokens(tokens: &mut Vec<String>, stem: &str, repeats: usize) {
    const VARIANTS: [char; 4] = ['a', 'b', 'c', 'd'];
    for i in 0..repeats {
        tokens.push(format!("{stem}{}", VARIANTS[i % VARIANTS.len()]));
    }
}

fn query_text(idx: usize, latent: &SynthQueryLatent) -> String {
    let mut tokens = Vec::new();
    spread_tokens(&mut tokens, &format!("t{:02}", latent.topic), TOPIC_REPEATS);
    tokens.push(format!("q{idx:05}"));
    tokens.join(" ")
}

fn doc_text(idx: usize, preset: &NoisePreset, latent: &SynthQueryLatent) -> String {
    let mut tokens = Vec::new();
    spread_tokens(&mut tokens, &format!("ctx-{}-", preset.name), PRESET_REPEATS);
    spread_tokens(&mut tokens, &format!("t{:02}", latent.topic), DOC_TOPIC_REPEATS);
    tokens.push(format!("s{idx:05}"));
    tokens.join(" ")
}

/// Per-query latents exported alongside a generated dataset.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct QuerySidecar {
    pub query_id: String,
    #[serde(flatten)]
    pub latent: SynthQueryLatent,
}

/// Ground-truth latents for oracle verification of a generated dataset.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SynthSidecar {
    pub models: Vec<SynthModelLatent>,
    pub queries: Vec<QuerySidecar>,
}

impl SynthSidecar {
    pub fn save(&self, path: impl AsRef<std::path::Path>) -> Result<()> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        std::fs::write(path, text)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }
}

/// Generates a labeled dataset over the pool. Presets follow the
/// deterministic quota schedule; topics and difficulties are drawn from
/// the seed stream; labels come from [`label_outcome`]. The record task
/// tag is the preset name.
pub fn generate_dataset(
    pool: &[SynthModelLatent],
    registry: &ModelRegistry,
    num_queries: usize,
    topics: usize,
    seed: u64,
    mix: &NoiseMix,
) -> Result<(ResponseDataset, SynthSidecar)> {
    if pool.is_empty() {
        return Err(Error::Invalid("empty model pool".into()));
    }
    if pool.len() != registry.len() {
        return Err(Error::ShapeMismatch(format!(
            "pool has {} models, registry {}",
            pool.len(),
            registry.len()
        )));
    }
    if num_queries == 0 {
        return Err(Error::Invalid("need at least one query".into()));
    }
    mix.validate()?;
    for m in pool {
        if m.knowledge.len() != topics {
            return Err(Error::ShapeMismatch(format!(
                "model knows {} topics, generator asked for {topics}",
                m.knowledge.len()
            )));
        }
    }

    let schedule = preset_schedule(num_queries, mix);
    let mut rng = DetRng::derive(seed, 11);
    let mut records = Vec::with_capacity(num_queries);
    let mut sidecar_queries = Vec::with_capacity(num_queries);

    for (idx, &preset_idx) in schedule.iter().enumerate() {
        let preset = &NOISE_PRESETS[preset_idx];
        let latent = SynthQueryLatent {
            topic: rng.below(topics),
            difficulty: rng.uniform_in(DIFFICULTY_RANGE.0, DIFFICULTY_RANGE.1),
            doc_help: preset.doc_help,
            doc_mislead: preset.doc_mislead,
        };
        let outcomes = pool.iter().map(|m| label_outcome(m, &latent)).collect();
        let query_id = format!("q{idx:05}");
        records.push(ResponseRecord {
            query_id: query_id.clone(),
            task: preset.name.to_string(),
            query_text: query_text(idx, &latent),
            doc_text: Some(doc_text(idx, preset, &latent)),
            outcomes,
        });
        sidecar_queries.push(QuerySidecar {
            query_id,
            latent,
        });
    }

    Ok((
        ResponseDataset {
            records,
            registry: registry.clone(),
        },
        SynthSidecar {
            models: pool.to_vec(),
            queries: sidecar_queries,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::save_response_dataset;

    fn query(topic: usize, difficulty: f64, h: f64, m: f64) -> SynthQueryLatent {
        SynthQueryLatent {
            topic,
            difficulty,
            doc_help: h,
            doc_mislead: m,
        }
    }

    fn model(k: Vec<f64>, e: f64, r: f64) -> SynthModelLatent {
        SynthModelLatent {
            knowledge: k,
            extraction: e,
            robustness: r,
            latency_ms: 100.0,
        }
    }

    #[test]
    fn rule_positive_gain_case() {
        // Weak knowledge, strong extraction, helpful doc: 0 -> 1.
        let m = model(vec![0.4], 0.9, 0.5);
        let q = query(0, 0.5, 0.8, 0.2);
        let o = label_outcome(&m, &q);
        assert_eq!(o.no_rag, 0.0);
        // max(0.4, 0.72) - 0.2*0.5 = 0.62 >= 0.5
        assert_eq!(o.rag, 1.0);
    }

    #[test]
    fn rule_negative_interference_case() {
        // Adequate knowledge, fragile model, misleading doc: 1 -> 0.
        let m = model(vec![0.55], 0.0, 0.0);
        let q = query(0, 0.5, 0.0, 0.6);
        let o = label_outcome(&m, &q);
        assert_eq!(o.no_rag, 1.0);
        // max(0.55, 0) - 0.6 = -0.05 < 0.5
        assert_eq!(o.rag, 0.0);
    }

    #[test]
    fn neutral_document_changes_nothing() {
        let mut rng = DetRng::seed_from_u64(8);
        for _ in 0..50 {
            let m = model(vec![rng.uniform()], rng.uniform(), rng.uniform());
            let q = query(0, rng.uniform(), 0.0, 0.0);
            let o = label_outcome(&m, &q);
            assert_eq!(o.no_rag, o.rag);
        }
    }

    #[test]
    fn rule_is_monotone_in_the_documented_directions() {
        let mut rng = DetRng::seed_from_u64(9);
        for _ in 0..200 {
            let base_m = model(vec![rng.uniform()], rng.uniform(), rng.uniform());
            let base_q = query(0, rng.uniform(), rng.uniform(), rng.uniform());
            let base = label_outcome(&base_m, &base_q).rag;
            let bump = rng.uniform() * 0.5;

            // Raising knowledge, extraction, help, or robustness never
            // flips rag 1 -> 0.
            if base == 1.0 {
                let mut m = base_m.clone();
                m.knowledge[0] = (m.knowledge[0] + bump).min(1.0);
                assert_eq!(label_outcome(&m, &base_q).rag, 1.0);
                let mut m = base_m.clone();
                m.extraction = (m.extraction + bump).min(1.0);
                assert_eq!(label_outcome(&m, &base_q).rag, 1.0);
                let mut m = base_m.clone();
                m.robustness = (m.robustness + bump).min(1.0);
                assert_eq!(label_outcome(&m, &base_q).rag, 1.0);
                let mut q = base_q;
                q.doc_help = (q.doc_help + bump).min(1.0);
                assert_eq!(label_outcome(&base_m, &q).rag, 1.0);
            }
            // Raising mislead or difficulty never flips rag 0 -> 1.
            if base == 0.0 {
                let mut q = base_q;
                q.doc_mislead = (q.doc_mislead + bump).min(1.0);
                assert_eq!(label_outcome(&base_m, &q).rag, 0.0);
                let mut q = base_q;
                q.difficulty = (q.difficulty + bump).min(1.0);
                assert_eq!(label_outcome(&base_m, &q).rag, 0.0);
            }
        }
    }

    #[test]
    fn pool_is_deterministic_and_latency_sorted() {
        let (pool_a, reg_a) = generate_pool(15, 16, 3).unwrap();
        let (pool_b, _) = generate_pool(15, 16, 3).unwrap();
        assert_eq!(
            serde_json::to_string(&pool_a).unwrap(),
            serde_json::to_string(&pool_b).unwrap()
        );
        for w in pool_a.windows(2) {
            assert!(w[0].latency_ms < w[1].latency_ms);
        }
        assert!((pool_a[0].latency_ms - 20.0).abs() < 1e-9);
        assert!((pool_a[14].latency_ms - 2000.0).abs() < 1e-9);
        assert_eq!(reg_a.profile(0).name, "synth-00");
        assert_eq!(reg_a.len(), 15);
    }

    #[test]
    fn pool_rejects_tiny_counts() {
        assert!(generate_pool(1, 4, 0).is_err());
        assert!(generate_pool(4, 0, 0).is_err());
    }

    #[test]
    fn equal_mix_is_exact_round_robin() {
        let schedule = preset_schedule(2000, &NoiseMix::default());
        let mut counts = [0usize; 4];
        for p in &schedule {
            counts[*p] += 1;
        }
        assert_eq!(counts, [500, 500, 500, 500]);
        assert_eq!(&schedule[..8], &[0, 1, 2, 3, 0, 1, 2, 3]);
    }

    #[test]
    fn weighted_mix_tracks_weights() {
        let mix = NoiseMix {
            weights: [2.0, 1.0, 0.0, 1.0],
        };
        let schedule = preset_schedule(400, &mix);
        let mut counts = [0usize; 4];
        for p in &schedule {
            counts[*p] += 1;
        }
        assert_eq!(counts, [200, 100, 0, 100]);
    }

    #[test]
    fn invalid_mix_rejected() {
        let (pool, reg) = generate_pool(3, 2, 0).unwrap();
        let bad = NoiseMix {
            weights: [-1.0, 1.0, 1.0, 1.0],
        };
        assert!(generate_dataset(&pool, &reg, 10, 2, 0, &bad).is_err());
        let zero = NoiseMix {
            weights: [0.0; 4],
        };
        assert!(generate_dataset(&pool, &reg, 10, 2, 0, &zero).is_err());
    }

    #[test]
    fn dataset_regeneration_is_byte_identical() {
        let (pool, reg) = generate_pool(5, 4, 7).unwrap();
        let (ds_a, _) = generate_dataset(&pool, &reg, 100, 4, 7, &NoiseMix::default()).unwrap();
        let (ds_b, _) = generate_dataset(&pool, &reg, 100, 4, 7, &NoiseMix::default()).unwrap();

        let fa = tempfile::NamedTempFile::new().unwrap();
        let fb = tempfile::NamedTempFile::new().unwrap();
        save_response_dataset(&ds_a, fa.path()).unwrap();
        save_response_dataset(&ds_b, fb.path()).unwrap();
        assert_eq!(
            std::fs::read(fa.path()).unwrap(),
            std::fs::read(fb.path()).unwrap()
        );
    }

    #[test]
    fn labels_match_sidecar_recomputation() {
        let (pool, reg) = generate_pool(6, 8, 21).unwrap();
        let (ds, sidecar) =
            generate_dataset(&pool, &reg, 200, 8, 21, &NoiseMix::default()).unwrap();
        for (record, side) in ds.records.iter().zip(&sidecar.queries) {
            assert_eq!(record.query_id, side.query_id);
            for (m, latent) in record.outcomes.iter().zip(&sidecar.models) {
                let expected = label_outcome(latent, &side.latent);
                assert_eq!(m, &expected);
            }
        }
    }

    #[test]
    fn closed_form_oracle_accuracy_matches_labels() {
        let (pool, reg) = generate_pool(6, 8, 33).unwrap();
        let (ds, sidecar) =
            generate_dataset(&pool, &reg, 300, 8, 33, &NoiseMix::default()).unwrap();
        // From labels.
        let from_labels: f64 = ds
            .records
            .iter()
            .map(|r| r.outcomes.iter().map(|o| o.rag).fold(0.0, f64::max))
            .sum::<f64>()
            / ds.records.len() as f64;
        // From latents, independently.
        let from_latents: f64 = sidecar
            .queries
            .iter()
            .map(|q| {
                sidecar
                    .models
                    .iter()
                    .map(|m| label_outcome(m, &q.latent).rag)
                    .fold(0.0, f64::max)
            })
            .sum::<f64>()
            / sidecar.queries.len() as f64;
        assert_eq!(from_labels, from_latents);
    }

    #[test]
    fn sidecar_round_trips() {
        let (pool, reg) = generate_pool(3, 2, 50).unwrap();
        let (_, sidecar) = generate_dataset(&pool, &reg, 10, 2, 50, &NoiseMix::default()).unwrap();
        let f = tempfile::NamedTempFile::new().unwrap();
        sidecar.save(f.path()).unwrap();
        let back = SynthSidecar::load(f.path()).unwrap();
        assert_eq!(
            serde_json::to_string(&back).unwrap(),
            serde_json::to_string(&sidecar).unwrap()
        );
    }

    #[test]
    fn texts_are_nonempty_and_topic_tagged() {
        let (pool, reg) = generate_pool(3, 4, 60).unwrap();
        let (ds, sidecar) =
            generate_dataset(&pool, &reg, 20, 4, 60, &NoiseMix::default()).unwrap();
        for (r, q) in ds.records.iter().zip(&sidecar.queries) {
            let topic_token = format!("t{:02}", q.latent.topic);
            assert!(r.query_text.contains(&topic_token));
            assert!(r.doc_text.as_ref().unwrap().contains(&topic_token));
            assert!(r.doc_text.as_ref().unwrap().contains("ctx-"));
        }
    }
}
