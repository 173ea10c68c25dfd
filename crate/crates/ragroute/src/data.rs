//! Data model shared by every other module: the candidate-model
//! registry, per-query outcome records, dataset i/o, splitting, and a
//! validation report.
//!
//! On disk the registry is JSON and datasets are JSONL (one record per
//! line, outcomes keyed by model *name*). At load time names resolve to
//! dense registry indices so all downstream math works on integer ids.
//! Registries keep their models sorted by an efficiency profile —
//! ascending latency, then parameter count, then name — unless every
//! entry carries an explicit `rank` override; position `i` in the
//! sorted list is the id used everywhere else.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::rng::DetRng;

/// One candidate model: identity plus the efficiency profile used for
/// latency-aware routing.
#[derive(Clone, Debug, PartialEq)]
pub struct LLMProfile {
    pub model_id: usize,
    pub name: String,
    pub params_b: f64,
    pub latency_ms: f64,
}

/// Registry entry as written in the JSON file.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ProfileSpec {
    pub name: String,
    pub params_b: f64,
    pub latency_ms: f64,
    #[serde(default)]
    pub rank: Option<i64>,
}

#[derive(Serialize, Deserialize)]
struct RegistryFile {
    models: Vec<ProfileSpec>,
}

/// Ordered model pool; index i is the i-th most efficient model.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelRegistry {
    profiles: Vec<LLMProfile>,
}

impl ModelRegistry {
    /// Builds a registry, sorting by explicit rank when given (it must
    /// then be present and unique on every entry) and by the default
    /// efficiency key otherwise.
    pub fn from_specs(mut specs: Vec<ProfileSpec>) -> Result<Self> {
        if specs.is_empty() {
            return Err(Error::Invalid("registry has no models".into()));
        }
        let mut seen = BTreeSet::new();
        for s in &specs {
            if s.name.trim().is_empty() {
                return Err(Error::Invalid("model name must be non-empty".into()));
            }
            if !seen.insert(s.name.clone()) {
                return Err(Error::Invalid(format!("duplicate model name {:?}", s.name)));
            }
            if !(s.latency_ms > 0.0) {
                return Err(Error::Invalid(format!(
                    "model {:?}: latency_ms must be > 0, got {}",
                    s.name, s.latency_ms
                )));
            }
            if !(s.params_b > 0.0) {
                return Err(Error::Invalid(format!(
                    "model {:?}: params_b must be > 0, got {}",
                    s.name, s.params_b
                )));
            }
        }

        let ranked = specs.iter().filter(|s| s.rank.is_some()).count();
        if ranked > 0 && ranked < specs.len() {
            return Err(Error::Invalid(
                "rank must be set on all models or on none".into(),
            ));
        }
        if ranked > 0 {
            let mut ranks = BTreeSet::new();
            for s in &specs {
                if !ranks.insert(s.rank.unwrap()) {
                    return Err(Error::Invalid(format!(
                        "duplicate rank {} in registry",
                        s.rank.unwrap()
                    )));
                }
            }
            specs.sort_by_key(|s| s.rank.unwrap());
        } else {
            specs.sort_by(|a, b| {
                a.latency_ms
                    .total_cmp(&b.latency_ms)
                    .then(a.params_b.total_cmp(&b.params_b))
                    .then(a.name.cmp(&b.name))
            });
        }

        let profiles = specs
            .into_iter()
            .enumerate()
            .map(|(model_id, s)| LLMProfile {
                model_id,
                name: s.name,
                params_b: s.params_b,
                latency_ms: s.latency_ms,
            })
            .collect();
        Ok(Self { profiles })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = fs::read_to_string(&path)?;
        let file: RegistryFile = serde_json::from_str(&text)?;
        Self::from_specs(file.models)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let file = RegistryFile {
            models: self
                .profiles
                .iter()
                .map(|p| ProfileSpec {
                    name: p.name.clone(),
                    params_b: p.params_b,
                    latency_ms: p.latency_ms,
                    rank: None,
                })
                .collect(),
        };
        let mut out = serde_json::to_string_pretty(&file)?;
        out.push('\n');
        fs::write(path, out)?;
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.profiles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.profiles.is_empty()
    }

    pub fn profiles(&self) -> &[LLMProfile] {
        &self.profiles
    }

    pub fn profile(&self, model_id: usize) -> &LLMProfile {
        &self.profiles[model_id]
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.profiles.iter().position(|p| p.name == name)
    }

    /// Latencies in registry order, converted to seconds.
    pub fn latencies_s(&self) -> Vec<f64> {
        self.profiles.iter().map(|p| p.latency_ms / 1000.0).collect()
    }
}

/// Correctness of one model on one query, without and with documents.
/// Binary tasks use exactly {0,1}; continuous tasks store a normalized
/// score in [0,1].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Outcome {
    pub no_rag: f64,
    pub rag: f64,
}

impl Outcome {
    pub fn validate(&self) -> Result<()> {
        for v in [self.no_rag, self.rag] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::Invalid(format!("label outside [0,1]: {v}")));
            }
        }
        Ok(())
    }

    pub fn is_binary(&self) -> bool {
        (self.no_rag == 0.0 || self.no_rag == 1.0) && (self.rag == 0.0 || self.rag == 1.0)
    }
}

/// One query with its (optional) retrieved context and per-model labels,
/// indexed by registry id.
#[derive(Clone, Debug, PartialEq)]
pub struct ResponseRecord {
    pub query_id: String,
    pub task: String,
    pub query_text: String,
    pub doc_text: Option<String>,
    pub outcomes: Vec<Outcome>,
}

/// Validated set of records plus the registry they refer to.
#[derive(Clone, Debug)]
pub struct ResponseDataset {
    pub records: Vec<ResponseRecord>,
    pub registry: ModelRegistry,
}

#[derive(Serialize, Deserialize)]
struct RecordJson {
    query_id: String,
    task: String,
    query_text: String,
    doc_text: Option<String>,
    outcomes: BTreeMap<String, Outcome>,
}

/// Loads a JSONL dataset, resolving model names to registry indices.
/// Every record must carry a label pair for every registry model.
pub fn load_response_dataset(
    path: impl AsRef<Path>,
    registry: &ModelRegistry,
) -> Result<ResponseDataset> {
    let path_str = path.as_ref().display().to_string();
    let file = fs::File::open(&path)?;
    let reader = BufReader::new(file);

    let mut records = Vec::new();
    let mut seen_ids = BTreeSet::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let raw: RecordJson = serde_json::from_str(&line).map_err(|e| Error::Parse {
            path: path_str.clone(),
            line: line_no,
            msg: format!("malformed record: {e}"),
        })?;

        if raw.query_id.trim().is_empty() {
            return Err(Error::Parse {
                path: path_str.clone(),
                line: line_no,
                msg: "query_id must be non-empty".into(),
            });
        }
        if !seen_ids.insert(raw.query_id.clone()) {
            return Err(Error::DuplicateQueryId(raw.query_id));
        }
        if raw.query_text.trim().is_empty() {
            return Err(Error::Parse {
                path: path_str.clone(),
                line: line_no,
                msg: "query_text must be non-empty".into(),
            });
        }

        let mut outcomes = vec![None; registry.len()];
        for (name, outcome) in &raw.outcomes {
            let id = registry
                .index_of(name)
                .ok_or_else(|| Error::UnknownModel(name.clone()))?;
            for v in [outcome.no_rag, outcome.rag] {
                if !(0.0..=1.0).contains(&v) {
                    return Err(Error::LabelOutOfRange {
                        line: line_no,
                        value: v,
                    });
                }
            }
            outcomes[id] = Some(*outcome);
        }
        let outcomes: Vec<Outcome> = outcomes
            .into_iter()
            .enumerate()
            .map(|(id, o)| {
                o.ok_or_else(|| Error::Parse {
                    path: path_str.clone(),
                    line: line_no,
                    msg: format!("missing outcome for model {:?}", registry.profile(id).name),
                })
            })
            .collect::<Result<_>>()?;

        records.push(ResponseRecord {
            query_id: raw.query_id,
            task: raw.task,
            query_text: raw.query_text,
            doc_text: raw.doc_text,
            outcomes,
        });
    }

    Ok(ResponseDataset {
        records,
        registry: registry.clone(),
    })
}

/// Writes a dataset back out as JSONL, outcomes keyed by model name in
/// sorted order so bytes are reproducible.
pub fn save_response_dataset(ds: &ResponseDataset, path: impl AsRef<Path>) -> Result<()> {
    let mut out = fs::File::create(path)?;
    for r in &ds.records {
        let outcomes: BTreeMap<String, Outcome> = r
            .outcomes
            .iter()
            .enumerate()
            .map(|(id, o)| (ds.registry.profile(id).name.clone(), *o))
            .collect();
        let raw = RecordJson {
            query_id: r.query_id.clone(),
            task: r.task.clone(),
            query_text: r.query_text.clone(),
            doc_text: r.doc_text.clone(),
            outcomes,
        };
        serde_json::to_writer(&mut out, &raw)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

/// Deterministic train/test split. The partition is keyed on the sorted
/// query_id list, so permuting the input records does not change which
/// ids land where. Test size is round(test_fraction * n).
pub fn split_dataset(
    ds: &ResponseDataset,
    test_fraction: f64,
    seed: u64,
) -> Result<(ResponseDataset, ResponseDataset)> {
    if ds.records.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::InvalidFraction(test_fraction));
    }
    let mut ids: Vec<&str> = ds.records.iter().map(|r| r.query_id.as_str()).collect();
    ids.sort_unstable();
    let mut rng = DetRng::seed_from_u64(seed);
    rng.shuffle(&mut ids);
    let test_n = (test_fraction * ds.records.len() as f64).round() as usize;
    let test_ids: BTreeSet<&str> = ids[..test_n].iter().copied().collect();

    let mut train = Vec::new();
    let mut test = Vec::new();
    for r in &ds.records {
        if test_ids.contains(r.query_id.as_str()) {
            test.push(r.clone());
        } else {
            train.push(r.clone());
        }
    }
    Ok((
        ResponseDataset {
            records: train,
            registry: ds.registry.clone(),
        },
        ResponseDataset {
            records: test,
            registry: ds.registry.clone(),
        },
    ))
}

/// Whether a task's labels are exactly {0,1} or continuous in [0,1].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelType {
    Binary,
    Continuous,
}

/// Per-model positive counts for one dataset. A label counts as
/// positive when it is >= 0.5.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct ModelLabelCounts {
    pub no_rag_positive: usize,
    pub rag_positive: usize,
}

/// Report-only dataset summary.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ValidationReport {
    pub records: usize,
    pub per_model: Vec<ModelLabelCounts>,
    pub missing_doc: usize,
    pub label_type: BTreeMap<String, LabelType>,
}

pub fn validate_dataset(ds: &ResponseDataset) -> ValidationReport {
    let mut per_model = vec![ModelLabelCounts::default(); ds.registry.len()];
    let mut missing_doc = 0;
    let mut label_type: BTreeMap<String, LabelType> = BTreeMap::new();

    for r in &ds.records {
        if r.doc_text.is_none() {
            missing_doc += 1;
        }
        let binary = r.outcomes.iter().all(Outcome::is_binary);
        label_type
            .entry(r.task.clone())
            .and_modify(|t| {
                if !binary {
                    *t = LabelType::Continuous;
                }
            })
            .or_insert(if binary {
                LabelType::Binary
            } else {
                LabelType::Continuous
            });
        for (id, o) in r.outcomes.iter().enumerate() {
            if o.no_rag >= 0.5 {
                per_model[id].no_rag_positive += 1;
            }
            if o.rag >= 0.5 {
                per_model[id].rag_positive += 1;
            }
        }
    }

    ValidationReport {
        records: ds.records.len(),
        per_model,
        missing_doc,
        label_type,
    }
}

/// SHA-256 of a file's bytes, lowercase hex. Used as the dataset digest
/// recorded in run manifests.
pub fn sha256_file(path: impl AsRef<Path>) -> Result<String> {
    let bytes = fs::read(path)?;
    let mut hasher = Sha256::new();
    hasher.update(&bytes);
    let digest = hasher.finalize();
    Ok(digest.iter().map(|b| format!("{b:02x}")).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_model_registry() -> ModelRegistry {
        ModelRegistry::from_specs(vec![
            ProfileSpec {
                name: "beta".into(),
                params_b: 7.0,
                latency_ms: 80.0,
                rank: None,
            },
            ProfileSpec {
                name: "alpha".into(),
                params_b: 1.0,
                latency_ms: 20.0,
                rank: None,
            },
        ])
        .unwrap()
    }

    fn write_jsonl(lines: &[&str]) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        for l in lines {
            writeln!(f, "{l}").unwrap();
        }
        f
    }

    #[test]
    fn registry_sorts_by_latency_then_params_then_name() {
        let reg = ModelRegistry::from_specs(vec![
            ProfileSpec {
                name: "c".into(),
                params_b: 2.0,
                latency_ms: 20.0,
                rank: None,
            },
            ProfileSpec {
                name: "b".into(),
                params_b: 1.0,
                latency_ms: 20.0,
                rank: None,
            },
            ProfileSpec {
                name: "a".into(),
                params_b: 9.0,
                latency_ms: 10.0,
                rank: None,
            },
        ])
        .unwrap();
        let names: Vec<&str> = reg.profiles().iter().map(|p| p.name.as_str()).collect();
        assert_eq!(names, ["a", "b", "c"]);
        assert_eq!(reg.profile(0).model_id, 0);
    }

    #[test]
    fn registry_order_ignores_input_permutation() {
        let specs = vec![
            ProfileSpec {
                name: "x".into(),
                params_b: 1.0,
                latency_ms: 50.0,
                rank: None,
            },
            ProfileSpec {
                name: "y".into(),
                params_b: 2.0,
                latency_ms: 25.0,
                rank: None,
            },
            ProfileSpec {
                name: "z".into(),
                params_b: 3.0,
                latency_ms: 75.0,
                rank: None,
            },
        ];
        let a = ModelRegistry::from_specs(specs.clone()).unwrap();
        let mut rev = specs;
        rev.reverse();
        let b = ModelRegistry::from_specs(rev).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn explicit_rank_overrides_efficiency_order() {
        let reg = ModelRegistry::from_specs(vec![
            ProfileSpec {
                name: "slow".into(),
                params_b: 9.0,
                latency_ms: 900.0,
                rank: Some(0),
            },
            ProfileSpec {
                name: "fast".into(),
                params_b: 1.0,
                latency_ms: 10.0,
                rank: Some(1),
            },
        ])
        .unwrap();
        assert_eq!(reg.profile(0).name, "slow");
    }

    #[test]
    fn partial_rank_rejected() {
        let err = ModelRegistry::from_specs(vec![
            ProfileSpec {
                name: "a".into(),
                params_b: 1.0,
                latency_ms: 1.0,
                rank: Some(0),
            },
            ProfileSpec {
                name: "b".into(),
                params_b: 1.0,
                latency_ms: 2.0,
                rank: None,
            },
        ]);
        assert!(err.is_err());
    }

    #[test]
    fn load_three_valid_records() {
        let reg = two_model_registry();
        let f = write_jsonl(&[
            r#"{"query_id":"q1","task":"t","query_text":"one","doc_text":"d","outcomes":{"alpha":{"no_rag":1,"rag":0},"beta":{"no_rag":0,"rag":1}}}"#,
            r#"{"query_id":"q2","task":"t","query_text":"two","doc_text":null,"outcomes":{"alpha":{"no_rag":0,"rag":0},"beta":{"no_rag":1,"rag":1}}}"#,
            r#"{"query_id":"q3","task":"t","query_text":"three","doc_text":"d3","outcomes":{"alpha":{"no_rag":1,"rag":1},"beta":{"no_rag":0,"rag":0}}}"#,
        ]);
        let ds = load_response_dataset(f.path(), &reg).unwrap();
        assert_eq!(ds.records.len(), 3);
        assert!(ds.records.iter().all(|r| r.outcomes.len() == 2));
        // "alpha" sorts first by latency.
        assert_eq!(ds.records[0].outcomes[0].no_rag, 1.0);
    }

    #[test]
    fn label_out_of_range_reports_line() {
        let reg = two_model_registry();
        let f = write_jsonl(&[
            r#"{"query_id":"q1","task":"t","query_text":"x","doc_text":null,"outcomes":{"alpha":{"no_rag":1,"rag":0},"beta":{"no_rag":0,"rag":0}}}"#,
            r#"{"query_id":"q2","task":"t","query_text":"y","doc_text":null,"outcomes":{"alpha":{"no_rag":1.5,"rag":0},"beta":{"no_rag":0,"rag":0}}}"#,
        ]);
        match load_response_dataset(f.path(), &reg) {
            Err(Error::LabelOutOfRange { line, value }) => {
                assert_eq!(line, 2);
                assert_eq!(value, 1.5);
            }
            other => panic!("expected LabelOutOfRange, got {other:?}"),
        }
    }

    #[test]
    fn unknown_model_named_in_error() {
        let reg = two_model_registry();
        let f = write_jsonl(&[
            r#"{"query_id":"q1","task":"t","query_text":"x","doc_text":null,"outcomes":{"X":{"no_rag":1,"rag":0}}}"#,
        ]);
        match load_response_dataset(f.path(), &reg) {
            Err(Error::UnknownModel(name)) => assert_eq!(name, "X"),
            other => panic!("expected UnknownModel, got {other:?}"),
        }
    }

    #[test]
    fn duplicate_query_id_rejected() {
        let reg = two_model_registry();
        let row = r#"{"query_id":"q1","task":"t","query_text":"x","doc_text":null,"outcomes":{"alpha":{"no_rag":1,"rag":0},"beta":{"no_rag":0,"rag":0}}}"#;
        let f = write_jsonl(&[row, row]);
        assert!(matches!(
            load_response_dataset(f.path(), &reg),
            Err(Error::DuplicateQueryId(_))
        ));
    }

    #[test]
    fn missing_model_outcome_rejected() {
        let reg = two_model_registry();
        let f = write_jsonl(&[
            r#"{"query_id":"q1","task":"t","query_text":"x","doc_text":null,"outcomes":{"alpha":{"no_rag":1,"rag":0}}}"#,
        ]);
        match load_response_dataset(f.path(), &reg) {
            Err(Error::Parse { msg, .. }) => assert!(msg.contains("beta"), "{msg}"),
            other => panic!("expected Parse error, got {other:?}"),
        }
    }

    #[test]
    fn save_load_round_trip_preserves_fields() {
        let reg = two_model_registry();
        let ds = ResponseDataset {
            records: vec![ResponseRecord {
                query_id: "q9".into(),
                task: "demo".into(),
                query_text: "some query".into(),
                doc_text: Some("context blob".into()),
                outcomes: vec![
                    Outcome {
                        no_rag: 0.25,
                        rag: 1.0,
                    },
                    Outcome {
                        no_rag: 0.0,
                        rag: 0.5,
                    },
                ],
            }],
            registry: reg.clone(),
        };
        let f = tempfile::NamedTempFile::new().unwrap();
        save_response_dataset(&ds, f.path()).unwrap();
        let back = load_response_dataset(f.path(), &reg).unwrap();
        assert_eq!(back.records, ds.records);
    }

    fn toy_dataset(n: usize) -> ResponseDataset {
        let reg = two_model_registry();
        let records = (0..n)
            .map(|i| ResponseRecord {
                query_id: format!("q{i:03}"),
                task: "t".into(),
                query_text: format!("query {i}"),
                doc_text: Some("doc".into()),
                outcomes: vec![
                    Outcome {
                        no_rag: (i % 2) as f64,
                        rag: 1.0,
                    },
                    Outcome {
                        no_rag: 0.0,
                        rag: (i % 3 == 0) as u8 as f64,
                    },
                ],
            })
            .collect();
        ResponseDataset {
            records,
            registry: reg,
        }
    }

    #[test]
    fn split_sizes_and_determinism() {
        let ds = toy_dataset(10);
        let (train, test) = split_dataset(&ds, 0.2, 7).unwrap();
        assert_eq!(train.records.len(), 8);
        assert_eq!(test.records.len(), 2);
        let (train2, test2) = split_dataset(&ds, 0.2, 7).unwrap();
        assert_eq!(
            train.records.iter().map(|r| &r.query_id).collect::<Vec<_>>(),
            train2.records.iter().map(|r| &r.query_id).collect::<Vec<_>>()
        );
        assert_eq!(test.records[0].query_id, test2.records[0].query_id);
    }

    #[test]
    fn split_half_of_two() {
        let ds = toy_dataset(2);
        let (train, test) = split_dataset(&ds, 0.5, 1).unwrap();
        assert_eq!(train.records.len(), 1);
        assert_eq!(test.records.len(), 1);
    }

    #[test]
    fn split_partition_is_input_order_invariant() {
        let ds = toy_dataset(20);
        let mut shuffled = ds.clone();
        let mut rng = DetRng::seed_from_u64(99);
        rng.shuffle(&mut shuffled.records);

        let ids = |d: &ResponseDataset| -> BTreeSet<String> {
            d.records.iter().map(|r| r.query_id.clone()).collect()
        };
        let (tr_a, te_a) = split_dataset(&ds, 0.3, 5).unwrap();
        let (tr_b, te_b) = split_dataset(&shuffled, 0.3, 5).unwrap();
        assert_eq!(ids(&tr_a), ids(&tr_b));
        assert_eq!(ids(&te_a), ids(&te_b));
        assert!(ids(&tr_a).is_disjoint(&ids(&te_a)));
        assert_eq!(ids(&tr_a).len() + ids(&te_a).len(), 20);
    }

    #[test]
    fn split_rejects_bad_inputs() {
        let ds = toy_dataset(4);
        assert!(matches!(
            split_dataset(&ds, 0.0, 1),
            Err(Error::InvalidFraction(_))
        ));
        assert!(matches!(
            split_dataset(&ds, 1.0, 1),
            Err(Error::InvalidFraction(_))
        ));
        let empty = ResponseDataset {
            records: vec![],
            registry: two_model_registry(),
        };
        assert!(matches!(
            split_dataset(&empty, 0.5, 1),
            Err(Error::EmptyDataset)
        ));
    }

    #[test]
    fn validation_report_counts() {
        let mut ds = toy_dataset(6);
        ds.records[2].doc_text = None;
        let report = validate_dataset(&ds);
        assert_eq!(report.records, 6);
        assert_eq!(report.missing_doc, 1);
        // Model 0 rag label is always 1.0 in the toy data.
        assert_eq!(report.per_model[0].rag_positive, 6);
        assert_eq!(report.label_type["t"], LabelType::Binary);
    }

    #[test]
    fn validation_marks_continuous_tasks() {
        let mut ds = toy_dataset(2);
        ds.records[1].task = "rouge".into();
        ds.records[1].outcomes[0].rag = 0.37;
        let report = validate_dataset(&ds);
        assert_eq!(report.label_type["t"], LabelType::Binary);
        assert_eq!(report.label_type["rouge"], LabelType::Continuous);
    }

    #[test]
    fn registry_save_load_round_trip() {
        let reg = two_model_registry();
        let f = tempfile::NamedTempFile::new().unwrap();
        reg.save(f.path()).unwrap();
        let back = ModelRegistry::load(f.path()).unwrap();
        assert_eq!(back, reg);
    }
}
