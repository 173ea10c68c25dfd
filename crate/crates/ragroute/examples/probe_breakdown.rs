// Diagnostic: per-preset accuracy of router vs cell-blind/list oracles.
use std::collections::BTreeMap;

use ragroute::data::{load_response_dataset, ModelRegistry};
use ragroute::embed::EmbeddingProvider;
use ragroute::model::RouterParams;

fn main() {
    let reg = ModelRegistry::load("/tmp/e2e/registry.json").unwrap();
    let train = load_response_dataset("/tmp/e2e/train.jsonl", &reg).unwrap();
    let test = load_response_dataset("/tmp/e2e/test.jsonl", &reg).unwrap();
    let params = RouterParams::load("/tmp/e2e/router.ckpt").unwrap();
    let provider = EmbeddingProvider::feature_hash(params.dim_base).unwrap();
    let n = reg.len();

    // Cell = topic token prefix of query text.
    let topic_of = |text: &str| text.split_whitespace().next().unwrap().to_string();

    // Train-set per-(topic) blind scores and per-(topic, preset) aware scores.
    let mut blind: BTreeMap<String, Vec<(f64, f64)>> = BTreeMap::new();
    let mut aware: BTreeMap<(String, String), Vec<(f64, f64)>> = BTreeMap::new();
    for r in &train.records {
        let t = topic_of(&r.query_text);
        let b = blind.entry(t.clone()).or_insert_with(|| vec![(0.0, 0.0); n]);
        for (i, o) in r.outcomes.iter().enumerate() {
            b[i].0 += o.rag;
            b[i].1 += 1.0;
        }
        let a = aware
            .entry((t, r.task.clone()))
            .or_insert_with(|| vec![(0.0, 0.0); n]);
        for (i, o) in r.outcomes.iter().enumerate() {
            a[i].0 += o.rag;
            a[i].1 += 1.0;
        }
    }
    let argmax = |scores: &[(f64, f64)]| -> usize {
        let mut best = 0;
        let mut bv = f64::MIN;
        for (i, (s, c)) in scores.iter().enumerate() {
            let v = if *c > 0.0 { s / c } else { 0.0 };
            if v > bv {
                bv = v;
                best = i;
            }
        }
        best
    };

    let mut acc: BTreeMap<String, [f64; 5]> = BTreeMap::new(); // router, doc-less, blind, aware, count
    for r in &test.records {
        let t = topic_of(&r.query_text);
        let d1 = params
            .decide(&provider, &r.query_text, r.doc_text.as_deref())
            .unwrap();
        let d2 = params.decide(&provider, &r.query_text, None).unwrap();
        let b = argmax(&blind[&t]);
        let a = argmax(&aware[&(t.clone(), r.task.clone())]);
        let e = acc.entry(r.task.clone()).or_insert([0.0; 5]);
        e[0] += r.outcomes[d1.chosen].rag;
        e[1] += r.outcomes[d2.chosen].rag;
        e[2] += r.outcomes[b].rag;
        e[3] += r.outcomes[a].rag;
        e[4] += 1.0;
    }
    println!("{:>16} {:>7} {:>8} {:>7} {:>7}", "preset", "router", "no-doc", "blind", "aware");
    let mut tot = [0.0; 5];
    for (task, v) in &acc {
        println!(
            "{:>16} {:>7.3} {:>8.3} {:>7.3} {:>7.3}",
            task,
            v[0] / v[4],
            v[1] / v[4],
            v[2] / v[4],
            v[3] / v[4]
        );
        for i in 0..5 {
            tot[i] += v[i];
        }
    }
    println!(
        "{:>16} {:>7.3} {:>8.3} {:>7.3} {:>7.3}",
        "ALL",
        tot[0] / tot[4],
        tot[1] / tot[4],
        tot[2] / tot[4],
        tot[3] / tot[4]
    );
}
