// Diagnostic: is the trained router's doc path doing anything?
use ragroute::data::{load_response_dataset, ModelRegistry};
use ragroute::embed::EmbeddingProvider;
use ragroute::model::RouterParams;

fn main() {
    let reg = ModelRegistry::load("/tmp/e2e/registry.json").unwrap();
    let test = load_response_dataset("/tmp/e2e/test.jsonl", &reg).unwrap();
    let params = RouterParams::load("/tmp/e2e/router.ckpt").unwrap();
    let provider = EmbeddingProvider::feature_hash(params.dim_base).unwrap();

    let mut with_doc = 0.0;
    let mut no_doc = 0.0;
    let mut agree = 0usize;
    for r in &test.records {
        let d1 = params
            .decide(&provider, &r.query_text, r.doc_text.as_deref())
            .unwrap();
        let d2 = params.decide(&provider, &r.query_text, None).unwrap();
        with_doc += r.outcomes[d1.chosen].rag;
        no_doc += r.outcomes[d2.chosen].rag;
        if d1.chosen == d2.chosen {
            agree += 1;
        }
    }
    let n = test.records.len() as f64;
    println!("rag-label acc (doc-aware scores):   {:.4}", with_doc / n);
    println!("rag-label acc (knowledge-only):     {:.4}", no_doc / n);
    println!("decision agreement: {}/{}", agree, test.records.len());
}
