// Diagnostic: per-tensor displacement from init after training.
use ragroute::model::{init_params, RouterParams};

fn main() {
    let trained = RouterParams::load("/tmp/e2e/router.ckpt").unwrap();
    let init = init_params(
        trained.n_models,
        trained.dim,
        trained.heads,
        trained.dim_base,
        trained.seed,
    )
    .unwrap();

    let dist = |a: &[f64], b: &[f64]| -> (f64, f64) {
        let d: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
        let n: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
        (d, n)
    };
    let report = |name: &str, a: &ragroute::diffmath::Tensor2, b: &ragroute::diffmath::Tensor2| {
        let (d, n) = dist(a.data(), b.data());
        println!("{name:>12}: |delta| {d:8.4}  |init| {n:8.4}  ratio {:.3}", d / n);
    };
    report("knowledge", &trained.knowledge, &init.knowledge);
    report("capability", &trained.capability, &init.capability);
    report("shared.w1", &trained.shared_proj.w1, &init.shared_proj.w1);
    report("shared.w2", &trained.shared_proj.w2, &init.shared_proj.w2);
    report("cross.w1", &trained.cross_proj.w1, &init.cross_proj.w1);
    report("cross.w2", &trained.cross_proj.w2, &init.cross_proj.w2);
    report("attn.wo", &trained.attn.wo, &init.attn.wo);
    report("attn.wq0", &trained.attn.wq[0], &init.attn.wq[0]);
    report("attn.wv0", &trained.attn.wv[0], &init.attn.wv[0]);

    // Norms of the query/knowledge vectors in play.
    let provider = ragroute::embed::EmbeddingProvider::feature_hash(trained.dim_base).unwrap();
    let mut tape = ragroute::diffmath::Tape::new();
    let staged = trained.stage(&mut tape);
    let vq = ragroute::model::encode_query(&mut tape, &staged, &provider, "t05a t05a t05b t05b q1").unwrap();
    let nq: f64 = tape.value(vq).data().iter().map(|x| x * x).sum::<f64>().sqrt();
    let nk: f64 = trained.knowledge.row(0).iter().map(|x| x * x).sum::<f64>().sqrt();
    println!("|v_q| = {nq:.4}, |v_k0| = {nk:.4}");
}
