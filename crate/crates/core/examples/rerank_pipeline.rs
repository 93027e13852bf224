// Two-stage retrieval on a small corpus with planted spikes: mean-pooled
// first stage, then spectral re-ranking of the top K, scored against qrels.

use std::fmt::Write as _;

use spectral_rerank::kernel::default_grid;
use spectral_rerank::metrics::evaluate_run;
use spectral_rerank::pipeline::{run_queries, PipelineConfig};
use spectral_rerank::rng::{substream, StreamKind};
use spectral_rerank::scoring::{Aggregator, SpectralScorer};
use spectral_rerank::store::{parse_qrels, CorpusStore, Dtype, QueryVector};
use spectral_rerank::synth::{gen_corpus, plant_spike, SynthSpec};

pub fn run_example() -> anyhow::Result<()> {
    let spec = SynthSpec {
        corpus_size: 200,
        len_min: 50,
        len_max: 150,
        ..SynthSpec::default()
    };
    let base = gen_corpus(&spec)?;
    let mut docs = base.docs().to_vec();
    let mut queries = Vec::new();
    let mut qrels = String::new();
    for j in 0..8 {
        let mut rng = substream(99, StreamKind::Query, j as u64);
        let q = QueryVector::normalized(format!("q{j}"), spectral_rerank::synth::sample_orthogonal_unit(
            &QueryVector::normalized("seed", vec![1.0; spec.dim])?,
            &mut rng,
        )?)?;
        let target = j * 17;
        let (planted, _) = plant_spike(&docs[target], &q, 0.7, 1, &mut rng)?;
        docs[target] = planted;
        writeln!(qrels, "{} 0 {} 1", q.query_id(), docs[target].doc_id())?;
        queries.push(q);
    }
    let store = CorpusStore::from_docs(spec.dim, Dtype::F32, docs)?;
    let qrels = parse_qrels(&qrels)?;

    let scorer = SpectralScorer::new(default_grid(), Aggregator::Max)?;
    let mut config = PipelineConfig::new(scorer);
    config.k = store.len();
    for baseline in [true, false] {
        config.first_stage_only = baseline;
        let out = run_queries(&queries, &store, &config)?;
        let report = evaluate_run(&out.entries, &qrels, &[1, 10]);
        println!(
            "{:<9} recall@1={:.3} recall@10={:.3} mrr={:.3}  (prepare {:?})",
            if baseline { "meancos" } else { "spectral" },
            report.recall(1).unwrap(),
            report.recall(10).unwrap(),
            report.mean_mrr,
            out.prepare
        );
    }
    Ok(())
}

fn main() -> anyhow::Result<()> {
    run_example()
}
