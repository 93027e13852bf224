// IR metrics for a hand-written run and qrels.

use spectral_rerank::metrics::evaluate_run;
use spectral_rerank::store::{parse_qrels, parse_run};

const QRELS: &str = "\
q1 0 a 1
q1 0 b 1
q2 0 c 1
q3 0 d 1
q3 0 e 0
";

const RUN: &str = "\
q1 0 a 1 0.9 spectral
q1 0 x 2 0.8 spectral
q1 0 b 3 0.7 spectral
q2 0 y 1 0.9 spectral
q2 0 c 2 0.5 spectral
q4 0 z 1 0.1 spectral
";

pub fn run_example() -> anyhow::Result<()> {
    let report = evaluate_run(&parse_run(RUN)?, &parse_qrels(QRELS)?, &[1, 2, 10]);
    print!("{}", report.to_table());
    for m in &report.per_query {
        println!("{}: ap={:.4} mrr={:.4} ndcg@10={:.4}", m.query_id, m.ap, m.mrr, m.ndcg[2]);
    }
    Ok(())
}

fn main() -> anyhow::Result<()> {
    run_example()
}
