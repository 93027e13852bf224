use spectral_rerank::metrics::evaluate_run;
use spectral_rerank::store::{parse_qrels, parse_run, Qrels};

const QRELS: &str = "q1 0 a 1\nq1 0 b 1\nq2 0 c 1\nq3 0 d 1\nq3 0 e 0\nq5 0 f 0\n";
const RUN: &str = "\
q1 0 a 1 0.9 t
q1 0 x 2 0.8 t
q1 0 b 3 0.7 t
q2 0 y 1 0.9 t
q2 0 c 2 0.5 t
q4 0 z 1 0.1 t
";

fn close(a: f64, b: f64) {
    assert!((a - b).abs() < 1e-12, "{a} vs {b}");
}

#[test]
fn three_query_fixture_matches_hand_computation() {
    let r = evaluate_run(&parse_run(RUN).unwrap(), &parse_qrels(QRELS).unwrap(), &[1, 2, 10]);
    let inv_log3 = 1.0 / 3f64.log2();
    // q1: relevant {a, b} at ranks 1 and 3; q2: {c} at rank 2; q3: {d} not retrieved.
    let q1 = &r.per_query[0];
    assert_eq!(q1.recall, [0.5, 0.5, 1.0]);
    assert_eq!(q1.success, [0.0, 0.0, 1.0]);
    close(q1.ap, (1.0 + 2.0 / 3.0) / 2.0);
    close(q1.ndcg[1], 1.0 / (1.0 + inv_log3));
    close(q1.ndcg[2], 1.5 / (1.0 + inv_log3));
    let q2 = &r.per_query[1];
    assert_eq!(q2.recall, [0.0, 1.0, 1.0]);
    close(q2.mrr, 0.5);
    close(q2.ndcg[1], inv_log3);
    let q3 = &r.per_query[2];
    assert_eq!((q3.mrr, q3.ap, q3.ndcg[2]), (0.0, 0.0, 0.0));

    assert_eq!(r.num_queries(), 3);
    assert_eq!(r.skipped_unjudged, 1);
    assert_eq!(r.skipped_no_relevant, 1);
    assert_eq!(r.relevant_histogram.get(&1), Some(&2));
    assert_eq!(r.relevant_histogram.get(&2), Some(&1));
    close(r.recall(1).unwrap(), 0.5 / 3.0);
    close(r.recall(10).unwrap(), 2.0 / 3.0);
    close(r.mean_mrr, 0.5);
    close(r.mean_ap, (5.0 / 6.0 + 0.5) / 3.0);
    close(r.ndcg(2).unwrap(), (1.0 / (1.0 + inv_log3) + inv_log3) / 3.0);
}

#[test]
fn perfect_and_empty_runs() {
    let qrels = parse_qrels("q1 0 a 1\nq1 0 b 1\nq2 0 c 1\n").unwrap();
    let perfect = parse_run("q1 0 a 1 2 t\nq1 0 b 2 1 t\nq2 0 c 1 1 t\n").unwrap();
    let r = evaluate_run(&perfect, &qrels, &[2, 10]);
    assert!(r.rows().iter().all(|(_, v)| *v == 1.0), "{:?}", r.rows());
    let r = evaluate_run(&[], &qrels, &[2, 10]);
    assert!(r.rows().iter().all(|(_, v)| *v == 0.0));
    assert_eq!(r.num_queries(), 2);
}

#[test]
fn random_success_baseline() {
    // Two relevant among 46: a random ordering puts both in the top 2 with probability 1 / C(46, 2).
    let expected = 1.0 / (46.0 * 45.0 / 2.0);
    close(expected, 0.000_966_183_574_879_227);
    let mut qrels = Qrels::default();
    assert!(qrels.insert("q", "d0", 1));
    assert!(qrels.insert("q", "d1", 1));
    let mut hits = 0;
    let mut total = 0;
    for i in 0..46 {
        for j in 0..46 {
            if i == j {
                continue;
            }
            let text = format!("q 0 d{i} 1 1 t\nq 0 d{j} 2 0.5 t\n");
            let r = evaluate_run(&parse_run(&text).unwrap(), &qrels, &[2]);
            hits += (r.success(2).unwrap() == 1.0) as usize;
            total += 1;
        }
    }
    close(hits as f64 / total as f64, expected);
}
