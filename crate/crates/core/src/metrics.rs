//! Ranking metrics over TREC runs and qrels.
//!
//! Metrics consume an already-ordered ranking and do no tie handling of
//! their own. A document is relevant when its grade is positive. Every
//! per-query function returns `None` when the query has no relevant
//! documents; such queries are skipped.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt::Write as _;
use std::path::Path;

use crate::pipeline::RunEntry;
use crate::store::{read_qrels, read_run, Qrels};
use crate::Result;

/// Standard cutoffs for `eval`.
pub const DEFAULT_K_LIST: [usize; 5] = [1, 2, 5, 10, 20];

fn hits_in_top_k(ranked: &[&str], relevant: &HashSet<&str>, k: usize) -> usize {
    assert!(k >= 1, "cutoff must be >= 1");
    let top: HashSet<&str> = ranked.iter().take(k).copied().collect();
    top.iter().filter(|d| relevant.contains(*d)).count()
}

/// `|top-k ∩ relevant| / |relevant|`.
pub fn recall_at_k(ranked: &[&str], relevant: &HashSet<&str>, k: usize) -> Option<f64> {
    if relevant.is_empty() {
        return None;
    }
    Some(hits_in_top_k(ranked, relevant, k) as f64 / relevant.len() as f64)
}

/// 1 when every relevant document is in the top `k`, else 0.
pub fn success_at_k(ranked: &[&str], relevant: &HashSet<&str>, k: usize) -> Option<f64> {
    if relevant.is_empty() {
        return None;
    }
    Some(if hits_in_top_k(ranked, relevant, k) == relevant.len() {
        1.0
    } else {
        0.0
    })
}

/// Reciprocal rank of the first relevant document, 0 if none is retrieved.
pub fn mrr(ranked: &[&str], relevant: &HashSet<&str>) -> Option<f64> {
    if relevant.is_empty() {
        return None;
    }
    Some(
        ranked
            .iter()
            .position(|d| relevant.contains(d))
            .map_or(0.0, |i| 1.0 / (i + 1) as f64),
    )
}

/// Mean over relevant documents of precision at their rank; unretrieved
/// relevant documents contribute 0.
pub fn average_precision(ranked: &[&str], relevant: &HashSet<&str>) -> Option<f64> {
    if relevant.is_empty() {
        return None;
    }
    let mut seen = HashSet::new();
    let mut hits = 0usize;
    let mut sum = 0.0;
    for (i, d) in ranked.iter().enumerate() {
        if relevant.contains(d) && seen.insert(*d) {
            hits += 1;
            sum += hits as f64 / (i + 1) as f64;
        }
    }
    Some(sum / relevant.len() as f64)
}

/// NDCG@k with gain = grade and discount `1 / log2(rank + 1)`.
pub fn ndcg_at_k(ranked: &[&str], grades: &HashMap<&str, u32>, k: usize) -> Option<f64> {
    assert!(k >= 1, "cutoff must be >= 1");
    let mut ideal: Vec<u32> = grades.values().copied().filter(|&g| g > 0).collect();
    if ideal.is_empty() {
        return None;
    }
    ideal.sort_unstable_by(|a, b| b.cmp(a));
    let discount = |rank: usize| 1.0 / ((rank + 1) as f64).log2();
    let mut seen = HashSet::new();
    let dcg: f64 = ranked
        .iter()
        .take(k)
        .enumerate()
        .filter(|(_, d)| seen.insert(**d))
        .map(|(i, d)| f64::from(grades.get(d).copied().unwrap_or(0)) * discount(i + 1))
        .fold(0.0, |a, b| a + b);
    let idcg: f64 = ideal
        .iter()
        .take(k)
        .enumerate()
        .map(|(i, &g)| f64::from(g) * discount(i + 1))
        .sum();
    Some(dcg / idcg)
}

/// Metric values for one judged query.
#[derive(Debug, Clone, PartialEq)]
pub struct QueryMetrics {
    pub query_id: String,
    pub num_relevant: usize,
    /// Aligned with [`MetricsReport::k_list`].
    pub recall: Vec<f64>,
    pub success: Vec<f64>,
    pub ndcg: Vec<f64>,
    pub mrr: f64,
    pub ap: f64,
}

/// Per-query metrics and their means.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub k_list: Vec<usize>,
    /// In query-id order.
    pub per_query: Vec<QueryMetrics>,
    pub mean_recall: Vec<f64>,
    pub mean_success: Vec<f64>,
    pub mean_ndcg: Vec<f64>,
    pub mean_mrr: f64,
    pub mean_ap: f64,
    /// Queries present in the run but not in the qrels.
    pub skipped_unjudged: usize,
    /// Judged queries without any positive grade.
    pub skipped_no_relevant: usize,
    /// Number of relevant documents -> number of queries.
    pub relevant_histogram: BTreeMap<usize, usize>,
}

impl MetricsReport {
    pub fn num_queries(&self) -> usize {
        self.per_query.len()
    }

    fn k_pos(&self, k: usize) -> Option<usize> {
        self.k_list.iter().position(|&x| x == k)
    }

    pub fn recall(&self, k: usize) -> Option<f64> {
        Some(self.mean_recall[self.k_pos(k)?])
    }

    pub fn success(&self, k: usize) -> Option<f64> {
        Some(self.mean_success[self.k_pos(k)?])
    }

    pub fn ndcg(&self, k: usize) -> Option<f64> {
        Some(self.mean_ndcg[self.k_pos(k)?])
    }

    /// `(metric, value)` pairs in output order.
    pub fn rows(&self) -> Vec<(String, f64)> {
        let mut rows = Vec::new();
        for (i, k) in self.k_list.iter().enumerate() {
            rows.push((format!("recall@{k}"), self.mean_recall[i]));
        }
        for (i, k) in self.k_list.iter().enumerate() {
            rows.push((format!("success@{k}"), self.mean_success[i]));
        }
        for (i, k) in self.k_list.iter().enumerate() {
            rows.push((format!("ndcg@{k}"), self.mean_ndcg[i]));
        }
        rows.push(("mrr".into(), self.mean_mrr));
        rows.push(("map".into(), self.mean_ap));
        rows
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("metric,value\n");
        for (name, v) in self.rows() {
            let _ = writeln!(out, "{name},{v:.4}");
        }
        out
    }

    pub fn to_table(&self) -> String {
        let rows = self.rows();
        let width = rows.iter().map(|(n, _)| n.len()).max().unwrap_or(6).max(6);
        let mut out = format!("{:<width$}  {:>6}\n", "metric", "value");
        for (name, v) in rows {
            let _ = writeln!(out, "{name:<width$}  {v:>6.4}");
        }
        let _ = writeln!(
            out,
            "queries: {} (skipped: {} unjudged, {} without relevant documents)",
            self.num_queries(),
            self.skipped_unjudged,
            self.skipped_no_relevant
        );
        out
    }
}

/// Evaluates a run file against a qrels file.
pub fn evaluate(run_path: impl AsRef<Path>, qrels_path: impl AsRef<Path>, k_list: &[usize]) -> Result<MetricsReport> {
    let run = read_run(run_path)?;
    let qrels = read_qrels(qrels_path)?;
    Ok(evaluate_run(&run, &qrels, k_list))
}

/// Judged queries missing from the run score 0 on every metric.
pub fn evaluate_run(run: &[RunEntry], qrels: &Qrels, k_list: &[usize]) -> MetricsReport {
    let mut by_query: BTreeMap<&str, Vec<&RunEntry>> = BTreeMap::new();
    for e in run {
        by_query.entry(e.query_id.as_str()).or_default().push(e);
    }
    for entries in by_query.values_mut() {
        entries.sort_by_key(|e| e.rank);
    }
    let skipped_unjudged = by_query.keys().filter(|q| qrels.for_query(q).is_none()).count();

    let mut per_query = Vec::new();
    let mut skipped_no_relevant = 0;
    let mut relevant_histogram = BTreeMap::new();
    for qid in qrels.query_ids() {
        let judged = qrels.for_query(qid).expect("id comes from the qrels");
        let grades: HashMap<&str, u32> = judged.iter().map(|(d, &g)| (d.as_str(), g)).collect();
        let relevant: HashSet<&str> = grades.iter().filter(|(_, &g)| g > 0).map(|(&d, _)| d).collect();
        if relevant.is_empty() {
            skipped_no_relevant += 1;
            continue;
        }
        *relevant_histogram.entry(relevant.len()).or_insert(0) += 1;
        let ranked: Vec<&str> = by_query
            .get(qid)
            .map(|es| es.iter().map(|e| e.doc_id.as_str()).collect())
            .unwrap_or_default();
        let all = |f: &dyn Fn(usize) -> Option<f64>| -> Vec<f64> {
            k_list.iter().map(|&k| f(k).expect("relevant set is non-empty")).collect()
        };
        per_query.push(QueryMetrics {
            query_id: qid.to_owned(),
            num_relevant: relevant.len(),
            recall: all(&|k| recall_at_k(&ranked, &relevant, k)),
            success: all(&|k| success_at_k(&ranked, &relevant, k)),
            ndcg: all(&|k| ndcg_at_k(&ranked, &grades, k)),
            mrr: mrr(&ranked, &relevant).expect("relevant set is non-empty"),
            ap: average_precision(&ranked, &relevant).expect("relevant set is non-empty"),
        });
    }

    let n = per_query.len();
    let mean = |get: &dyn Fn(&QueryMetrics) -> f64| {
        if n == 0 {
            0.0
        } else {
            per_query.iter().map(get).sum::<f64>() / n as f64
        }
    };
    let per_k = |get: &dyn Fn(&QueryMetrics, usize) -> f64| -> Vec<f64> {
        (0..k_list.len()).map(|i| mean(&|m| get(m, i))).collect()
    };
    MetricsReport {
        k_list: k_list.to_vec(),
        mean_recall: per_k(&|m, i| m.recall[i]),
        mean_success: per_k(&|m, i| m.success[i]),
        mean_ndcg: per_k(&|m, i| m.ndcg[i]),
        mean_mrr: mean(&|m| m.mrr),
        mean_ap: mean(&|m| m.ap),
        per_query,
        skipped_unjudged,
        skipped_no_relevant,
        relevant_histogram,
    }
}
