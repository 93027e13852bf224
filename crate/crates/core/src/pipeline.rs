//! Two-stage retrieval: exact MeanCos top-K, then spectral re-rank.
//!
//! The first stage is a brute-force scan over pooled document vectors. The
//! second stage re-orders only the candidate pool, so a document missing
//! from the pool can never reach the output. Ties are broken by ascending
//! document id at both stages.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::time::{Duration, Instant};

use rayon::prelude::*;

use crate::scoring::{PooledVector, PreparedDocument, SpectralScorer};
use crate::store::{CorpusStore, QueryVector};
use crate::{Error, Result};

/// Candidate pool size used when none is given.
pub const DEFAULT_K: usize = 100;

/// Which stage produced a run entry.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StageTag {
    MeanCos,
    Spectral,
    Other(String),
}

impl StageTag {
    pub fn as_str(&self) -> &str {
        match self {
            StageTag::MeanCos => "meancos",
            StageTag::Spectral => "spectral",
            StageTag::Other(s) => s,
        }
    }

    pub fn from_label(s: &str) -> Self {
        match s {
            "meancos" => StageTag::MeanCos,
            "spectral" => StageTag::Spectral,
            other => StageTag::Other(other.to_owned()),
        }
    }
}

impl fmt::Display for StageTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One line of a run file.
#[derive(Debug, Clone, PartialEq)]
pub struct RunEntry {
    pub query_id: String,
    pub doc_id: String,
    /// 1-based.
    pub rank: usize,
    pub score: f64,
    pub stage_tag: StageTag,
}

/// First-stage top-K for one query, best first.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidatePool {
    pub query_id: String,
    pub entries: Vec<(String, f64)>,
}

impl CandidatePool {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn doc_ids(&self) -> impl Iterator<Item = &str> + '_ {
        self.entries.iter().map(|(id, _)| id.as_str())
    }

    /// The pool as a run, tagged `meancos`.
    pub fn to_run(&self) -> Vec<RunEntry> {
        to_run(&self.query_id, &self.entries, StageTag::MeanCos)
    }
}

/// Descending score, then ascending id.
fn by_score_then_id(a: &(String, f64), b: &(String, f64)) -> Ordering {
    b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0))
}

fn to_run(query_id: &str, ranked: &[(String, f64)], tag: StageTag) -> Vec<RunEntry> {
    ranked
        .iter()
        .enumerate()
        .map(|(i, (doc_id, score))| RunEntry {
            query_id: query_id.to_owned(),
            doc_id: doc_id.clone(),
            rank: i + 1,
            score: *score,
            stage_tag: tag.clone(),
        })
        .collect()
}

/// Pooled vectors for every document, built once per corpus.
#[derive(Debug, Clone)]
pub struct MeanPoolIndex {
    pooled: Vec<PooledVector>,
}

impl MeanPoolIndex {
    pub fn build(store: &CorpusStore) -> Self {
        Self {
            pooled: store.docs().par_iter().map(PooledVector::of).collect(),
        }
    }

    /// Exact top-`k` by MeanCos.
    pub fn top_k(&self, q: &QueryVector, store: &CorpusStore, k: usize) -> Result<CandidatePool> {
        if k == 0 {
            return Err(Error::InvalidParameter("K must be >= 1".into()));
        }
        if store.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        if q.dim() != store.dim() {
            return Err(Error::DimMismatch {
                expected: store.dim(),
                found: q.dim(),
            });
        }
        let mut scored: Vec<(String, f64)> = store
            .docs()
            .iter()
            .zip(&self.pooled)
            .map(|(doc, pooled)| (doc.doc_id().to_owned(), pooled.cosine(q)))
            .collect();
        let k = k.min(scored.len());
        if k < scored.len() {
            scored.select_nth_unstable_by(k - 1, by_score_then_id);
            scored.truncate(k);
        }
        scored.sort_by(by_score_then_id);
        Ok(CandidatePool {
            query_id: q.query_id().to_owned(),
            entries: scored,
        })
    }
}

/// The `k` documents with the highest MeanCos (all of them if `k >= M`).
pub fn first_stage_topk(q: &QueryVector, store: &CorpusStore, k: usize) -> Result<CandidatePool> {
    MeanPoolIndex::build(store).top_k(q, store, k)
}

/// Re-orders `pool` by spectral score.
pub fn rerank(
    q: &QueryVector,
    pool: &CandidatePool,
    store: &CorpusStore,
    scorer: &SpectralScorer,
) -> Result<Vec<RunEntry>> {
    let docs = pool
        .doc_ids()
        .map(|id| store.get(id).ok_or_else(|| Error::UnknownDocument(id.to_owned())))
        .collect::<Result<Vec<_>>>()?;
    let prepared = docs
        .par_iter()
        .map(|doc| scorer.prepare(doc))
        .collect::<Result<Vec<_>>>()?;
    let refs: Vec<&PreparedDocument<'_>> = prepared.iter().collect();
    rerank_prepared(q, &pool.query_id, &refs, scorer)
}

fn rerank_prepared(
    q: &QueryVector,
    query_id: &str,
    docs: &[&PreparedDocument<'_>],
    scorer: &SpectralScorer,
) -> Result<Vec<RunEntry>> {
    let mut scored = docs
        .par_iter()
        .map(|doc| {
            let b = scorer.score_prepared(q, doc)?;
            Ok((doc.matrix().doc_id().to_owned(), b.final_score))
        })
        .collect::<Result<Vec<_>>>()?;
    scored.sort_by(by_score_then_id);
    Ok(to_run(query_id, &scored, StageTag::Spectral))
}

/// Settings for [`run_queries`].
#[derive(Debug, Clone)]
pub struct PipelineConfig {
    pub k: usize,
    pub scorer: SpectralScorer,
    /// Emit the first-stage ranking instead of re-ranking.
    pub first_stage_only: bool,
}

impl PipelineConfig {
    pub fn new(scorer: SpectralScorer) -> Self {
        Self {
            k: DEFAULT_K,
            scorer,
            first_stage_only: false,
        }
    }
}

/// Wall-clock time spent on one query.
#[derive(Debug, Clone, PartialEq)]
pub struct QueryTiming {
    pub query_id: String,
    pub first_stage: Duration,
    pub rerank: Duration,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    /// Query blocks in input order, ranks 1..n within each block.
    pub entries: Vec<RunEntry>,
    pub timings: Vec<QueryTiming>,
    /// Time spent caching smoothed row norms for every pooled document.
    pub prepare: Duration,
    pub index_build: Duration,
}

/// Runs both stages for every query.
///
/// Documents that appear in several pools are prepared once. Scoring runs on
/// the ambient rayon pool; the output does not depend on its size.
pub fn run_queries(queries: &[QueryVector], store: &CorpusStore, config: &PipelineConfig) -> Result<RunOutput> {
    let start = Instant::now();
    let index = MeanPoolIndex::build(store);
    let index_build = start.elapsed();

    let pools = queries
        .par_iter()
        .map(|q| {
            let t = Instant::now();
            let pool = index.top_k(q, store, config.k)?;
            Ok((pool, t.elapsed()))
        })
        .collect::<Result<Vec<_>>>()?;

    if config.first_stage_only {
        let mut entries = Vec::new();
        let mut timings = Vec::new();
        for (pool, elapsed) in &pools {
            entries.extend(pool.to_run());
            timings.push(QueryTiming {
                query_id: pool.query_id.clone(),
                first_stage: *elapsed,
                rerank: Duration::ZERO,
            });
        }
        return Ok(RunOutput {
            entries,
            timings,
            prepare: Duration::ZERO,
            index_build,
        });
    }

    let start = Instant::now();
    let mut needed = BTreeMap::new();
    for (pool, _) in &pools {
        for id in pool.doc_ids() {
            let pos = store.position(id).ok_or_else(|| Error::UnknownDocument(id.to_owned()))?;
            needed.entry(pos).or_insert(());
        }
    }
    let positions: Vec<usize> = needed.into_keys().collect();
    let prepared: Vec<PreparedDocument<'_>> = positions
        .par_iter()
        .map(|&pos| config.scorer.prepare(&store.docs()[pos]))
        .collect::<Result<_>>()?;
    let lookup: BTreeMap<usize, &PreparedDocument<'_>> = positions.iter().copied().zip(&prepared).collect();
    let prepare = start.elapsed();

    let reranked = queries
        .par_iter()
        .zip(&pools)
        .map(|(q, (pool, first_stage))| {
            let t = Instant::now();
            let docs: Vec<&PreparedDocument<'_>> = pool
                .doc_ids()
                .map(|id| lookup[&store.position(id).expect("checked above")])
                .collect();
            let run = rerank_prepared(q, &pool.query_id, &docs, &config.scorer)?;
            let timing = QueryTiming {
                query_id: pool.query_id.clone(),
                first_stage: *first_stage,
                rerank: t.elapsed(),
            };
            Ok((run, timing))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut entries = Vec::new();
    let mut timings = Vec::with_capacity(reranked.len());
    for (run, timing) in reranked {
        entries.extend(run);
        timings.push(timing);
    }
    Ok(RunOutput {
        entries,
        timings,
        prepare,
        index_build,
    })
}
