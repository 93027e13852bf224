//! Planted-spike benchmark.
//!
//! Distractor documents hold i.i.d. standard Gaussian tokens, row-normalised.
//! A planted instance overwrites `w` adjacent rows of one document with the
//! same unit vector
//!
//! ```text
//! v = alpha q + sqrt(1 - alpha^2) u,   u uniform on the unit sphere orthogonal to q
//! ```
//!
//! so `<v, q> = alpha` exactly, and records where the spike-bearing document
//! lands when the whole corpus is ranked against `q`.
//!
//! Conventions:
//! - one query `q` per benchmark (substream `Query/0`), shared by every instance;
//! - the distractor corpus depends only on the seed and is shared by every
//!   `(alpha, w)` cell;
//! - instance `j` plants into document `j mod M` using substream `Spike/j`
//!   (orthogonal direction first, then the start position);
//! - the pool is the whole corpus (`K = M`).

use rand::Rng;
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::convolution::Backend;
use crate::kernel::{Scale, ScaleGrid};
use crate::rng::{substream, StreamKind};
use crate::scoring::{mean_cos, Aggregator, SpectralScorer};
use crate::store::{l2_norm, CorpusStore, Dtype, QueryVector, TokenMatrix};
use crate::{Error, Result};

/// Benchmark parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    /// `M`, documents in the corpus.
    pub corpus_size: usize,
    /// `Q`, planted instances per cell.
    pub query_count: usize,
    pub dim: usize,
    /// Inclusive token-length bounds.
    pub len_min: usize,
    pub len_max: usize,
    /// Planted cosine in `[0, 1]`.
    pub alpha: f64,
    /// Spike width `w`.
    pub width: usize,
    pub seed: u64,
    /// Recall cutoffs.
    pub k_list: Vec<usize>,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            corpus_size: 1000,
            query_count: 200,
            dim: 64,
            len_min: 50,
            len_max: 500,
            alpha: 0.60,
            width: 1,
            seed: 42,
            k_list: vec![1, 5, 10, 50],
        }
    }
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if self.corpus_size == 0 {
            return bad("corpus size must be >= 1".into());
        }
        if self.dim == 0 {
            return bad("dimension must be >= 1".into());
        }
        if self.len_min == 0 || self.len_min > self.len_max {
            return bad(format!("need 1 <= len_min <= len_max, got {}..{}", self.len_min, self.len_max));
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return bad(format!("alpha must lie in [0, 1], got {}", self.alpha));
        }
        if self.width == 0 || self.width > self.len_min {
            return bad(format!("need 1 <= width <= len_min, got width {}", self.width));
        }
        if self.k_list.is_empty() || self.k_list.contains(&0) {
            return bad("recall cutoffs must be non-empty and >= 1".into());
        }
        Ok(())
    }
}

/// One spike: the query it targets and what was written where.
#[derive(Debug, Clone, PartialEq)]
pub struct PlantedInstance {
    pub query: QueryVector,
    pub spike_doc_id: String,
    /// First overwritten row.
    pub spike_position: usize,
    pub width: usize,
    pub spike_vector: Vec<f64>,
}

pub fn doc_id(index: usize) -> String {
    format!("doc{index:06}")
}

fn gaussian_vec(rng: &mut ChaCha12Rng, len: usize) -> Vec<f64> {
    (0..len).map(|_| rng.sample::<f64, _>(StandardNormal)).collect()
}

/// Document `index` of the corpus described by `spec`.
pub fn gen_document(spec: &SynthSpec, index: usize) -> TokenMatrix {
    let mut rng = substream(spec.seed, StreamKind::Document, index as u64);
    let n = rng.random_range(spec.len_min..=spec.len_max);
    let mut data = Vec::with_capacity(n * spec.dim);
    for _ in 0..n {
        let row = gaussian_vec(&mut rng, spec.dim);
        let norm = l2_norm(&row);
        data.extend(row.iter().map(|x| (x / norm) as f32));
    }
    TokenMatrix::new(doc_id(index), n, spec.dim, data).expect("shape is consistent by construction")
}

/// The `M`-document distractor corpus; a pure function of the spec.
pub fn gen_corpus(spec: &SynthSpec) -> Result<CorpusStore> {
    spec.validate()?;
    let docs: Vec<TokenMatrix> = (0..spec.corpus_size)
        .into_par_iter()
        .map(|i| gen_document(spec, i))
        .collect();
    CorpusStore::from_docs(spec.dim, Dtype::F32, docs)
}

/// The benchmark query, uniform on the unit sphere.
pub fn gen_query(spec: &SynthSpec) -> QueryVector {
    let mut rng = substream(spec.seed, StreamKind::Query, 0);
    loop {
        let v = gaussian_vec(&mut rng, spec.dim);
        if let Ok(q) = QueryVector::normalized("q0", v) {
            return q;
        }
    }
}

/// A unit vector uniform on the sphere of `q`'s orthogonal complement.
pub fn sample_orthogonal_unit(q: &QueryVector, rng: &mut ChaCha12Rng) -> Result<Vec<f64>> {
    let d = q.dim();
    if d < 2 {
        return Err(Error::InvalidParameter(format!(
            "orthogonal complement is empty for d = {d}"
        )));
    }
    let qv = q.as_slice();
    loop {
        let mut g = gaussian_vec(rng, d);
        // Two projection passes keep <u, q> at rounding level.
        for _ in 0..2 {
            let proj: f64 = g.iter().zip(qv).map(|(a, b)| a * b).sum();
            g.iter_mut().zip(qv).for_each(|(a, b)| *a -= proj * b);
        }
        let norm = l2_norm(&g);
        if norm > 1e-9 {
            g.iter_mut().for_each(|x| *x /= norm);
            return Ok(g);
        }
    }
}

/// `alpha q + sqrt(1 - alpha^2) u`.
pub fn spike_vector(q: &QueryVector, u: &[f64], alpha: f64) -> Vec<f64> {
    let beta = (1.0 - alpha * alpha).max(0.0).sqrt();
    q.as_slice().iter().zip(u).map(|(&a, &b)| alpha * a + beta * b).collect()
}

/// Overwrites `width` adjacent rows of a copy of `doc` with one spike vector.
pub fn plant_spike(
    doc: &TokenMatrix,
    q: &QueryVector,
    alpha: f64,
    width: usize,
    rng: &mut ChaCha12Rng,
) -> Result<(TokenMatrix, PlantedInstance)> {
    if q.dim() != doc.dim() {
        return Err(Error::DimMismatch {
            expected: doc.dim(),
            found: q.dim(),
        });
    }
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::InvalidParameter(format!("alpha must lie in [0, 1], got {alpha}")));
    }
    if width == 0 || width > doc.n_tokens() {
        return Err(Error::InvalidParameter(format!(
            "spike width {width} does not fit a {}-token document",
            doc.n_tokens()
        )));
    }
    let u = sample_orthogonal_unit(q, rng)?;
    let v = spike_vector(q, &u, alpha);
    let start = rng.random_range(0..=doc.n_tokens() - width);
    let mut planted = doc.clone();
    for i in start..start + width {
        for (x, &y) in planted.row_mut(i).iter_mut().zip(&v) {
            *x = y as f32;
        }
    }
    let instance = PlantedInstance {
        query: q.clone(),
        spike_doc_id: doc.doc_id().to_owned(),
        spike_position: start,
        width,
        spike_vector: v,
    };
    Ok((planted, instance))
}

/// `sqrt(2 ln(M N / k) / d)`, the cosine above which a spike clears the
/// top-`k` tail of `M N` random token cosines.
pub fn predict_threshold(m: f64, n_typical: f64, k: f64, d: f64) -> Result<f64> {
    if !(m > 0.0 && n_typical > 0.0 && k > 0.0 && d > 0.0) {
        return Err(Error::Domain("all inputs must be positive".into()));
    }
    if m * n_typical <= k {
        return Err(Error::Domain(format!("need M N > k, got M N = {} and k = {k}", m * n_typical)));
    }
    Ok((2.0 * (m * n_typical / k).ln() / d).sqrt())
}

/// Scores for one document under both rankers.
#[derive(Debug, Clone, PartialEq)]
struct DocScores {
    mean_cos: f64,
    per_scale: Vec<f64>,
    spectral: f64,
}

/// A generated corpus with its distractor scores, reusable across cells.
#[derive(Debug)]
pub struct Benchmark {
    spec: SynthSpec,
    scorer: SpectralScorer,
    corpus: CorpusStore,
    query: QueryVector,
    baseline: Vec<DocScores>,
}

impl Benchmark {
    pub fn new(spec: &SynthSpec, grid: &ScaleGrid) -> Result<Self> {
        Self::with_backend(spec, grid, Backend::Auto)
    }

    pub fn with_backend(spec: &SynthSpec, grid: &ScaleGrid, backend: Backend) -> Result<Self> {
        spec.validate()?;
        let scorer = SpectralScorer::new(grid.clone(), Aggregator::Max)?.with_backend(backend);
        let corpus = gen_corpus(spec)?;
        let query = gen_query(spec);
        let baseline = corpus
            .docs()
            .par_iter()
            .map(|doc| score_doc(&scorer, &query, doc))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            spec: spec.clone(),
            scorer,
            corpus,
            query,
            baseline,
        })
    }

    pub fn spec(&self) -> &SynthSpec {
        &self.spec
    }

    pub fn corpus(&self) -> &CorpusStore {
        &self.corpus
    }

    pub fn query(&self) -> &QueryVector {
        &self.query
    }

    pub fn grid(&self) -> &ScaleGrid {
        self.scorer.grid()
    }

    /// Plants `Q` spikes of cosine `alpha` and width `width`, one at a time,
    /// and ranks each spike-bearing document against the other `M - 1`.
    pub fn run_cell(&self, alpha: f64, width: usize) -> Result<CellOutcome> {
        let cell_spec = SynthSpec {
            alpha,
            width,
            ..self.spec.clone()
        };
        cell_spec.validate()?;
        let m = self.corpus.len();
        let instances = (0..self.spec.query_count)
            .into_par_iter()
            .map(|j| {
                let target = j % m;
                let mut rng = substream(self.spec.seed, StreamKind::Spike, j as u64);
                let (planted, instance) =
                    plant_spike(&self.corpus.docs()[target], &self.query, alpha, width, &mut rng)?;
                let scores = score_doc(&self.scorer, &self.query, &planted)?;
                let rank_of = |pick: &dyn Fn(&DocScores) -> f64| rank_against(&self.baseline, target, pick(&scores), pick);
                let per_scale_rank = (0..scores.per_scale.len())
                    .map(|s| rank_of(&|d: &DocScores| d.per_scale[s]))
                    .collect();
                Ok(InstanceOutcome {
                    meancos_rank: rank_of(&|d: &DocScores| d.mean_cos),
                    spectral_rank: rank_of(&|d: &DocScores| d.spectral),
                    per_scale_rank,
                    instance,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(CellOutcome {
            alpha,
            width,
            scales: self.scorer.grid().scales().to_vec(),
            instances,
        })
    }
}

fn score_doc(scorer: &SpectralScorer, q: &QueryVector, doc: &TokenMatrix) -> Result<DocScores> {
    let b = scorer.score(q, doc)?;
    Ok(DocScores {
        mean_cos: mean_cos(q, doc)?,
        per_scale: b.per_scale.iter().map(|&(_, v)| v).collect(),
        spectral: b.final_score,
    })
}

/// 1-based rank of a document scoring `score` that replaces `baseline[target]`.
/// Equal scores go to the lower document index (ids are zero-padded indices).
fn rank_against(baseline: &[DocScores], target: usize, score: f64, pick: &dyn Fn(&DocScores) -> f64) -> usize {
    1 + baseline
        .iter()
        .enumerate()
        .filter(|&(j, d)| {
            let s = pick(d);
            j != target && (s > score || (s == score && j < target))
        })
        .count()
}

/// Where one planted document landed.
#[derive(Debug, Clone, PartialEq)]
pub struct InstanceOutcome {
    pub instance: PlantedInstance,
    pub meancos_rank: usize,
    pub spectral_rank: usize,
    /// Rank under each single-scale scorer, in grid order.
    pub per_scale_rank: Vec<usize>,
}

/// All instances of one `(alpha, w)` cell.
#[derive(Debug, Clone, PartialEq)]
pub struct CellOutcome {
    pub alpha: f64,
    pub width: usize,
    pub scales: Vec<Scale>,
    pub instances: Vec<InstanceOutcome>,
}

fn recall(ranks: impl Iterator<Item = usize>, k: usize, total: usize) -> f64 {
    if total == 0 {
        return 0.0;
    }
    ranks.filter(|&r| r <= k).count() as f64 / total as f64
}

impl CellOutcome {
    pub fn meancos_recall(&self, k: usize) -> f64 {
        recall(self.instances.iter().map(|i| i.meancos_rank), k, self.instances.len())
    }

    pub fn spectral_recall(&self, k: usize) -> f64 {
        recall(self.instances.iter().map(|i| i.spectral_rank), k, self.instances.len())
    }

    /// Recall when ranking by scale `scale_index` of the grid alone.
    pub fn scale_recall(&self, scale_index: usize, k: usize) -> f64 {
        recall(
            self.instances.iter().map(|i| i.per_scale_rank[scale_index]),
            k,
            self.instances.len(),
        )
    }
}

/// One row of an alpha or width sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub value: f64,
    /// Recall per cutoff, aligned with [`SweepTable::k_list`].
    pub meancos: Vec<f64>,
    pub spectral: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParam {
    Alpha,
    Width,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepTable {
    pub param: SweepParam,
    pub k_list: Vec<usize>,
    pub rows: Vec<SweepRow>,
}

impl SweepTable {
    fn k_index(&self, k: usize) -> Option<usize> {
        self.k_list.iter().position(|&x| x == k)
    }

    pub fn meancos_at(&self, row: usize, k: usize) -> Option<f64> {
        Some(self.rows[row].meancos[self.k_index(k)?])
    }

    pub fn spectral_at(&self, row: usize, k: usize) -> Option<f64> {
        Some(self.rows[row].spectral[self.k_index(k)?])
    }

    pub fn row_for(&self, value: f64) -> Option<&SweepRow> {
        self.rows.iter().find(|r| r.value == value)
    }

    /// The headline cutoff: 10 when present, otherwise the first one.
    fn primary_k(&self) -> usize {
        if self.k_list.contains(&10) {
            10
        } else {
            self.k_list[0]
        }
    }

    /// CSV with the headline columns first:
    /// `alpha,meancos_r@10,spectral_r@10,delta_r@10`, then the other cutoffs.
    pub fn to_csv(&self) -> String {
        let name = match self.param {
            SweepParam::Alpha => "alpha",
            SweepParam::Width => "width",
        };
        let pk = self.primary_k();
        let others: Vec<usize> = self.k_list.iter().copied().filter(|&k| k != pk).collect();
        let mut out = format!("{name},meancos_r@{pk},spectral_r@{pk},delta_r@{pk}");
        for k in &others {
            out.push_str(&format!(",meancos_r@{k},spectral_r@{k}"));
        }
        out.push('\n');
        for (i, row) in self.rows.iter().enumerate() {
            let value = match self.param {
                SweepParam::Alpha => format!("{:.2}", row.value),
                SweepParam::Width => format!("{}", row.value),
            };
            let mc = self.meancos_at(i, pk).unwrap_or(0.0);
            let sp = self.spectral_at(i, pk).unwrap_or(0.0);
            out.push_str(&format!("{value},{mc:.3},{sp:.3},{:+.3}", sp - mc));
            for &k in &others {
                out.push_str(&format!(
                    ",{:.3},{:.3}",
                    self.meancos_at(i, k).unwrap_or(0.0),
                    self.spectral_at(i, k).unwrap_or(0.0)
                ));
            }
            out.push('\n');
        }
        out
    }
}

fn sweep_row(value: f64, cell: &CellOutcome, k_list: &[usize]) -> SweepRow {
    SweepRow {
        value,
        meancos: k_list.iter().map(|&k| cell.meancos_recall(k)).collect(),
        spectral: k_list.iter().map(|&k| cell.spectral_recall(k)).collect(),
    }
}

/// Recall of both rankers for each planted cosine, single-position spikes.
pub fn alpha_sweep(spec: &SynthSpec, alphas: &[f64], grid: &ScaleGrid) -> Result<SweepTable> {
    alpha_sweep_on(&Benchmark::new(spec, grid)?, alphas)
}

pub fn alpha_sweep_on(bench: &Benchmark, alphas: &[f64]) -> Result<SweepTable> {
    let spec = bench.spec();
    if spec.width != 1 {
        return Err(Error::InvalidParameter(format!(
            "the alpha sweep plants single-position spikes; got width {}",
            spec.width
        )));
    }
    let rows = alphas
        .iter()
        .map(|&a| Ok(sweep_row(a, &bench.run_cell(a, 1)?, &spec.k_list)))
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepTable {
        param: SweepParam::Alpha,
        k_list: spec.k_list.clone(),
        rows,
    })
}

/// Recall of both rankers for each spike width at `spec.alpha`.
pub fn width_sweep(spec: &SynthSpec, widths: &[usize], grid: &ScaleGrid) -> Result<SweepTable> {
    width_sweep_on(&Benchmark::new(spec, grid)?, widths)
}

pub fn width_sweep_on(bench: &Benchmark, widths: &[usize]) -> Result<SweepTable> {
    let spec = bench.spec();
    let rows = widths
        .iter()
        .map(|&w| Ok(sweep_row(w as f64, &bench.run_cell(spec.alpha, w)?, &spec.k_list)))
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepTable {
        param: SweepParam::Width,
        k_list: spec.k_list.clone(),
        rows,
    })
}

/// Per-scale recall table.
///
/// One row per grid scale (ranking by that scale alone), then `max`, the
/// element-wise maximum of those rows, then `spectral`, the recall of the
/// actual max-over-scales ranker. The last two coincide whenever the best
/// single scale ranks every spike at least as well as the combined score.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaleTable {
    pub k_list: Vec<usize>,
    pub scales: Vec<Scale>,
    /// Recall per scale, then per cutoff.
    pub per_scale: Vec<Vec<f64>>,
    pub max_row: Vec<f64>,
    pub spectral_row: Vec<f64>,
}

impl ScaleTable {
    pub fn recall(&self, scale: Scale, k: usize) -> Option<f64> {
        let s = self.scales.iter().position(|&x| x == scale)?;
        let k = self.k_list.iter().position(|&x| x == k)?;
        Some(self.per_scale[s][k])
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("scale");
        for k in &self.k_list {
            out.push_str(&format!(",recall@{k}"));
        }
        out.push('\n');
        let rows = self
            .scales
            .iter()
            .map(Scale::to_string)
            .zip(&self.per_scale)
            .chain([("max".to_owned(), &self.max_row), ("spectral".to_owned(), &self.spectral_row)]);
        for (label, values) in rows {
            out.push_str(&label);
            for v in values {
                out.push_str(&format!(",{v:.3}"));
            }
            out.push('\n');
        }
        out
    }
}

/// Per-scale decomposition at `spec.alpha` with single-position spikes.
pub fn scale_decomposition(spec: &SynthSpec, grid: &ScaleGrid) -> Result<ScaleTable> {
    scale_decomposition_on(&Benchmark::new(spec, grid)?)
}

pub fn scale_decomposition_on(bench: &Benchmark) -> Result<ScaleTable> {
    let spec = bench.spec();
    let cell = bench.run_cell(spec.alpha, 1)?;
    let per_scale: Vec<Vec<f64>> = (0..cell.scales.len())
        .map(|s| spec.k_list.iter().map(|&k| cell.scale_recall(s, k)).collect())
        .collect();
    let max_row = (0..spec.k_list.len())
        .map(|k| per_scale.iter().map(|row| row[k]).fold(f64::NEG_INFINITY, f64::max))
        .collect();
    Ok(ScaleTable {
        k_list: spec.k_list.clone(),
        scales: cell.scales.clone(),
        per_scale,
        max_row,
        spectral_row: spec.k_list.iter().map(|&k| cell.spectral_recall(k)).collect(),
    })
}
