//! MeanCos, MaxSim, per-scale scores, and the spectral score.
//!
//! At each scale the smoothed rows are renormalised to unit length and the
//! position-wise cosines against the query are aggregated (max by default).
//! The spectral score is the max of those per-scale values over the grid.
//!
//! [`SpectralScorer::prepare`] caches the query-independent part of that
//! computation (smoothed row norms per scale) so the per-query work shrinks
//! to smoothing the scalar cosine signal: `<q, smooth(E)[i]> = smooth(E q)[i]`.

use std::fmt;
use std::str::FromStr;

use crate::convolution::{
    check_dims, column_mean, dot, dot_f32, per_token_cosines, smooth_rows, smooth_signal, smooth_with,
    Backend,
};
use crate::kernel::{make_sinc_kernel_with, KernelSupport, Scale, ScaleGrid, SincKernel};
use crate::store::{l2_norm, QueryVector, TokenMatrix};
use crate::{Error, Result};

/// How position-wise cosines collapse into one value per scale.
///
/// `Max` is the standard rule. `TopMMean` and `Percentile` are damped
/// alternatives for corpora where a single outlier token should not carry a
/// document; across scales the maximum is always taken.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum Aggregator {
    #[default]
    Max,
    /// Mean of the `m` largest position scores (all positions if fewer).
    TopMMean(usize),
    /// Nearest-rank percentile `p` in `(0, 100]` of the position scores.
    Percentile(f64),
}

impl Aggregator {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Aggregator::TopMMean(0) => Err(Error::InvalidParameter("top-m mean needs m >= 1".into())),
            Aggregator::Percentile(p) if !(p > 0.0 && p <= 100.0) => Err(Error::InvalidParameter(
                format!("percentile must lie in (0, 100], got {p}"),
            )),
            _ => Ok(()),
        }
    }

    /// Aggregated value and the position that carries the maximum.
    fn apply(&self, values: &[f64]) -> (f64, usize) {
        let argmax = argmax(values);
        let value = match *self {
            Aggregator::Max => values[argmax],
            Aggregator::TopMMean(m) => {
                let mut sorted = values.to_vec();
                sorted.sort_by(|a, b| b.total_cmp(a));
                let m = m.min(sorted.len());
                sorted[..m].iter().sum::<f64>() / m as f64
            }
            Aggregator::Percentile(p) => {
                let mut sorted = values.to_vec();
                sorted.sort_by(f64::total_cmp);
                let rank = ((p / 100.0) * sorted.len() as f64).ceil() as usize;
                sorted[rank.clamp(1, sorted.len()) - 1]
            }
        };
        (value, argmax)
    }
}

impl fmt::Display for Aggregator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Aggregator::Max => f.write_str("max"),
            Aggregator::TopMMean(m) => write!(f, "topm:{m}"),
            Aggregator::Percentile(p) => write!(f, "pct:{p}"),
        }
    }
}

impl FromStr for Aggregator {
    type Err = Error;

    /// `max`, `topm:M`, or `pct:P`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidParameter(format!("cannot parse aggregator {s:?}"));
        let agg = match s.split_once(':') {
            None if s == "max" => Aggregator::Max,
            Some(("topm", m)) => Aggregator::TopMMean(m.parse().map_err(|_| bad())?),
            Some(("pct", p)) => Aggregator::Percentile(p.parse().map_err(|_| bad())?),
            _ => return Err(bad()),
        };
        agg.validate()?;
        Ok(agg)
    }
}

/// Lowest index wins ties.
fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// Per-scale values and the final aggregated score for one pair.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreBreakdown {
    /// One entry per grid scale, in grid order.
    pub per_scale: Vec<(Scale, f64)>,
    pub final_score: f64,
    pub argmax_scale: Scale,
    pub argmax_position: usize,
}

impl ScoreBreakdown {
    pub fn get(&self, s: Scale) -> Option<f64> {
        self.per_scale.iter().find(|(k, _)| *k == s).map(|&(_, v)| v)
    }
}

/// Cosine of `q` against the normalised mean of the document rows.
///
/// Returns 0 when the mean is the zero vector. A single-row document reports
/// `<q, row_0>` directly, the same number MaxSim and Spectral give.
pub fn mean_cos(q: &QueryVector, m: &TokenMatrix) -> Result<f64> {
    check_dims(q, m)?;
    Ok(PooledVector::of(m).cosine(q))
}

/// What MeanCos compares the query against: the row itself for one-token
/// documents, otherwise the column mean (normalised at comparison time).
#[derive(Debug, Clone, PartialEq)]
pub struct PooledVector {
    values: Vec<f64>,
    single_row: bool,
}

impl PooledVector {
    pub fn of(m: &TokenMatrix) -> Self {
        if m.n_tokens() == 1 {
            Self {
                values: m.row(0).iter().map(|&x| f64::from(x)).collect(),
                single_row: true,
            }
        } else {
            Self {
                values: column_mean(m),
                single_row: false,
            }
        }
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    /// MeanCos for the document this vector was pooled from.
    pub fn cosine(&self, q: &QueryVector) -> f64 {
        if self.single_row {
            dot(q.as_slice(), &self.values)
        } else {
            cosine_to(q.as_slice(), &self.values)
        }
    }
}

fn cosine_to(q: &[f64], v: &[f64]) -> f64 {
    let norm = l2_norm(v);
    if norm == 0.0 {
        0.0
    } else {
        dot(q, v) / norm
    }
}

/// Best single-token cosine.
pub fn max_sim(q: &QueryVector, m: &TokenMatrix) -> Result<f64> {
    let f = per_token_cosines(q, m)?;
    Ok(f[argmax(&f)])
}

/// Max position-wise cosine at one scale, and where it occurs.
pub fn sigma_scale(q: &QueryVector, m: &TokenMatrix, s: Scale) -> Result<(f64, usize)> {
    let values = position_scores(q, m, s, Backend::Auto, KernelSupport::Full)?;
    let i = argmax(&values);
    Ok((values[i], i))
}

/// Cosine of `q` with every renormalised smoothed row at scale `s`.
///
/// Identity rows are the stored unit rows and are not renormalised again;
/// zero rows (stored, or from cancellation) score 0.
pub fn position_scores(
    q: &QueryVector,
    m: &TokenMatrix,
    s: Scale,
    backend: Backend,
    support: KernelSupport,
) -> Result<Vec<f64>> {
    check_dims(q, m)?;
    match s {
        Scale::Identity => per_token_cosines(q, m),
        Scale::MeanPool => Ok(vec![mean_cos(q, m)?; m.n_tokens()]),
        Scale::Finite(_) => {
            let smoothed = smooth_with(m, s, backend, support)?;
            Ok(smoothed.rows().map(|row| cosine_to(q.as_slice(), row)).collect())
        }
    }
}

/// Spectral score with the default backend and full-support kernels.
pub fn spectral_score(
    q: &QueryVector,
    m: &TokenMatrix,
    grid: &ScaleGrid,
    agg: Aggregator,
) -> Result<ScoreBreakdown> {
    SpectralScorer::new(grid.clone(), agg)?.score(q, m)
}

/// Scoring configuration: grid, aggregator, convolution backend and support.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralScorer {
    grid: ScaleGrid,
    agg: Aggregator,
    backend: Backend,
    support: KernelSupport,
}

impl SpectralScorer {
    pub fn new(grid: ScaleGrid, agg: Aggregator) -> Result<Self> {
        if grid.is_empty() {
            return Err(Error::EmptyGrid);
        }
        agg.validate()?;
        Ok(Self {
            grid,
            agg,
            backend: Backend::Auto,
            support: KernelSupport::Full,
        })
    }

    pub fn with_backend(mut self, backend: Backend) -> Self {
        self.backend = backend;
        self
    }

    pub fn with_support(mut self, support: KernelSupport) -> Self {
        self.support = support;
        self
    }

    pub fn grid(&self) -> &ScaleGrid {
        &self.grid
    }

    pub fn aggregator(&self) -> Aggregator {
        self.agg
    }

    /// Scores one pair by smoothing the full matrix at every scale.
    pub fn score(&self, q: &QueryVector, m: &TokenMatrix) -> Result<ScoreBreakdown> {
        check_dims(q, m)?;
        if m.n_tokens() == 1 {
            return Ok(self.single_token(q, m));
        }
        let mut per_scale = Vec::with_capacity(self.grid.len());
        let mut positions = Vec::with_capacity(self.grid.len());
        for &s in self.grid.scales() {
            let values = position_scores(q, m, s, self.backend, self.support)?;
            let (v, pos) = self.agg.apply(&values);
            per_scale.push((s, v));
            positions.push(pos);
        }
        Ok(finish(per_scale, &positions))
    }

    /// Precomputes the query-independent smoothed row norms of `m`.
    pub fn prepare<'a>(&self, m: &'a TokenMatrix) -> Result<PreparedDocument<'a>> {
        let n = m.n_tokens();
        let d = m.dim();
        let mut scales = Vec::with_capacity(self.grid.len());
        if n == 1 {
            return Ok(PreparedDocument { matrix: m, scales });
        }
        let rows = m.to_f64();
        for &s in self.grid.scales() {
            let prepared = match s {
                Scale::Identity => PreparedScale::Identity,
                Scale::MeanPool => PreparedScale::MeanPool(PooledVector::of(m)),
                Scale::Finite(l) => {
                    let kernel = make_sinc_kernel_with(l, n, self.support)?;
                    let smoothed = smooth_rows(&rows, d, &kernel, self.backend)?;
                    let norms = smoothed.chunks_exact(d).map(l2_norm).collect();
                    PreparedScale::Finite { kernel, norms }
                }
            };
            scales.push(prepared);
        }
        Ok(PreparedDocument { matrix: m, scales })
    }

    /// Scores a prepared document; agrees with [`SpectralScorer::score`] up to rounding.
    pub fn score_prepared(&self, q: &QueryVector, doc: &PreparedDocument<'_>) -> Result<ScoreBreakdown> {
        let m = doc.matrix;
        check_dims(q, m)?;
        if m.n_tokens() == 1 {
            return Ok(self.single_token(q, m));
        }
        let f = per_token_cosines(q, m)?;
        let mut per_scale = Vec::with_capacity(self.grid.len());
        let mut positions = Vec::with_capacity(self.grid.len());
        for (&s, prepared) in self.grid.scales().iter().zip(&doc.scales) {
            let values = match prepared {
                PreparedScale::Identity => f.clone(),
                PreparedScale::MeanPool(pooled) => vec![pooled.cosine(q); f.len()],
                PreparedScale::Finite { kernel, norms } => {
                    let num = smooth_signal(&f, kernel, self.backend)?;
                    num.iter()
                        .zip(norms)
                        .map(|(&x, &norm)| if norm == 0.0 { 0.0 } else { x / norm })
                        .collect()
                }
            };
            let (v, pos) = self.agg.apply(&values);
            per_scale.push((s, v));
            positions.push(pos);
        }
        Ok(finish(per_scale, &positions))
    }

    fn single_token(&self, q: &QueryVector, m: &TokenMatrix) -> ScoreBreakdown {
        let v = dot_f32(q.as_slice(), m.row(0));
        let per_scale: Vec<_> = self.grid.scales().iter().map(|&s| (s, v)).collect();
        ScoreBreakdown {
            argmax_scale: per_scale[0].0,
            per_scale,
            final_score: v,
            argmax_position: 0,
        }
    }
}

fn finish(per_scale: Vec<(Scale, f64)>, positions: &[usize]) -> ScoreBreakdown {
    let values: Vec<f64> = per_scale.iter().map(|&(_, v)| v).collect();
    let best = argmax(&values);
    ScoreBreakdown {
        argmax_scale: per_scale[best].0,
        final_score: values[best],
        argmax_position: positions[best],
        per_scale,
    }
}

/// A document with its per-scale smoothed row norms cached.
#[derive(Debug, Clone)]
pub struct PreparedDocument<'a> {
    matrix: &'a TokenMatrix,
    scales: Vec<PreparedScale>,
}

impl PreparedDocument<'_> {
    pub fn matrix(&self) -> &TokenMatrix {
        self.matrix
    }
}

#[derive(Debug, Clone)]
enum PreparedScale {
    Identity,
    MeanPool(PooledVector),
    Finite { kernel: SincKernel, norms: Vec<f64> },
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::{default_grid, guaranteed_grid};

    // Oracle values from direct normalisation of the worked-example matrices.
    const D1_MAX_SIM: f64 = 0.944_911_182_523_067_9;
    const D1_MEAN_COS: f64 = 0.580_159_871_889_465_4;
    const D3_MAX_SIM: f64 = 0.730_296_743_340_221_4;

    fn doc(id: &str, rows: &[[f32; 4]]) -> TokenMatrix {
        let mut m = TokenMatrix::from_rows(id, rows).unwrap();
        m.normalize_rows();
        m
    }

    fn d1() -> TokenMatrix {
        doc("d1", &[[0.5, 0.1, 0.1, 0.1], [0.1, 0.1, 0.1, 0.5], [0.1, 0.2, 0.2, 0.1]])
    }
    fn d2() -> TokenMatrix {
        doc("d2", &[[0.3; 4]; 3])
    }
    fn d3() -> TokenMatrix {
        doc("d3", &[[0.1, 0.2, 0.3, 0.4], [0.4, 0.3, 0.2, 0.1], [0.25; 4]])
    }
    fn e1() -> QueryVector {
        QueryVector::new("q", vec![1.0, 0.0, 0.0, 0.0]).unwrap()
    }

    #[test]
    fn worked_example_values() {
        let q = e1();
        // f32 storage limits agreement to ~1e-7.
        assert!((max_sim(&q, &d1()).unwrap() - D1_MAX_SIM).abs() < 1e-6);
        assert!((mean_cos(&q, &d1()).unwrap() - D1_MEAN_COS).abs() < 1e-6);
        assert!((mean_cos(&q, &d2()).unwrap() - 0.5).abs() < 1e-6);
        assert!((max_sim(&q, &d3()).unwrap() - D3_MAX_SIM).abs() < 1e-6);
        let (v, pos) = sigma_scale(&q, &d1(), Scale::Identity).unwrap();
        assert!((v - D1_MAX_SIM).abs() < 1e-6);
        assert_eq!(pos, 0);
    }

    #[test]
    fn worked_example_d1_ranks_first() {
        let q = e1();
        for grid in [default_grid(), guaranteed_grid(), ScaleGrid::single(Scale::Identity).unwrap()] {
            let s: Vec<f64> = [d1(), d2(), d3()]
                .iter()
                .map(|d| spectral_score(&q, d, &grid, Aggregator::Max).unwrap().final_score)
                .collect();
            assert!(s[0] > s[1] && s[0] > s[2], "{grid}: {s:?}");
        }
    }

    #[test]
    fn endpoints_match_baselines() {
        let q = e1();
        for d in [d1(), d2(), d3()] {
            let (id, _) = sigma_scale(&q, &d, Scale::Identity).unwrap();
            assert_eq!(id, max_sim(&q, &d).unwrap());
            let (mp, _) = sigma_scale(&q, &d, Scale::MeanPool).unwrap();
            assert_eq!(mp, mean_cos(&q, &d).unwrap());
        }
    }

    #[test]
    fn constant_document_same_at_every_scale() {
        let q = QueryVector::normalized("q", vec![0.3, -0.2, 0.9, 0.1]).unwrap();
        let d = d2();
        let want = mean_cos(&q, &d).unwrap();
        for s in guaranteed_grid().scales() {
            let (v, _) = sigma_scale(&q, &d, *s).unwrap();
            assert!((v - want).abs() < 1e-9, "{s}");
        }
    }

    #[test]
    fn single_token_short_circuit() {
        let q = QueryVector::normalized("q", vec![0.3, -0.2, 0.9, 0.1]).unwrap();
        let d = doc("one", &[[0.2, 0.4, -0.1, 0.7]]);
        let expected = dot_f32(q.as_slice(), d.row(0));
        let b = spectral_score(&q, &d, &guaranteed_grid(), Aggregator::Max).unwrap();
        assert!(b.per_scale.iter().all(|&(_, v)| v == expected));
        assert_eq!(b.final_score, expected);
        assert_eq!(mean_cos(&q, &d).unwrap(), expected);
        assert_eq!(max_sim(&q, &d).unwrap(), expected);
    }

    #[test]
    fn zero_rows_score_zero() {
        let q = e1();
        let d = TokenMatrix::from_rows("z", &[[0.0f32; 4], [0.0; 4]]).unwrap();
        assert_eq!(mean_cos(&q, &d).unwrap(), 0.0);
        let b = spectral_score(&q, &d, &guaranteed_grid(), Aggregator::Max).unwrap();
        assert_eq!(b.final_score, 0.0);
    }

    #[test]
    fn errors() {
        let q3 = QueryVector::new("q", vec![1.0, 0.0, 0.0]).unwrap();
        assert!(matches!(mean_cos(&q3, &d1()), Err(Error::DimMismatch { .. })));
        assert!(matches!(max_sim(&q3, &d1()), Err(Error::DimMismatch { .. })));
        assert!(matches!(
            spectral_score(&q3, &d1(), &default_grid(), Aggregator::Max),
            Err(Error::DimMismatch { .. })
        ));
        assert!(SpectralScorer::new(default_grid(), Aggregator::TopMMean(0)).is_err());
        assert!(SpectralScorer::new(default_grid(), Aggregator::Percentile(0.0)).is_err());
    }

    #[test]
    fn aggregator_rules() {
        let v = [0.1, 0.9, 0.5, 0.9, -0.2];
        assert_eq!(Aggregator::Max.apply(&v), (0.9, 1));
        let (m, _) = Aggregator::TopMMean(2).apply(&v);
        assert!((m - 0.9).abs() < 1e-15);
        let (m, _) = Aggregator::TopMMean(3).apply(&v);
        assert!((m - 2.3 / 3.0).abs() < 1e-15);
        let (m, _) = Aggregator::TopMMean(50).apply(&v);
        assert!((m - 2.2 / 5.0).abs() < 1e-15);
        assert_eq!(Aggregator::Percentile(100.0).apply(&v).0, 0.9);
        assert_eq!(Aggregator::Percentile(50.0).apply(&v).0, 0.5);
        assert_eq!(Aggregator::Percentile(1.0).apply(&v).0, -0.2);
    }

    #[test]
    fn aggregator_parsing() {
        assert_eq!("max".parse::<Aggregator>().unwrap(), Aggregator::Max);
        assert_eq!("topm:3".parse::<Aggregator>().unwrap(), Aggregator::TopMMean(3));
        assert_eq!("pct:90".parse::<Aggregator>().unwrap(), Aggregator::Percentile(90.0));
        assert!("topm:0".parse::<Aggregator>().is_err());
        assert!("pct:101".parse::<Aggregator>().is_err());
        assert!("mean".parse::<Aggregator>().is_err());
    }

    #[test]
    fn finite_scales_are_order_sensitive() {
        let q = e1();
        let a = doc(
            "a",
            &[[1.0, 0.0, 0.0, 0.0], [1.0, 0.0, 0.0, 0.0], [0.0, 1.0, 0.0, 0.0], [0.0, 0.0, 1.0, 0.0], [0.0, 0.0, 0.0, 1.0]],
        );
        let b = doc(
            "b",
            &[[1.0, 0.0, 0.0, 0.0], [0.0, 1.0, 0.0, 0.0], [1.0, 0.0, 0.0, 0.0], [0.0, 0.0, 1.0, 0.0], [0.0, 0.0, 0.0, 1.0]],
        );
        for s in [Scale::Identity, Scale::MeanPool] {
            assert_eq!(sigma_scale(&q, &a, s).unwrap().0, sigma_scale(&q, &b, s).unwrap().0);
        }
        let (va, _) = sigma_scale(&q, &a, Scale::Finite(3.0)).unwrap();
        let (vb, _) = sigma_scale(&q, &b, Scale::Finite(3.0)).unwrap();
        assert!((va - vb).abs() > 1e-3, "{va} vs {vb}");
    }
}
