//! Normalised sinc kernels sampled on the length-aware lattice.
//!
//! For a finite scale `L` and document length `N` the kernel is
//!
//! ```text
//! k_L[t] = sinc((t - c) / L) / sum_u sinc((u - c) / L),   c = (N - 1) / 2
//! ```
//!
//! Dividing the offset by `L` is what makes `L -> inf` converge to the
//! uniform (mean-pool) kernel. The two grid endpoints, [`Scale::Identity`]
//! and [`Scale::MeanPool`], are symbolic and never sampled.

use std::f64::consts::PI;
use std::fmt;
use std::ops::Range;
use std::str::FromStr;

use crate::{Error, Result};

/// `sin(pi x) / (pi x)` with `sinc(0) = 1` and exact zeros at nonzero integers.
pub fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else if x.fract() == 0.0 {
        0.0
    } else {
        let px = PI * x;
        px.sin() / px
    }
}

/// One smoothing resolution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Scale {
    /// Leaves token rows unchanged (written `1` in grids).
    Identity,
    /// A sampled sinc kernel of scale `L >= 1`.
    Finite(f64),
    /// Every position carries the document mean (written `inf`).
    MeanPool,
}

impl Scale {
    pub fn finite(l: f64) -> Result<Self> {
        if l.is_finite() && l >= 1.0 {
            Ok(Scale::Finite(l))
        } else {
            Err(Error::InvalidParameter(format!("scale must be a finite real >= 1, got {l}")))
        }
    }

    pub fn is_finite_scale(&self) -> bool {
        matches!(self, Scale::Finite(_))
    }

    fn validate(&self) -> Result<()> {
        match *self {
            Scale::Finite(l) => Scale::finite(l).map(|_| ()),
            _ => Ok(()),
        }
    }
}

impl fmt::Display for Scale {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scale::Identity => f.write_str("1"),
            Scale::Finite(l) => write!(f, "{l}"),
            Scale::MeanPool => f.write_str("inf"),
        }
    }
}

impl FromStr for Scale {
    type Err = Error;

    /// `1` is the identity endpoint, `inf` the mean-pool endpoint, anything
    /// else a finite scale.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        match s {
            "inf" | "Inf" | "INF" => return Ok(Scale::MeanPool),
            "id" | "identity" => return Ok(Scale::Identity),
            _ => {}
        }
        let l: f64 = s
            .parse()
            .map_err(|_| Error::InvalidParameter(format!("cannot parse scale {s:?}")))?;
        if l == 1.0 {
            Ok(Scale::Identity)
        } else {
            Scale::finite(l)
        }
    }
}

/// An ordered, duplicate-free set of scales.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaleGrid {
    scales: Vec<Scale>,
}

impl ScaleGrid {
    pub fn new(scales: Vec<Scale>) -> Result<Self> {
        if scales.is_empty() {
            return Err(Error::EmptyGrid);
        }
        for (i, s) in scales.iter().enumerate() {
            s.validate()?;
            if scales[..i].contains(s) {
                return Err(Error::InvalidGrid(format!("scale {s} appears twice")));
            }
        }
        Ok(Self { scales })
    }

    pub fn scales(&self) -> &[Scale] {
        &self.scales
    }

    pub fn len(&self) -> usize {
        self.scales.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scales.is_empty()
    }

    pub fn contains(&self, s: Scale) -> bool {
        self.scales.contains(&s)
    }

    pub fn finite_scales(&self) -> usize {
        self.scales.iter().filter(|s| s.is_finite_scale()).count()
    }

    /// A grid holding a single scale.
    pub fn single(s: Scale) -> Result<Self> {
        Self::new(vec![s])
    }
}

impl FromStr for ScaleGrid {
    type Err = Error;

    /// Comma-separated, e.g. `1,3,5,7,10,15,20,30,inf`.
    fn from_str(s: &str) -> Result<Self> {
        let scales = s
            .split(',')
            .filter(|p| !p.trim().is_empty())
            .map(str::parse)
            .collect::<Result<Vec<Scale>>>()?;
        Self::new(scales)
    }
}

impl fmt::Display for ScaleGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, s) in self.scales.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{s}")?;
        }
        Ok(())
    }
}

const DEFAULT_FINITE: [f64; 7] = [3.0, 5.0, 7.0, 10.0, 15.0, 20.0, 30.0];

/// `{1, 3, 5, 7, 10, 15, 20, 30}` with `1` the identity endpoint.
pub fn default_grid() -> ScaleGrid {
    let mut scales = vec![Scale::Identity];
    scales.extend(DEFAULT_FINITE.iter().map(|&l| Scale::Finite(l)));
    ScaleGrid { scales }
}

/// [`default_grid`] plus the mean-pool endpoint, so the spectral score
/// dominates both MaxSim and MeanCos.
pub fn guaranteed_grid() -> ScaleGrid {
    let mut grid = default_grid();
    grid.scales.push(Scale::MeanPool);
    grid
}

/// How much of the length-`N` lattice a kernel occupies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum KernelSupport {
    /// All `N` taps.
    #[default]
    Full,
    /// Only taps with `|t - c| <= 2L` (about `4L + 1` of them), renormalised to
    /// sum to one. For latency experiments.
    Truncated,
}

/// A sampled, normalised sinc kernel for one finite scale.
#[derive(Debug, Clone, PartialEq)]
pub struct SincKernel {
    weights: Vec<f64>,
    scale: f64,
    support: Range<usize>,
    raw_denominator: f64,
}

impl SincKernel {
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// `(N - 1) / 2`.
    pub fn center(&self) -> f64 {
        (self.weights.len() as f64 - 1.0) / 2.0
    }

    /// Tap indices that may be nonzero.
    pub fn support(&self) -> Range<usize> {
        self.support.clone()
    }

    /// `sum_u sinc((u - c) / L)` over the support, before normalisation.
    pub fn raw_denominator(&self) -> f64 {
        self.raw_denominator
    }
}

/// Builds the full-length kernel `k_L` for a document of `n` tokens.
pub fn make_sinc_kernel(l: f64, n: usize) -> Result<SincKernel> {
    make_sinc_kernel_with(l, n, KernelSupport::Full)
}

pub fn make_sinc_kernel_with(l: f64, n: usize, support: KernelSupport) -> Result<SincKernel> {
    if !(l.is_finite() && l >= 1.0) {
        return Err(Error::InvalidParameter(format!("kernel scale must be >= 1, got {l}")));
    }
    if n == 0 {
        return Err(Error::InvalidParameter("kernel length must be >= 1".into()));
    }
    let c = (n as f64 - 1.0) / 2.0;
    let range = match support {
        KernelSupport::Full => 0..n,
        KernelSupport::Truncated => {
            let lo = (c - 2.0 * l).ceil().max(0.0) as usize;
            let hi = ((c + 2.0 * l).floor() as usize).min(n - 1);
            lo..hi + 1
        }
    };
    let mut weights = vec![0.0; n];
    for t in range.clone() {
        weights[t] = sinc((t as f64 - c) / l);
    }
    let raw_denominator: f64 = weights.iter().sum();
    // Bounded below by ~N sinc(N / 2L) for large L and by the main lobe otherwise.
    debug_assert!(raw_denominator > 0.0);
    weights.iter_mut().for_each(|w| *w /= raw_denominator);
    Ok(SincKernel {
        weights,
        scale: l,
        support: range,
        raw_denominator,
    })
}
