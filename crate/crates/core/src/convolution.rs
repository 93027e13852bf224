//! Token-axis smoothing of a [`TokenMatrix`] with a [`SincKernel`].
//!
//! Each embedding dimension is convolved independently. The output at
//! position `i` pairs input row `j` with kernel tap `t = i + h - j`, where
//! `h = floor((N - 1) / 2)`; taps that fall off the lattice are dropped
//! (zero padding) and the result is divided by the kernel mass that remained
//! in the window. A constant signal is therefore a fixed point at every
//! position, including the edges.

use std::sync::Arc;

use realfft::num_complex::Complex;
use realfft::{ComplexToReal, RealFftPlanner, RealToComplex};

use crate::kernel::{make_sinc_kernel_with, KernelSupport, Scale, SincKernel};
use crate::store::{QueryVector, TokenMatrix};
use crate::{Error, Result};

/// `N * L` at or above which [`Backend::Auto`] switches to the FFT.
pub const FFT_CROSSOVER: f64 = 16_000.0;

/// Convolution strategy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Backend {
    /// FFT when `N * L >= 16_000`, direct otherwise.
    #[default]
    Auto,
    Direct,
    Fft,
}

impl Backend {
    fn resolve(self, n: usize, l: f64) -> Backend {
        match self {
            Backend::Auto if n as f64 * l >= FFT_CROSSOVER => Backend::Fft,
            Backend::Auto => Backend::Direct,
            other => other,
        }
    }
}

impl std::str::FromStr for Backend {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "auto" => Ok(Backend::Auto),
            "direct" => Ok(Backend::Direct),
            "fft" => Ok(Backend::Fft),
            other => Err(Error::InvalidParameter(format!("unknown backend {other:?}"))),
        }
    }
}

/// A document smoothed at one scale, before row renormalisation.
#[derive(Debug, Clone, PartialEq)]
pub struct SmoothedMatrix {
    rows: Vec<f64>,
    n_tokens: usize,
    dim: usize,
    scale: Scale,
    source_doc_id: String,
}

impl SmoothedMatrix {
    pub fn row(&self, i: usize) -> &[f64] {
        &self.rows[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.rows.chunks_exact(self.dim)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.rows
    }

    pub fn n_tokens(&self) -> usize {
        self.n_tokens
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn scale(&self) -> Scale {
        self.scale
    }

    pub fn source_doc_id(&self) -> &str {
        &self.source_doc_id
    }
}

/// Smooths `m` at scale `s` with a full-support kernel.
pub fn smooth(m: &TokenMatrix, s: Scale, backend: Backend) -> Result<SmoothedMatrix> {
    smooth_with(m, s, backend, KernelSupport::Full)
}

pub fn smooth_with(
    m: &TokenMatrix,
    s: Scale,
    backend: Backend,
    support: KernelSupport,
) -> Result<SmoothedMatrix> {
    let (n, d) = (m.n_tokens(), m.dim());
    let rows = match s {
        Scale::Identity => m.to_f64(),
        Scale::MeanPool => {
            let mean = column_mean(m);
            let mut rows = Vec::with_capacity(n * d);
            for _ in 0..n {
                rows.extend_from_slice(&mean);
            }
            rows
        }
        Scale::Finite(l) => {
            let kernel = make_sinc_kernel_with(l, n, support)?;
            smooth_rows(&m.to_f64(), d, &kernel, backend)?
        }
    };
    Ok(SmoothedMatrix {
        rows,
        n_tokens: n,
        dim: d,
        scale: s,
        source_doc_id: m.doc_id().to_owned(),
    })
}

/// Arithmetic mean of the rows of `m`, accumulated in `f64`.
pub fn column_mean(m: &TokenMatrix) -> Vec<f64> {
    let mut mean = vec![0.0; m.dim()];
    for row in m.rows() {
        for (acc, &x) in mean.iter_mut().zip(row) {
            *acc += f64::from(x);
        }
    }
    let n = m.n_tokens() as f64;
    mean.iter_mut().for_each(|x| *x /= n);
    mean
}

/// Smooths a row-major `N x dim` matrix along its rows.
pub fn smooth_rows(rows: &[f64], dim: usize, kernel: &SincKernel, backend: Backend) -> Result<Vec<f64>> {
    let n = kernel.len();
    if dim == 0 || rows.len() != n * dim {
        return Err(Error::ShapeMismatch {
            kernel: n,
            matrix: rows.len().checked_div(dim).unwrap_or(0),
        });
    }
    let mut out = match backend.resolve(n, kernel.scale()) {
        Backend::Fft => fft_rows(rows, dim, kernel),
        _ => direct_rows(rows, dim, kernel),
    };
    let mass = boundary_mass(kernel);
    for (row, &m) in out.chunks_exact_mut(dim).zip(&mass) {
        if m != 0.0 {
            row.iter_mut().for_each(|x| *x /= m);
        }
    }
    Ok(out)
}

/// Smooths a scalar signal of length `N` with the same boundary rule.
pub fn smooth_signal(signal: &[f64], kernel: &SincKernel, backend: Backend) -> Result<Vec<f64>> {
    smooth_rows(signal, 1, kernel, backend)
}

/// Kernel mass that stays inside the lattice at each output position.
pub fn boundary_mass(kernel: &SincKernel) -> Vec<f64> {
    let w = kernel.weights();
    let n = w.len();
    let h = (n - 1) / 2;
    let mut prefix = vec![0.0; n + 1];
    for t in 0..n {
        prefix[t + 1] = prefix[t] + w[t];
    }
    (0..n)
        .map(|i| {
            let (lo, hi) = tap_range(i, h, n);
            prefix[hi + 1] - prefix[lo]
        })
        .collect()
}

/// Inclusive tap range `t` with `j = i + h - t` inside `[0, n)`.
fn tap_range(i: usize, h: usize, n: usize) -> (usize, usize) {
    let lo = (i + h).saturating_sub(n - 1);
    let hi = (i + h).min(n - 1);
    (lo, hi)
}

fn direct_rows(rows: &[f64], dim: usize, kernel: &SincKernel) -> Vec<f64> {
    let w = kernel.weights();
    let n = w.len();
    let h = (n - 1) / 2;
    let support = kernel.support();
    let mut out = vec![0.0; n * dim];
    let mut macs = 0u64;
    for (i, acc) in out.chunks_exact_mut(dim).enumerate() {
        let (lo, hi) = tap_range(i, h, n);
        let lo = lo.max(support.start);
        let hi = hi.min(support.end.saturating_sub(1));
        for (t, &wt) in w.iter().enumerate().take(hi + 1).skip(lo) {
            if wt == 0.0 {
                continue;
            }
            let j = i + h - t;
            let src = &rows[j * dim..(j + 1) * dim];
            for (a, &x) in acc.iter_mut().zip(src) {
                *a += wt * x;
            }
            macs += dim as u64;
        }
    }
    op_count::add(macs);
    out
}

struct FftPlan {
    len: usize,
    forward: Arc<dyn RealToComplex<f64>>,
    inverse: Arc<dyn ComplexToReal<f64>>,
    kernel_spectrum: Vec<Complex<f64>>,
}

impl FftPlan {
    fn new(kernel: &SincKernel) -> Self {
        let n = kernel.len();
        let len = (2 * n - 1).next_power_of_two().max(2);
        let mut planner = RealFftPlanner::<f64>::new();
        let forward = planner.plan_fft_forward(len);
        let inverse = planner.plan_fft_inverse(len);
        let mut padded = forward.make_input_vec();
        padded[..n].copy_from_slice(kernel.weights());
        let mut kernel_spectrum = forward.make_output_vec();
        forward
            .process(&mut padded, &mut kernel_spectrum)
            .expect("buffer sizes come from the plan");
        Self {
            len,
            forward,
            inverse,
            kernel_spectrum,
        }
    }
}

fn fft_rows(rows: &[f64], dim: usize, kernel: &SincKernel) -> Vec<f64> {
    let n = kernel.len();
    let h = (n - 1) / 2;
    let plan = FftPlan::new(kernel);
    let scale = 1.0 / plan.len as f64;
    let mut input = plan.forward.make_input_vec();
    let mut spectrum = plan.forward.make_output_vec();
    let mut output = plan.inverse.make_output_vec();
    let mut out = vec![0.0; n * dim];
    for col in 0..dim {
        input.iter_mut().for_each(|x| *x = 0.0);
        for j in 0..n {
            input[j] = rows[j * dim + col];
        }
        plan.forward
            .process(&mut input, &mut spectrum)
            .expect("buffer sizes come from the plan");
        for (s, k) in spectrum.iter_mut().zip(&plan.kernel_spectrum) {
            *s *= k;
        }
        // DC and Nyquist bins of a real signal are real.
        spectrum[0].im = 0.0;
        if let Some(last) = spectrum.last_mut() {
            last.im = 0.0;
        }
        plan.inverse
            .process(&mut spectrum, &mut output)
            .expect("buffer sizes come from the plan");
        for i in 0..n {
            out[i * dim + col] = output[i + h] * scale;
        }
    }
    out
}

/// `f[i] = <q, m[i]>`, the per-token cosine signal for unit rows.
pub fn per_token_cosines(q: &QueryVector, m: &TokenMatrix) -> Result<Vec<f64>> {
    check_dims(q, m)?;
    let qv = q.as_slice();
    Ok(m.rows().map(|row| dot_f32(qv, row)).collect())
}

pub(crate) fn check_dims(q: &QueryVector, m: &TokenMatrix) -> Result<()> {
    if q.dim() != m.dim() {
        return Err(Error::DimMismatch {
            expected: m.dim(),
            found: q.dim(),
        });
    }
    Ok(())
}

pub(crate) fn dot_f32(q: &[f64], row: &[f32]) -> f64 {
    q.iter().zip(row).map(|(&a, &b)| a * f64::from(b)).sum()
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Multiply-accumulate counter for the direct backend.
///
/// Counts one unit per (output position, dimension, tap) product on the
/// current thread. Only active in builds with debug assertions.
pub mod op_count {
    #[cfg(debug_assertions)]
    thread_local! {
        static MACS: std::cell::Cell<u64> = const { std::cell::Cell::new(0) };
    }

    #[inline]
    pub(crate) fn add(_n: u64) {
        #[cfg(debug_assertions)]
        MACS.with(|c| c.set(c.get() + _n));
    }

    /// Returns the current count and resets it to zero.
    #[cfg(debug_assertions)]
    pub fn take() -> u64 {
        MACS.with(|c| c.replace(0))
    }
}
