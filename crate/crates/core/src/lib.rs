//! Multi-scale sinc re-ranking over per-token document embeddings.
//!
//! A document is an `N x d` matrix of unit-norm token embeddings. The
//! spectral score smooths that matrix along the token axis with a normalised
//! sinc kernel at several scales, renormalises every smoothed row, and takes
//! the best cosine against a pooled query vector over positions and scales.
//!
//! ```text
//!   Identity (L = 1)      finite L            MeanPool (L = inf)
//!   per-token MaxSim  <-  local windows  ->   mean-pool cosine
//! ```
//!
//! With both endpoints in the grid the score is never below either MaxSim or
//! MeanCos for the same pair.
//!
//! # Modules
//!
//! - [`store`]: token matrices, the binary corpus format, TREC qrels/run files
//! - [`kernel`]: sinc kernels on the length-aware lattice, scales and grids
//! - [`convolution`]: token-axis smoothing (direct and FFT backends)
//! - [`scoring`]: MeanCos, MaxSim, per-scale scores and the spectral score
//! - [`pipeline`]: exact first stage plus spectral re-rank, run emission
//! - [`synth`]: planted-spike benchmark and its sweeps
//! - [`metrics`]: Recall, Success, MRR, MAP, NDCG
//! - [`cli`]: the `spectral-rerank` command line
//!
//! # Quick start
//!
//! ```
//! use spectral_rerank::kernel::guaranteed_grid;
//! use spectral_rerank::scoring::{max_sim, mean_cos, spectral_score, Aggregator};
//! use spectral_rerank::store::{QueryVector, TokenMatrix};
//!
//! let mut doc = TokenMatrix::from_rows(
//!     "d1",
//!     &[vec![0.5, 0.1, 0.1, 0.1], vec![0.1, 0.1, 0.1, 0.5], vec![0.1, 0.2, 0.2, 0.1]],
//! )
//! .unwrap();
//! doc.normalize_rows();
//! let q = QueryVector::normalized("q", vec![1.0, 0.0, 0.0, 0.0]).unwrap();
//!
//! let score = spectral_score(&q, &doc, &guaranteed_grid(), Aggregator::Max).unwrap();
//! let floor = max_sim(&q, &doc).unwrap().max(mean_cos(&q, &doc).unwrap());
//! assert!(score.final_score >= floor - 1e-9);
//! ```

pub mod cli;
pub mod convolution;
pub mod error;
pub mod kernel;
pub mod metrics;
pub mod pipeline;
pub mod rng;
pub mod scoring;
pub mod store;
pub mod synth;

pub use error::{Error, Result};
