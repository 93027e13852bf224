//! Per-token document embeddings, pooled queries, and relevance judgments.
//!
//! Token rows are stored as `f32` (the widest on-disk dtype); all arithmetic
//! downstream accumulates in `f64`.

mod binary;
mod trec;

use std::collections::HashMap;

use crate::{Error, Result};

pub use binary::{
    read_corpus, read_corpus_from, read_queries, read_queries_from, write_corpus, write_corpus_to,
    write_queries, write_queries_to, FORMAT_VERSION, MAGIC,
};
pub use trec::{parse_qrels, parse_run, read_qrels, read_run, write_run, write_run_to, Qrels};

/// Tolerance on unit row norms after an fp16 round trip.
pub const UNIT_NORM_TOLERANCE: f64 = 1e-4;

/// On-disk element type of a corpus file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Dtype {
    F32,
    #[default]
    F16,
}

impl Dtype {
    pub fn tag(self) -> u8 {
        match self {
            Dtype::F32 => 0,
            Dtype::F16 => 1,
        }
    }

    pub fn from_tag(tag: u8) -> Result<Self> {
        match tag {
            0 => Ok(Dtype::F32),
            1 => Ok(Dtype::F16),
            other => Err(Error::UnknownDtype(other)),
        }
    }

    pub fn width(self) -> usize {
        match self {
            Dtype::F32 => 4,
            Dtype::F16 => 2,
        }
    }
}

impl std::str::FromStr for Dtype {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fp32" | "f32" => Ok(Dtype::F32),
            "fp16" | "f16" => Ok(Dtype::F16),
            other => Err(Error::InvalidParameter(format!("unknown dtype {other:?}"))),
        }
    }
}

/// An `N x d` matrix of token embeddings for one document, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct TokenMatrix {
    doc_id: String,
    n_tokens: usize,
    dim: usize,
    data: Vec<f32>,
}

impl TokenMatrix {
    pub fn new(doc_id: impl Into<String>, n_tokens: usize, dim: usize, data: Vec<f32>) -> Result<Self> {
        let doc_id = doc_id.into();
        if n_tokens == 0 || dim == 0 {
            return Err(Error::InvalidRecord(format!(
                "document {doc_id:?} has shape {n_tokens}x{dim}; both sides must be positive"
            )));
        }
        if data.len() != n_tokens * dim {
            return Err(Error::InvalidRecord(format!(
                "document {doc_id:?}: {} values for shape {n_tokens}x{dim}",
                data.len()
            )));
        }
        Ok(Self {
            doc_id,
            n_tokens,
            dim,
            data,
        })
    }

    /// Builds a matrix from equal-length rows.
    pub fn from_rows<R: AsRef<[f32]>>(doc_id: impl Into<String>, rows: &[R]) -> Result<Self> {
        let dim = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * dim);
        for row in rows {
            let row = row.as_ref();
            if row.len() != dim {
                return Err(Error::DimMismatch {
                    expected: dim,
                    found: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        Self::new(doc_id, rows.len(), dim, data)
    }

    pub fn doc_id(&self) -> &str {
        &self.doc_id
    }

    pub fn n_tokens(&self) -> usize {
        self.n_tokens
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn row(&self, i: usize) -> &[f32] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f32] {
        &mut self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f32]> + '_ {
        self.data.chunks_exact(self.dim)
    }

    pub fn as_slice(&self) -> &[f32] {
        &self.data
    }

    /// The matrix widened to `f64`, row-major.
    pub fn to_f64(&self) -> Vec<f64> {
        self.data.iter().map(|&x| f64::from(x)).collect()
    }

    /// Scales every nonzero row to unit Euclidean norm.
    ///
    /// Zero rows are kept in place (they hold token positions) and counted;
    /// the return value is the number of zero rows.
    pub fn normalize_rows(&mut self) -> usize {
        let dim = self.dim;
        let mut zero_rows = 0;
        for row in self.data.chunks_exact_mut(dim) {
            let norm = row.iter().map(|&x| f64::from(x).powi(2)).sum::<f64>().sqrt();
            if norm == 0.0 {
                zero_rows += 1;
                continue;
            }
            for x in row.iter_mut() {
                *x = (f64::from(*x) / norm) as f32;
            }
        }
        zero_rows
    }

    /// Checks that every row is unit-norm (or exactly zero) within `tol`.
    pub fn check_unit_rows(&self, tol: f64) -> Result<()> {
        for (i, row) in self.rows().enumerate() {
            let norm = row.iter().map(|&x| f64::from(x).powi(2)).sum::<f64>().sqrt();
            if norm != 0.0 && (norm - 1.0).abs() > tol {
                return Err(Error::InvalidRecord(format!(
                    "document {:?} row {i} has norm {norm}",
                    self.doc_id
                )));
            }
        }
        Ok(())
    }
}

/// An L2-normalised pooled query embedding.
#[derive(Debug, Clone, PartialEq)]
pub struct QueryVector {
    query_id: String,
    vec: Vec<f64>,
}

impl QueryVector {
    /// Wraps a vector that must already be unit-norm within [`UNIT_NORM_TOLERANCE`].
    pub fn new(query_id: impl Into<String>, vec: Vec<f64>) -> Result<Self> {
        let query_id = query_id.into();
        if vec.is_empty() {
            return Err(Error::InvalidRecord(format!("query {query_id:?} is empty")));
        }
        let norm = l2_norm(&vec);
        if (norm - 1.0).abs() > UNIT_NORM_TOLERANCE {
            return Err(Error::InvalidRecord(format!(
                "query {query_id:?} has norm {norm}, expected 1"
            )));
        }
        Ok(Self { query_id, vec })
    }

    /// Normalises `vec` to unit length. Fails on the zero vector.
    pub fn normalized(query_id: impl Into<String>, mut vec: Vec<f64>) -> Result<Self> {
        let query_id = query_id.into();
        let norm = l2_norm(&vec);
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::InvalidRecord(format!(
                "query {query_id:?} cannot be normalised (norm {norm})"
            )));
        }
        vec.iter_mut().for_each(|x| *x /= norm);
        Ok(Self { query_id, vec })
    }

    pub fn query_id(&self) -> &str {
        &self.query_id
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.vec
    }

    pub fn dim(&self) -> usize {
        self.vec.len()
    }
}

pub(crate) fn l2_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// An ordered, immutable-after-load collection of documents sharing one `d`.
#[derive(Debug, Clone, PartialEq)]
pub struct CorpusStore {
    dim: usize,
    dtype: Dtype,
    docs: Vec<TokenMatrix>,
    index: HashMap<String, usize>,
}

impl CorpusStore {
    pub fn new(dim: usize, dtype: Dtype) -> Self {
        Self {
            dim,
            dtype,
            docs: Vec::new(),
            index: HashMap::new(),
        }
    }

    pub fn from_docs(dim: usize, dtype: Dtype, docs: impl IntoIterator<Item = TokenMatrix>) -> Result<Self> {
        let mut store = Self::new(dim, dtype);
        for doc in docs {
            store.push(doc)?;
        }
        Ok(store)
    }

    pub fn push(&mut self, doc: TokenMatrix) -> Result<()> {
        if doc.dim() != self.dim {
            return Err(Error::DimMismatch {
                expected: self.dim,
                found: doc.dim(),
            });
        }
        if self.index.contains_key(doc.doc_id()) {
            return Err(Error::DuplicateDocId(doc.doc_id().to_owned()));
        }
        self.index.insert(doc.doc_id().to_owned(), self.docs.len());
        self.docs.push(doc);
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn dtype(&self) -> Dtype {
        self.dtype
    }

    pub fn set_dtype(&mut self, dtype: Dtype) {
        self.dtype = dtype;
    }

    pub fn len(&self) -> usize {
        self.docs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.docs.is_empty()
    }

    pub fn docs(&self) -> &[TokenMatrix] {
        &self.docs
    }

    pub fn get(&self, doc_id: &str) -> Option<&TokenMatrix> {
        self.index.get(doc_id).map(|&i| &self.docs[i])
    }

    pub fn position(&self, doc_id: &str) -> Option<usize> {
        self.index.get(doc_id).copied()
    }
}
