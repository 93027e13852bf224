//! The `SPRK` binary container for token matrices.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! header : magic "SPRK" | version u32 = 1 | dtype u8 (0 = fp32, 1 = fp16) | dim u32 | doc_count u64
//! record : id_len u16 | id bytes (UTF-8) | n_tokens u32 | n_tokens * dim values, row-major
//! ```
//!
//! Queries use the same container with `n_tokens = 1`.

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::Path;

use half::f16;

use super::{CorpusStore, Dtype, QueryVector, TokenMatrix};
use crate::{Error, Result};

pub const MAGIC: [u8; 4] = *b"SPRK";
pub const FORMAT_VERSION: u32 = 1;

pub fn write_corpus(store: &CorpusStore, path: impl AsRef<Path>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_corpus_to(store, &mut w)?;
    w.flush()?;
    Ok(())
}

pub fn write_corpus_to<W: Write>(store: &CorpusStore, w: &mut W) -> Result<()> {
    write_header(w, store.dtype(), store.dim(), store.len() as u64)?;
    for doc in store.docs() {
        write_record(w, store.dtype(), doc.doc_id(), doc.n_tokens(), doc.as_slice().iter().copied())?;
    }
    Ok(())
}

pub fn read_corpus(path: impl AsRef<Path>) -> Result<CorpusStore> {
    read_corpus_from(&mut BufReader::new(File::open(path)?))
}

pub fn read_corpus_from<R: Read>(r: &mut R) -> Result<CorpusStore> {
    let header = read_header(r)?;
    let mut store = CorpusStore::new(header.dim, header.dtype);
    for _ in 0..header.doc_count {
        let (id, n_tokens, data) = read_record(r, &header)?;
        store.push(TokenMatrix::new(id, n_tokens, header.dim, data)?)?;
    }
    expect_eof(r)?;
    Ok(store)
}

pub fn write_queries(queries: &[QueryVector], dtype: Dtype, path: impl AsRef<Path>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_queries_to(queries, dtype, &mut w)?;
    w.flush()?;
    Ok(())
}

pub fn write_queries_to<W: Write>(queries: &[QueryVector], dtype: Dtype, w: &mut W) -> Result<()> {
    let dim = queries.first().map_or(0, QueryVector::dim);
    write_header(w, dtype, dim, queries.len() as u64)?;
    for q in queries {
        if q.dim() != dim {
            return Err(Error::DimMismatch {
                expected: dim,
                found: q.dim(),
            });
        }
        write_record(w, dtype, q.query_id(), 1, q.as_slice().iter().map(|&x| x as f32))?;
    }
    Ok(())
}

/// Reads pooled query vectors. When `expected_dim` is given, a file with a
/// different `dim` is rejected.
pub fn read_queries(path: impl AsRef<Path>, expected_dim: Option<usize>) -> Result<Vec<QueryVector>> {
    read_queries_from(&mut BufReader::new(File::open(path)?), expected_dim)
}

pub fn read_queries_from<R: Read>(r: &mut R, expected_dim: Option<usize>) -> Result<Vec<QueryVector>> {
    let header = read_header(r)?;
    if let Some(expected) = expected_dim {
        if expected != header.dim {
            return Err(Error::DimMismatch {
                expected,
                found: header.dim,
            });
        }
    }
    let mut out = Vec::with_capacity(header.doc_count.min(1 << 20) as usize);
    for _ in 0..header.doc_count {
        let (id, n_tokens, data) = read_record(r, &header)?;
        if n_tokens != 1 {
            return Err(Error::InvalidRecord(format!(
                "query {id:?} has {n_tokens} rows; pooled queries have exactly one"
            )));
        }
        out.push(QueryVector::new(id, data.into_iter().map(f64::from).collect())?);
    }
    expect_eof(r)?;
    Ok(out)
}

struct Header {
    dtype: Dtype,
    dim: usize,
    doc_count: u64,
}

fn write_header<W: Write>(w: &mut W, dtype: Dtype, dim: usize, count: u64) -> Result<()> {
    let dim = u32::try_from(dim).map_err(|_| Error::InvalidParameter(format!("dim {dim} exceeds u32")))?;
    w.write_all(&MAGIC)?;
    w.write_all(&FORMAT_VERSION.to_le_bytes())?;
    w.write_all(&[dtype.tag()])?;
    w.write_all(&dim.to_le_bytes())?;
    w.write_all(&count.to_le_bytes())?;
    Ok(())
}

fn write_record<W: Write>(
    w: &mut W,
    dtype: Dtype,
    id: &str,
    n_tokens: usize,
    values: impl Iterator<Item = f32>,
) -> Result<()> {
    let id_len = u16::try_from(id.len())
        .map_err(|_| Error::InvalidRecord(format!("id of {} bytes exceeds u16", id.len())))?;
    let n_tokens = u32::try_from(n_tokens)
        .map_err(|_| Error::InvalidRecord(format!("{n_tokens} tokens exceeds u32")))?;
    w.write_all(&id_len.to_le_bytes())?;
    w.write_all(id.as_bytes())?;
    w.write_all(&n_tokens.to_le_bytes())?;
    match dtype {
        Dtype::F32 => {
            for v in values {
                w.write_all(&v.to_le_bytes())?;
            }
        }
        Dtype::F16 => {
            for v in values {
                w.write_all(&f16::from_f32(v).to_le_bytes())?;
            }
        }
    }
    Ok(())
}

fn read_exact<R: Read>(r: &mut R, buf: &mut [u8], what: &'static str) -> Result<()> {
    r.read_exact(buf).map_err(|e| match e.kind() {
        io::ErrorKind::UnexpectedEof => Error::Truncated(what),
        _ => Error::Io(e),
    })
}

fn read_header<R: Read>(r: &mut R) -> Result<Header> {
    let mut magic = [0u8; 4];
    read_exact(r, &mut magic, "magic")?;
    if magic != MAGIC {
        return Err(Error::BadMagic(magic));
    }
    let mut b4 = [0u8; 4];
    read_exact(r, &mut b4, "version")?;
    let version = u32::from_le_bytes(b4);
    if version != FORMAT_VERSION {
        return Err(Error::UnsupportedVersion(version));
    }
    let mut b1 = [0u8; 1];
    read_exact(r, &mut b1, "dtype")?;
    let dtype = Dtype::from_tag(b1[0])?;
    read_exact(r, &mut b4, "dim")?;
    let dim = u32::from_le_bytes(b4) as usize;
    if dim == 0 {
        return Err(Error::InvalidRecord("header dim is zero".into()));
    }
    let mut b8 = [0u8; 8];
    read_exact(r, &mut b8, "doc_count")?;
    Ok(Header {
        dtype,
        dim,
        doc_count: u64::from_le_bytes(b8),
    })
}

fn read_record<R: Read>(r: &mut R, header: &Header) -> Result<(String, usize, Vec<f32>)> {
    let mut b2 = [0u8; 2];
    read_exact(r, &mut b2, "id length")?;
    let mut id = vec![0u8; u16::from_le_bytes(b2) as usize];
    read_exact(r, &mut id, "id")?;
    let id = String::from_utf8(id).map_err(|e| Error::InvalidRecord(format!("id is not UTF-8: {e}")))?;
    let mut b4 = [0u8; 4];
    read_exact(r, &mut b4, "n_tokens")?;
    let n_tokens = u32::from_le_bytes(b4) as usize;
    if n_tokens == 0 {
        return Err(Error::InvalidRecord(format!("record {id:?} has zero tokens")));
    }
    let count = n_tokens * header.dim;
    let mut payload = vec![0u8; count * header.dtype.width()];
    read_exact(r, &mut payload, "payload")?;
    let data = match header.dtype {
        Dtype::F32 => payload
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
            .collect(),
        Dtype::F16 => payload
            .chunks_exact(2)
            .map(|c| f16::from_le_bytes([c[0], c[1]]).to_f32())
            .collect(),
    };
    Ok((id, n_tokens, data))
}

fn expect_eof<R: Read>(r: &mut R) -> Result<()> {
    let mut probe = [0u8; 1];
    match r.read(&mut probe)? {
        0 => Ok(()),
        _ => Err(Error::InvalidRecord("trailing bytes after last record".into())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one_doc_store(dtype: Dtype) -> CorpusStore {
        let doc = TokenMatrix::from_rows("d0", &[[0.5f32, 0.5, 0.5, 0.5]]).unwrap();
        CorpusStore::from_docs(4, dtype, [doc]).unwrap()
    }

    #[test]
    fn smallest_fp32_file_layout() {
        let store = one_doc_store(Dtype::F32);
        let mut buf = Vec::new();
        write_corpus_to(&store, &mut buf).unwrap();
        // 21-byte header, 2 + 2 id bytes, 4 n_tokens, 16 payload bytes
        assert_eq!(buf.len(), 21 + 4 + 4 + 16);
        assert_eq!(&buf[..4], b"SPRK");
        assert_eq!(buf[8], 0);
        let back = read_corpus_from(&mut buf.as_slice()).unwrap();
        assert_eq!(back, store);
    }

    #[test]
    fn two_docs_of_different_length() {
        let a = TokenMatrix::from_rows("a", &[[1.0f32, 0.0], [0.0, 1.0]]).unwrap();
        let b = TokenMatrix::from_rows("b", &[[0.6f32, 0.8]]).unwrap();
        let store = CorpusStore::from_docs(2, Dtype::F16, [a, b]).unwrap();
        let mut buf = Vec::new();
        write_corpus_to(&store, &mut buf).unwrap();
        let back = read_corpus_from(&mut buf.as_slice()).unwrap();
        assert_eq!(back.len(), 2);
        assert_eq!(back.get("a").unwrap().n_tokens(), 2);
        assert_eq!(back.get("b").unwrap().n_tokens(), 1);
    }

    #[test]
    fn error_kinds_are_distinct() {
        let mut buf = Vec::new();
        write_corpus_to(&one_doc_store(Dtype::F32), &mut buf).unwrap();

        let mut bad = buf.clone();
        bad[0] = b'X';
        assert!(matches!(read_corpus_from(&mut bad.as_slice()), Err(Error::BadMagic(_))));

        let mut bad = buf.clone();
        bad[4] = 2;
        assert!(matches!(
            read_corpus_from(&mut bad.as_slice()),
            Err(Error::UnsupportedVersion(2))
        ));

        let mut bad = buf.clone();
        bad[8] = 7;
        assert!(matches!(read_corpus_from(&mut bad.as_slice()), Err(Error::UnknownDtype(7))));

        let short = &buf[..buf.len() - 3];
        assert!(matches!(read_corpus_from(&mut &short[..]), Err(Error::Truncated("payload"))));

        let mut queries = Vec::new();
        let q = QueryVector::normalized("q", vec![1.0, 0.0, 0.0]).unwrap();
        write_queries_to(&[q], Dtype::F16, &mut queries).unwrap();
        assert!(matches!(
            read_queries_from(&mut queries.as_slice(), Some(4)),
            Err(Error::DimMismatch { expected: 4, found: 3 })
        ));
    }

    #[test]
    fn queries_must_be_single_row() {
        let mut buf = Vec::new();
        let doc = TokenMatrix::from_rows("q", &[[1.0f32, 0.0], [0.0, 1.0]]).unwrap();
        write_corpus_to(&CorpusStore::from_docs(2, Dtype::F32, [doc]).unwrap(), &mut buf).unwrap();
        assert!(matches!(
            read_queries_from(&mut buf.as_slice(), None),
            Err(Error::InvalidRecord(_))
        ));
    }
}
