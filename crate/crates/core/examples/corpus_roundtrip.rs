// Writes a corpus, a query file and qrels, then reads them back.

use spectral_rerank::store::{
    parse_qrels, read_corpus, read_queries, write_corpus, write_queries, CorpusStore, Dtype, QueryVector,
    TokenMatrix,
};

pub fn run_example() -> anyhow::Result<()> {
    let dir = std::env::temp_dir().join(format!("spectral-rerank-roundtrip-{}", std::process::id()));
    std::fs::create_dir_all(&dir)?;

    let mut a = TokenMatrix::from_rows("doc-a", &[[1.0f32, 2.0, 2.0], [0.0, 3.0, 4.0]])?;
    a.normalize_rows();
    let b = TokenMatrix::from_rows("doc-b", &[[0.0f32, 0.0, 1.0]])?;
    let store = CorpusStore::from_docs(3, Dtype::F16, [a, b])?;
    write_corpus(&store, dir.join("corpus.bin"))?;

    let q = QueryVector::normalized("q1", vec![0.0, 1.0, 1.0])?;
    write_queries(&[q], Dtype::F32, dir.join("queries.bin"))?;

    let back = read_corpus(dir.join("corpus.bin"))?;
    let queries = read_queries(dir.join("queries.bin"), Some(back.dim()))?;
    println!("{} docs of dim {} ({:?})", back.len(), back.dim(), back.dtype());
    for d in back.docs() {
        println!("  {} {} tokens, first row {:?}", d.doc_id(), d.n_tokens(), d.row(0));
    }
    println!("{} query: {:?}", queries[0].query_id(), queries[0].as_slice());

    let qrels = parse_qrels("q1 0 doc-a 1\nq1 0 doc-b 0\n")?;
    println!("q1 judged docs: {}, grade(doc-a) = {:?}", qrels.len(), qrels.grade("q1", "doc-a"));

    std::fs::remove_dir_all(&dir)?;
    Ok(())
}

fn main() -> anyhow::Result<()> {
    run_example()
}
