// A single scale grid that contains both endpoints recovers MaxSim and MeanCos.

use spectral_rerank::kernel::{default_grid, guaranteed_grid, Scale};
use spectral_rerank::scoring::{max_sim, mean_cos, Aggregator, SpectralScorer};
use spectral_rerank::store::{QueryVector, TokenMatrix};

fn doc(id: &str, rows: &[[f32; 4]]) -> anyhow::Result<TokenMatrix> {
    let mut m = TokenMatrix::from_rows(id, rows)?;
    m.normalize_rows();
    Ok(m)
}

pub fn run_example() -> anyhow::Result<()> {
    let q = QueryVector::new("q", vec![1.0, 0.0, 0.0, 0.0])?;
    let docs = [
        doc("d1", &[[0.5, 0.1, 0.1, 0.1], [0.1, 0.1, 0.1, 0.5], [0.1, 0.2, 0.2, 0.1]])?,
        doc("d2", &[[0.3; 4]; 3])?,
        doc("d3", &[[0.1, 0.2, 0.3, 0.4], [0.4, 0.3, 0.2, 0.1], [0.25; 4]])?,
    ];
    let guaranteed = SpectralScorer::new(guaranteed_grid(), Aggregator::Max)?;
    let default = SpectralScorer::new(default_grid(), Aggregator::Max)?;

    println!("doc   maxsim   meancos  sigma_1  sigma_inf  spectral(default)  spectral(+inf)");
    for d in &docs {
        let g = guaranteed.score(&q, d)?;
        let s = default.score(&q, d)?;
        let (identity, pooled) = (g.get(Scale::Identity).unwrap(), g.get(Scale::MeanPool).unwrap());
        println!(
            "{:<5} {:.5}  {:.5}  {identity:.5}  {pooled:.5}    {:.5}            {:.5}",
            d.doc_id(),
            max_sim(&q, d)?,
            mean_cos(&q, d)?,
            s.final_score,
            g.final_score
        );
        anyhow::ensure!(identity == max_sim(&q, d)?);
        anyhow::ensure!(pooled == mean_cos(&q, d)?);
        anyhow::ensure!(g.final_score >= identity.max(pooled));
    }
    Ok(())
}

fn main() -> anyhow::Result<()> {
    run_example()
}
