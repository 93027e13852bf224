// Which scale finds a single-token spike: recall of each single-scale ranker.

use spectral_rerank::kernel::guaranteed_grid;
use spectral_rerank::synth::{scale_decomposition, SynthSpec};

pub fn run_example() -> anyhow::Result<()> {
    let spec = SynthSpec {
        corpus_size: 200,
        query_count: 40,
        len_min: 50,
        len_max: 200,
        ..SynthSpec::default()
    };
    let table = scale_decomposition(&spec, &guaranteed_grid())?;
    print!("{}", table.to_csv());
    Ok(())
}

fn main() -> anyhow::Result<()> {
    run_example()
}
