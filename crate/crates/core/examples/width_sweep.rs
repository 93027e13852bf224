// Recall against spike width at a fixed planted cosine.

use spectral_rerank::kernel::default_grid;
use spectral_rerank::synth::{width_sweep, SynthSpec};

pub fn run_example() -> anyhow::Result<()> {
    let spec = SynthSpec {
        corpus_size: 200,
        query_count: 40,
        len_min: 50,
        len_max: 200,
        alpha: 0.45,
        ..SynthSpec::default()
    };
    let table = width_sweep(&spec, &[1, 5, 20], &default_grid())?;
    print!("{}", table.to_csv());
    Ok(())
}

fn main() -> anyhow::Result<()> {
    run_example()
}
