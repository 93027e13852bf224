// Recall against planted cosine for single-token spikes, on a reduced corpus.
// The full-size sweep is `spectral-rerank synth alpha-sweep`.

use spectral_rerank::kernel::default_grid;
use spectral_rerank::synth::{alpha_sweep, predict_threshold, SynthSpec};

pub fn run_example() -> anyhow::Result<()> {
    let spec = SynthSpec {
        corpus_size: 200,
        query_count: 40,
        len_min: 50,
        len_max: 200,
        ..SynthSpec::default()
    };
    let table = alpha_sweep(&spec, &[0.0, 0.3, 0.6, 0.9], &default_grid())?;
    print!("{}", table.to_csv());
    let typical = (spec.len_min + spec.len_max) as f64 / 2.0;
    println!(
        "predicted recall@10 threshold: {:.3}",
        predict_threshold(spec.corpus_size as f64, typical, 10.0, spec.dim as f64)?
    );
    Ok(())
}

fn main() -> anyhow::Result<()> {
    run_example()
}
