// Normalised sinc kernels on a 64-token document at a few scales.
//
// Run with `cargo run --example kernel_shapes`.

use spectral_rerank::kernel::make_sinc_kernel;

pub fn run_example() -> anyhow::Result<()> {
    let n = 64;
    for l in [1.0, 3.0, 7.0, 20.0, 1e6] {
        let k = make_sinc_kernel(l, n)?;
        let sum: f64 = k.weights().iter().sum();
        let peak = k.weights().iter().cloned().fold(f64::MIN, f64::max);
        let zeros = k.weights().iter().filter(|w| **w == 0.0).count();
        println!(
            "L={l:<9} center={:.1} peak={peak:.5} zeros={zeros:>2} sum={sum:.12} raw_denominator={:.4}",
            k.center(),
            k.raw_denominator()
        );
        anyhow::ensure!((sum - 1.0).abs() < 1e-9);
    }
    // Odd length puts a tap on the centre; the zero crossings sit at multiples of L from it.
    let k = make_sinc_kernel(3.0, 7)?;
    println!("L=3, N=7: {:?}", k.weights());
    Ok(())
}

fn main() -> anyhow::Result<()> {
    run_example()
}
