fn main() {
    std::process::exit(spectral_rerank::cli::main());
}
