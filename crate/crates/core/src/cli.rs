//! Command-line front end.
//!
//! Exit codes: 0 on success, 1 on usage errors, 2 on data errors.

use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::convolution::Backend;
use crate::kernel::{default_grid, make_sinc_kernel, ScaleGrid};
use crate::metrics::{evaluate, DEFAULT_K_LIST};
use crate::pipeline::{run_queries, PipelineConfig, DEFAULT_K};
use crate::scoring::{Aggregator, SpectralScorer};
use crate::store::{read_corpus, read_queries, write_run};
use crate::synth::{alpha_sweep_on, scale_decomposition_on, width_sweep_on, Benchmark, SynthSpec};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "spectral-rerank", version, about = "Multi-scale sinc re-ranking over per-token embeddings")]
#[command(arg_required_else_help = true)]
pub struct Cli {
    /// Worker threads (default: all cores). Output does not depend on it.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Kernel utilities.
    #[command(subcommand, arg_required_else_help = true)]
    Kernel(KernelCommand),
    /// Synthetic planted-spike benchmark.
    #[command(subcommand, arg_required_else_help = true)]
    Synth(SynthCommand),
    /// Re-rank a corpus for a set of queries and write a TREC run.
    Rerank(RerankArgs),
    /// Evaluate a TREC run against qrels.
    Eval(EvalArgs),
}

#[derive(Debug, Subcommand)]
pub enum KernelCommand {
    /// Print normalized sinc weights as `t,weight` rows.
    Dump {
        /// Scale L >= 1.
        #[arg(long)]
        scale: f64,
        /// Kernel length N.
        #[arg(long)]
        len: usize,
        /// Output format.
        #[arg(long, value_enum, default_value_t = DumpFormat::Csv)]
        out: DumpFormat,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum DumpFormat {
    Csv,
}

#[derive(Debug, Subcommand)]
pub enum SynthCommand {
    /// Recall as a function of planted cosine, single-position spikes.
    AlphaSweep {
        #[command(flatten)]
        common: SynthArgs,
        /// Planted cosines.
        #[arg(long, value_delimiter = ',', default_value = "0.3,0.45,0.6,0.75,0.9")]
        alphas: Vec<f64>,
    },
    /// Recall as a function of spike width.
    WidthSweep {
        #[command(flatten)]
        common: SynthArgs,
        /// Planted cosine.
        #[arg(long, default_value_t = 0.45)]
        alpha: f64,
        /// Spike widths.
        #[arg(long, value_delimiter = ',', default_value = "1,3,5,10,20,30")]
        widths: Vec<usize>,
    },
    /// Recall of each single-scale ranker.
    ScaleDecomp {
        #[command(flatten)]
        common: SynthArgs,
        /// Planted cosine.
        #[arg(long, default_value_t = 0.60)]
        alpha: f64,
    },
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Documents in the corpus.
    #[arg(long, default_value_t = 1000)]
    pub corpus_size: usize,
    /// Planted instances per cell.
    #[arg(long, default_value_t = 200)]
    pub queries: usize,
    /// Embedding dimension.
    #[arg(long, default_value_t = 64)]
    pub dim: usize,
    /// Shortest document, in tokens.
    #[arg(long, default_value_t = 50)]
    pub len_min: usize,
    /// Longest document, in tokens.
    #[arg(long, default_value_t = 500)]
    pub len_max: usize,
    /// Master seed.
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Recall cutoffs.
    #[arg(long = "k", value_delimiter = ',', default_value = "1,5,10,50")]
    pub k_list: Vec<usize>,
    /// Scale grid; `1` is the identity, `inf` the mean-pool endpoint.
    #[arg(long, default_value_t = default_grid())]
    pub grid: ScaleGrid,
    /// Convolution backend: auto, direct or fft.
    #[arg(long, default_value = "auto")]
    pub backend: Backend,
    /// Write the CSV here instead of stdout.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

impl SynthArgs {
    fn spec(&self, alpha: f64, width: usize) -> SynthSpec {
        SynthSpec {
            corpus_size: self.corpus_size,
            query_count: self.queries,
            dim: self.dim,
            len_min: self.len_min,
            len_max: self.len_max,
            alpha,
            width,
            seed: self.seed,
            k_list: self.k_list.clone(),
        }
    }
}

#[derive(Debug, Args)]
pub struct RerankArgs {
    /// Binary corpus file.
    #[arg(long)]
    pub corpus: PathBuf,
    /// Binary query file.
    #[arg(long)]
    pub queries: PathBuf,
    /// TREC run file to write.
    #[arg(long)]
    pub out: PathBuf,
    /// First-stage pool size.
    #[arg(long, default_value_t = DEFAULT_K)]
    pub k: usize,
    /// Scale grid; `1` is the identity, `inf` the mean-pool endpoint.
    #[arg(long, default_value_t = default_grid())]
    pub grid: ScaleGrid,
    /// Within-scale aggregator: max, topm:M or pct:P.
    #[arg(long, default_value = "max")]
    pub agg: Aggregator,
    /// Convolution backend: auto, direct or fft.
    #[arg(long, default_value = "auto")]
    pub backend: Backend,
    /// Emit the mean-pooled first stage only.
    #[arg(long)]
    pub baseline: bool,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// TREC run file.
    #[arg(long)]
    pub run: PathBuf,
    /// TREC qrels file.
    #[arg(long)]
    pub qrels: PathBuf,
    /// Cutoffs.
    #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_K_LIST)]
    pub k: Vec<usize>,
    /// Print only the CSV.
    #[arg(long)]
    pub csv: bool,
}

/// Parses `args` (program name first) and runs the command.
pub fn main_with_args<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() {
                write!(stderr, "{text}")
            } else {
                write!(stdout, "{text}")
            };
            // Help requested implicitly by a bare invocation is still a usage error.
            return if matches!(
                e.kind(),
                clap::error::ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand
            ) {
                EXIT_USAGE
            } else {
                code
            };
        }
    };
    match execute(&cli, stdout) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e:#}");
            if e.downcast_ref::<Usage>().is_some() {
                EXIT_USAGE
            } else {
                EXIT_DATA
            }
        }
    }
}

#[derive(Debug, thiserror::Error)]
#[error("{0}")]
struct Usage(String);

fn usage(msg: impl Into<String>) -> anyhow::Error {
    Usage(msg.into()).into()
}

/// Runs a parsed command, writing its primary output to `stdout`.
pub fn execute(cli: &Cli, stdout: &mut dyn Write) -> anyhow::Result<()> {
    let threads = cli.threads.unwrap_or(0);
    if cli.threads == Some(0) {
        return Err(usage("--threads must be >= 1"));
    }
    let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build()?;
    let text = pool.install(|| dispatch(&cli.command))?;
    stdout.write_all(text.as_bytes())?;
    Ok(())
}

fn dispatch(command: &Command) -> anyhow::Result<String> {
    let mut stdout = String::new();
    match command {
        Command::Kernel(KernelCommand::Dump { scale, len, out: DumpFormat::Csv }) => {
            let kernel = make_sinc_kernel(*scale, *len).map_err(|e| usage(e.to_string()))?;
            let mut text = String::from("t,weight\n");
            for (t, w) in kernel.weights().iter().enumerate() {
                text.push_str(&format!("{t},{w}\n"));
            }
            stdout = text;
        }
        Command::Synth(cmd) => {
            let (common, csv) = match cmd {
                SynthCommand::AlphaSweep { common, alphas } => {
                    if let Some(a) = alphas.iter().find(|a| !(0.0..=1.0).contains(*a)) {
                        return Err(usage(format!("alpha {a} must lie in [0, 1]")));
                    }
                    let spec = common.spec(alphas.first().copied().unwrap_or(0.0), 1);
                    let bench = benchmark(&spec, common)?;
                    (common, alpha_sweep_on(&bench, alphas)?.to_csv())
                }
                SynthCommand::WidthSweep { common, alpha, widths } => {
                    if let Some(w) = widths.iter().find(|&&w| w == 0 || w > common.len_min) {
                        return Err(usage(format!("width {w} must lie in 1..={}", common.len_min)));
                    }
                    let spec = common.spec(*alpha, 1);
                    let bench = benchmark(&spec, common)?;
                    (common, width_sweep_on(&bench, widths)?.to_csv())
                }
                SynthCommand::ScaleDecomp { common, alpha } => {
                    let spec = common.spec(*alpha, 1);
                    let bench = benchmark(&spec, common)?;
                    (common, scale_decomposition_on(&bench)?.to_csv())
                }
            };
            match &common.output {
                Some(path) => fs::write(path, csv)?,
                None => stdout = csv,
            }
        }
        Command::Rerank(args) => {
            let store = read_corpus(&args.corpus)?;
            let queries = read_queries(&args.queries, Some(store.dim()))?;
            let scorer = SpectralScorer::new(args.grid.clone(), args.agg)
                .map_err(|e| usage(e.to_string()))?
                .with_backend(args.backend);
            let mut config = PipelineConfig::new(scorer);
            config.k = args.k;
            config.first_stage_only = args.baseline;
            let output = run_queries(&queries, &store, &config)?;
            write_run(&output.entries, &args.out)?;
        }
        Command::Eval(args) => {
            if args.k.is_empty() || args.k.contains(&0) {
                return Err(usage("--k needs cutoffs >= 1"));
            }
            let report = evaluate(&args.run, &args.qrels, &args.k)?;
            let text = if args.csv {
                report.to_csv()
            } else {
                format!("{}\n{}", report.to_csv(), report.to_table())
            };
            stdout = text;
        }
    }
    Ok(stdout)
}

fn benchmark(spec: &SynthSpec, common: &SynthArgs) -> anyhow::Result<Benchmark> {
    spec.validate().map_err(|e| usage(e.to_string()))?;
    Ok(Benchmark::with_backend(spec, &common.grid, common.backend)?)
}

/// Entry point for the binary.
pub fn main() -> i32 {
    let stdout = io::stdout();
    let stderr = io::stderr();
    main_with_args(std::env::args_os(), &mut stdout.lock(), &mut stderr.lock())
}
