use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use vitlca::costmodel::{training_flops, CostParams, CostReport, DEFAULT_JOULES_PER_FLOP};
use vitlca::decoders::MaxMode;
use vitlca::embedset::EmbeddingSet;
use vitlca::harness::{
    evaluate, load_dictionary, synth_clusters, synth_split, DecoderSelection, Fallback,
    HarnessError, RunConfig, SynthSpec,
};
use vitlca::lca::{Dictionary, Gramian, LcaParams};

#[derive(Parser)]
#[command(name = "vitlca", version, about = "Exemplar LCA sparse-coding classifier")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum DecoderArg {
    Max,
    Maxsum,
    Both,
}

#[derive(Clone, Copy, ValueEnum)]
enum FallbackArg {
    None,
    Majority,
}

#[derive(Subcommand)]
enum Command {
    /// Normalize a training embedding set into a dictionary file
    BuildDict {
        #[arg(long)]
        train: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Compute the Gramian of a dictionary and write the packed cache
    Gramian {
        /// Dictionary file, or a .vlca set to build one from
        #[arg(long)]
        dict: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Encode and classify a test set
    Evaluate {
        /// Dictionary file, or a .vlca set to build one from
        #[arg(long)]
        dict: PathBuf,
        #[arg(long)]
        test: PathBuf,
        /// Gramian cache; computed in memory when absent
        #[arg(long)]
        gram: Option<PathBuf>,
        #[arg(long, default_value_t = 2.0, allow_negative_numbers = true)]
        lambda: f64,
        #[arg(long, default_value_t = 100.0, allow_negative_numbers = true)]
        tau: f64,
        #[arg(long, default_value_t = 100)]
        steps: usize,
        #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
        dt: f64,
        #[arg(long, value_enum, default_value = "both")]
        decoder: DecoderArg,
        /// Score max-activation by signed activations instead of magnitudes
        #[arg(long)]
        signed_max: bool,
        /// L2-normalize test inputs before encoding
        #[arg(long)]
        normalize_input: bool,
        /// Prediction for inputs whose code is all zero
        #[arg(long, value_enum, default_value = "none")]
        fallback: FallbackArg,
        #[arg(long, default_value_t = DEFAULT_JOULES_PER_FLOP, allow_negative_numbers = true)]
        jpf: f64,
        #[arg(long)]
        workers: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Line-delimited JSON record file
        #[arg(long)]
        report: Option<PathBuf>,
        /// Divergent inputs tolerated before exiting with status 2
        #[arg(long, default_value_t = 0)]
        max_divergent: usize,
    },
    /// Print FLOP and energy estimates without running inference
    Cost {
        #[arg(long, default_value_t = 50_000)]
        m: u64,
        #[arg(long, default_value_t = 768)]
        n: u64,
        #[arg(long, default_value_t = 100)]
        k: u64,
        #[arg(long, default_value_t = 200)]
        m_hat: u64,
        #[arg(long, default_value_t = DEFAULT_JOULES_PER_FLOP, allow_negative_numbers = true)]
        jpf: f64,
        /// Emit the report as one JSON object
        #[arg(long)]
        json: bool,
    },
    /// Generate clustered synthetic embeddings
    Synth {
        #[arg(long)]
        clusters: usize,
        #[arg(long)]
        per_cluster: usize,
        #[arg(long)]
        dim: usize,
        #[arg(long, allow_negative_numbers = true)]
        spread: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// Samples per cluster moved to a separate test file
        #[arg(long, requires = "test_out")]
        holdout: Option<usize>,
        #[arg(long)]
        test_out: Option<PathBuf>,
    },
}

fn run(cmd: Command) -> Result<(), HarnessError> {
    match cmd {
        Command::BuildDict { train, out } => {
            let set = EmbeddingSet::load(&train)?;
            let dict = Dictionary::build(&set)?;
            dict.save(&out)?;
            println!("M={} N={} C={}", dict.len(), dict.n_dim(), dict.n_classes());
        }
        Command::Gramian { dict, out } => {
            let dict = load_dictionary(&dict)?;
            let gram = Gramian::compute(&dict)?;
            gram.to_packed().save(&out)?;
            let flops = training_flops(dict.len() as u64, dict.n_dim() as u64)?;
            println!("M={} N={}", dict.len(), dict.n_dim());
            println!("training_flops={flops}");
        }
        Command::Evaluate {
            dict,
            test,
            gram,
            lambda,
            tau,
            steps,
            dt,
            decoder,
            signed_max,
            normalize_input,
            fallback,
            jpf,
            workers,
            seed,
            report,
            max_divergent,
        } => {
            let mut config = RunConfig::new(dict, test);
            config.gramian_path = gram;
            config.params = LcaParams {
                threshold: lambda,
                tau,
                n_steps: steps,
                dt,
            };
            config.decoders = match decoder {
                DecoderArg::Max => DecoderSelection::Max,
                DecoderArg::Maxsum => DecoderSelection::MaxSum,
                DecoderArg::Both => DecoderSelection::Both,
            };
            config.max_mode = if signed_max {
                MaxMode::Signed
            } else {
                MaxMode::Absolute
            };
            config.normalize_input = normalize_input;
            config.fallback = match fallback {
                FallbackArg::None => Fallback::None,
                FallbackArg::Majority => Fallback::Majority,
            };
            config.joules_per_flop = jpf;
            config.workers = workers;
            config.seed = seed;
            config.report_path = report;
            config.max_divergent = max_divergent;

            let (report, _) = evaluate(&config)?;
            print!("{}", report.to_table());
            for d in &report.divergent {
                eprintln!("record {} diverged at step {}", d.index, d.step);
            }
            if report.divergent.len() > config.max_divergent {
                return Err(HarnessError::TooManyDivergent {
                    count: report.divergent.len(),
                    allowed: config.max_divergent,
                });
            }
        }
        Command::Cost {
            m,
            n,
            k,
            m_hat,
            jpf,
            json,
        } => {
            let report = CostReport::new(CostParams {
                m,
                n,
                k,
                m_hat,
                joules_per_flop: jpf,
            })?;
            if json {
                println!("{}", serde_json::to_string(&report)?);
            } else {
                print!("{}", report.to_kv_text());
                println!("{}", report.summary());
            }
        }
        Command::Synth {
            clusters,
            per_cluster,
            dim,
            spread,
            seed,
            out,
            holdout,
            test_out,
        } => {
            let spec = SynthSpec {
                n_clusters: clusters,
                per_cluster,
                n_dim: dim,
                spread,
                seed,
            };
            match (holdout, test_out) {
                (Some(h), Some(test_out)) => {
                    let (train, test) = synth_split(&spec, h)?;
                    train.save(&out)?;
                    test.save(&test_out)?;
                    println!("train={} test={}", train.len(), test.len());
                }
                _ => {
                    let set = synth_clusters(&spec)?;
                    set.save(&out)?;
                    println!("records={}", set.len());
                }
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
