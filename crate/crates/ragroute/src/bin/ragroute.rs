//! Thin command-line front end. Flag parsing only; all behavior lives
//! in `ragroute::cli`. Exit codes: 0 success, 1 validation error,
//! 2 runtime failure.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

use ragroute::cli::{
    cmd_eval, cmd_report, cmd_route, cmd_simulate, cmd_sweep, cmd_train, EvalInputs, EvalMethod,
    RunConfig,
};
use ragroute::{Error, Result};

#[derive(Parser)]
#[command(
    name = "ragroute",
    about = "RAG-aware LLM routing: synthetic benchmarks, router training, latency-aware evaluation"
)]
struct Cli {
    /// TOML config file; flags override file values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Seed override.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output directory override.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic model pool and labeled dataset, then split it.
    Simulate(SimulateArgs),
    /// Train the router on a JSONL dataset.
    Train(TrainArgs),
    /// Route one query (document optional) with a checkpoint.
    Route(RouteArgs),
    /// Evaluate a checkpoint or baseline on a dataset.
    Eval(EvalArgs),
    /// Sweep the score threshold and write the accuracy-latency curve.
    Sweep(SweepArgs),
    /// Compare metrics files: table, CSV, and SVG curves.
    Report(ReportArgs),
    /// Configuration helpers.
    Config(ConfigArgs),
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    models: Option<usize>,
    #[arg(long)]
    queries: Option<usize>,
    #[arg(long)]
    test_queries: Option<usize>,
    #[arg(long)]
    topics: Option<usize>,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    registry: PathBuf,
    #[arg(long)]
    train_data: PathBuf,
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long)]
    heads: Option<usize>,
    #[arg(long)]
    dim_base: Option<usize>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    label_mode: Option<String>,
    #[arg(long)]
    csc_only: bool,
    #[arg(long)]
    isc_only: bool,
    #[arg(long)]
    drop_cross_encoder: bool,
    #[arg(long)]
    drop_capability_table: bool,
}

#[derive(Args)]
struct RouteArgs {
    #[arg(long)]
    checkpoint: PathBuf,
    #[arg(long)]
    query: String,
    #[arg(long)]
    doc: Option<String>,
}

#[derive(Args)]
struct EvalArgs {
    /// Checkpoint to evaluate (router or mf kind).
    #[arg(long, conflicts_with = "baseline")]
    checkpoint: Option<PathBuf>,
    /// Baseline name: random, weighted, oracle, oracle_single_best,
    /// expected_random, knn, mf.
    #[arg(long)]
    baseline: Option<String>,
    #[arg(long)]
    registry: Option<PathBuf>,
    #[arg(long)]
    dataset: Option<PathBuf>,
    /// Training split for knn / mf / weighted.
    #[arg(long)]
    train_data: Option<PathBuf>,
    /// Router checkpoint for the weighted baseline.
    #[arg(long)]
    weights_from: Option<PathBuf>,
    /// Per-model per-task accuracy CSV (oracle_single_best only).
    #[arg(long)]
    accuracy_table: Option<PathBuf>,
    #[arg(long)]
    knn_k: Option<usize>,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    checkpoint: PathBuf,
    #[arg(long)]
    registry: PathBuf,
    #[arg(long)]
    dataset: PathBuf,
    #[arg(long)]
    grid_step: Option<f64>,
}

#[derive(Args)]
struct ReportArgs {
    /// Metrics JSON files produced by `sweep`.
    metrics: Vec<PathBuf>,
}

#[derive(Args)]
struct ConfigArgs {
    /// Print the default configuration as TOML.
    #[arg(long)]
    dump_defaults: bool,
}

fn run(cli: Cli) -> Result<()> {
    let mut config = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    if let Some(out) = &cli.out {
        config.out_dir = out.display().to_string();
    }

    match cli.command {
        Command::Simulate(args) => {
            if let Some(v) = args.models {
                config.models = v;
            }
            if let Some(v) = args.queries {
                config.queries = v;
            }
            if let Some(v) = args.test_queries {
                config.test_queries = v;
            }
            if let Some(v) = args.topics {
                config.topics = v;
            }
            let manifest = cmd_simulate(&config)?;
            println!("dataset digest: {}", manifest.dataset_digest);
            println!(
                "records: {} train / {} test ({} models, {} topics)",
                manifest.train_records, manifest.test_records, manifest.models, manifest.topics
            );
            Ok(())
        }
        Command::Train(args) => {
            if let Some(v) = args.dim {
                config.dim = v;
            }
            if let Some(v) = args.heads {
                config.heads = v;
            }
            if let Some(v) = args.dim_base {
                config.dim_base = v;
            }
            if let Some(v) = args.epochs {
                config.epochs = v;
            }
            if let Some(v) = args.batch_size {
                config.batch_size = v;
            }
            if let Some(v) = args.lr {
                config.lr = v;
            }
            if let Some(v) = args.tau {
                config.tau = v;
            }
            if let Some(v) = args.lambda {
                config.lambda = v;
            }
            if let Some(v) = args.label_mode {
                config.label_mode = v;
            }
            config.csc_only |= args.csc_only;
            config.isc_only |= args.isc_only;
            config.drop_cross_encoder |= args.drop_cross_encoder;
            config.drop_capability_table |= args.drop_capability_table;

            let manifest = cmd_train(&config, &args.registry, &args.train_data)?;
            for (epoch, (loss, acc)) in manifest
                .report
                .epoch_loss
                .iter()
                .zip(&manifest.report.epoch_accuracy)
                .enumerate()
            {
                println!("epoch {epoch:>2}: loss {loss:.6} train-acc {acc:.4}");
            }
            println!(
                "checkpoint: {}",
                config.out_path("router.ckpt").display()
            );
            Ok(())
        }
        Command::Route(args) => {
            let decision = cmd_route(&args.checkpoint, &args.query, args.doc.as_deref())?;
            println!("{}", serde_json::to_string_pretty(&decision).map_err(Error::from)?);
            Ok(())
        }
        Command::Eval(args) => {
            let method = match (&args.checkpoint, &args.baseline) {
                (Some(path), None) => EvalMethod::Checkpoint(path.clone()),
                (None, Some(name)) => EvalMethod::Baseline(name.clone()),
                _ => {
                    return Err(Error::Invalid(
                        "eval needs exactly one of --checkpoint or --baseline".into(),
                    ))
                }
            };
            if let Some(k) = args.knn_k {
                config.knn_k = k;
            }
            let inputs = EvalInputs {
                train_path: args.train_data.clone(),
                checkpoint: args.weights_from.clone(),
                accuracy_table: args.accuracy_table.clone(),
            };
            let table_only = args.accuracy_table.is_some();
            let (registry, dataset) = if table_only {
                // Paths unused in table mode; placeholders keep the API one shape.
                (
                    args.registry.clone().unwrap_or_default(),
                    args.dataset.clone().unwrap_or_default(),
                )
            } else {
                (
                    args.registry.clone().ok_or_else(|| {
                        Error::Invalid("eval needs --registry".into())
                    })?,
                    args.dataset.clone().ok_or_else(|| {
                        Error::Invalid("eval needs --dataset".into())
                    })?,
                )
            };
            let report = cmd_eval(&config, &method, &registry, &dataset, &inputs)?;
            println!("{}", serde_json::to_string_pretty(&report).map_err(Error::from)?);
            Ok(())
        }
        Command::Sweep(args) => {
            if let Some(v) = args.grid_step {
                config.grid_step = v;
            }
            let metrics = cmd_sweep(&config, &args.checkpoint, &args.registry, &args.dataset)?;
            println!("{}", serde_json::to_string_pretty(&metrics).map_err(Error::from)?);
            Ok(())
        }
        Command::Report(args) => {
            let table = cmd_report(&config, &args.metrics)?;
            print!("{table}");
            Ok(())
        }
        Command::Config(args) => {
            if args.dump_defaults {
                print!("{}", RunConfig::dump_defaults());
            } else {
                println!("use --dump-defaults to print the default configuration");
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_validation() { 1 } else { 2 })
        }
    }
}
