mod commands;
mod config;
mod error;
mod prepared;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ged_core::evaluation::ReportFormat;
use ged_core::Integration;

use commands::{Model, PredictInput, Predictor};
use config::{Overrides, RunConfig};
use error::{write_file, CliError, CliResult};
use prepared::Prepared;

/// Token-level grammatical error detection.
#[derive(Parser)]
#[command(name = "ged", version)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// TOML run configuration; relative paths inside it are resolved against its directory.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true, value_parser = parse_integration)]
    integration: Option<Integration>,
    /// Contextual vector store.
    #[arg(long, global = true)]
    store: Option<PathBuf>,
    #[arg(long, global = true)]
    annotator: Option<usize>,
    #[arg(long, global = true, value_parser = parse_format)]
    format: Option<ReportFormat>,
}

#[derive(Subcommand)]
enum Command {
    /// Parse corpora and write the vocabulary, encoded datasets and a manifest.
    Prepare,
    /// Train a model and write the best-epoch checkpoint and the history.
    Train,
    /// Label tokens of a prepared dataset or a tokenized text file.
    Predict {
        /// Tokenized text, one sentence per line.
        input: Option<PathBuf>,
        /// Prepared dataset to label instead of a file.
        #[arg(long, conflicts_with = "input")]
        dataset: Option<String>,
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Score a checkpoint (or a predictions file) on prepared datasets.
    Evaluate {
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        /// Labels written by `predict`, scored instead of running a model.
        #[arg(long, conflicts_with = "checkpoint")]
        predictions: Option<PathBuf>,
        /// Datasets to score; defaults to every configured test set.
        #[arg(long = "dataset")]
        datasets: Vec<String>,
        /// Average typed recall over report rows instead of pooling counts.
        #[arg(long = "macro")]
        macro_avg: bool,
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Compare typed recall of several checkpoints, e.g. input vs output integration.
    Analyze {
        /// `PATH` or `PATH=STORE`; repeat for each model.
        #[arg(long = "checkpoint", required = true)]
        checkpoints: Vec<String>,
        #[arg(long = "dataset")]
        datasets: Vec<String>,
        #[arg(long = "macro")]
        macro_avg: bool,
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Write a deterministic pseudo store covering every prepared dataset.
    PseudoStore {
        output: PathBuf,
        #[arg(long, default_value_t = 3)]
        layers: usize,
        #[arg(long, default_value_t = 16)]
        dim: usize,
    },
}

fn parse_integration(s: &str) -> Result<Integration, String> {
    s.parse().map_err(|e: ged_core::Error| e.to_string())
}

fn parse_format(s: &str) -> Result<ReportFormat, String> {
    s.parse().map_err(|e: ged_core::Error| e.to_string())
}

fn emit(text: &str, output: Option<&Path>) -> CliResult<()> {
    match output {
        Some(p) => write_file(p, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn datasets_or_tests(cfg: &RunConfig, datasets: Vec<String>) -> CliResult<Vec<String>> {
    let names = if datasets.is_empty() { cfg.test_names() } else { datasets };
    if names.is_empty() {
        return Err(CliError::config("no datasets to score: pass --dataset or configure [data.test]"));
    }
    Ok(names)
}

fn run(cli: Cli) -> CliResult<()> {
    let g = cli.global;
    let over = Overrides {
        seed: g.seed,
        integration: g.integration,
        store: g.store,
        annotator: g.annotator,
        format: g.format,
    };
    let cfg = RunConfig::load(g.config.as_deref(), &over)?;
    match cli.command {
        Command::Prepare => {
            let dir = prepared::prepare(&cfg)?;
            eprintln!("wrote {}", dir.display());
            Ok(())
        }
        Command::Train => commands::train(&cfg),
        Command::Predict {
            input,
            dataset,
            checkpoint,
            output,
        } => {
            let input = match (input, dataset) {
                (Some(p), None) => PredictInput::File(p),
                (None, Some(d)) => PredictInput::Dataset(d),
                _ => return Err(CliError::config("predict needs an input file or --dataset")),
            };
            let path = checkpoint.unwrap_or_else(|| cfg.checkpoint.clone());
            let model = Model::load(&cfg, &over, &path, cfg.store.as_deref())?;
            emit(&commands::predict(&model, &cfg, &input)?, output.as_deref())
        }
        Command::Evaluate {
            checkpoint,
            predictions,
            datasets,
            macro_avg,
            output,
        } => {
            let prepared = Prepared::open(&cfg.prepared)?;
            let datasets = datasets_or_tests(&cfg, datasets)?;
            let report = match predictions {
                Some(p) => {
                    let labels = commands::parse_predictions(&p)?;
                    commands::evaluate_report(&cfg, &Predictor::File(&labels), &prepared, &datasets, over.annotator, macro_avg)?
                }
                None => {
                    let path = checkpoint.unwrap_or_else(|| cfg.checkpoint.clone());
                    let model = Model::load(&cfg, &over, &path, cfg.store.as_deref())?;
                    commands::check_vocab(&model, &prepared)?;
                    commands::evaluate_report(&cfg, &Predictor::Model(&model), &prepared, &datasets, over.annotator, macro_avg)?
                }
            };
            emit(&report, output.as_deref())
        }
        Command::Analyze {
            checkpoints,
            datasets,
            macro_avg,
            output,
        } => {
            let prepared = Prepared::open(&cfg.prepared)?;
            let datasets = datasets_or_tests(&cfg, datasets)?;
            let models = checkpoints
                .iter()
                .map(|spec| {
                    let (path, store) = match spec.split_once('=') {
                        Some((p, s)) => (PathBuf::from(p), Some(PathBuf::from(s))),
                        None => (PathBuf::from(spec), cfg.store.clone()),
                    };
                    Model::load(&cfg, &over, &path, store.as_deref())
                })
                .collect::<CliResult<Vec<_>>>()?;
            let report = commands::analyze_report(&cfg, &models, &prepared, &datasets, over.annotator, macro_avg)?;
            emit(&report, output.as_deref())
        }
        Command::PseudoStore { output, layers, dim } => commands::write_pseudo_store(&cfg, &output, layers, dim),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code)
        }
    }
}
