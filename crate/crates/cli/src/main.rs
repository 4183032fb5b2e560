use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use kbscore_cli::config::PipelineConfig;
use kbscore_cli::pipeline::{self, Relation};
use kbscore_cli::{CliError, CliResult, EXIT_USAGE};

/// Score person–profession and person–nationality triples on a 0–7 scale.
#[derive(Debug, Parser)]
#[command(name = "kbscore", version)]
struct Cli {
    /// Configuration file of `key = value` lines.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads; 1 makes every stage deterministic.
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Clamp predictions into 2..=5.
    #[arg(long, global = true)]
    truncate: bool,
    /// Directory for all produced files.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    /// More log output (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Tokenize the annotated corpus.
    Preprocess,
    /// Train CBOW embeddings on the tokenized corpus.
    TrainEmbeddings,
    /// Derive the country to demonym mapping.
    BuildMapping,
    /// Propagate training scores through embedding neighbors.
    LearnProfession,
    PredictProfession,
    /// Score nationalities from per-person documents.
    LearnNationality,
    PredictNationality,
    /// Compare predictions with gold scores.
    Evaluate {
        #[arg(long, value_enum)]
        relation: RelationArg,
        /// Defaults to the relation's prediction file in the output directory.
        #[arg(long)]
        predictions: Option<PathBuf>,
        /// Scored gold file; defaults to the relation's evaluation rows.
        #[arg(long)]
        gold: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum RelationArg {
    Profession,
    Nationality,
}

fn run(cli: Cli) -> CliResult<String> {
    let mut config = match &cli.config {
        Some(path) => PipelineConfig::load(path)?,
        None => PipelineConfig::default(),
    };
    if let Some(w) = cli.workers {
        if w == 0 {
            return Err(CliError::usage("--workers must be at least 1"));
        }
        config.set_workers(w);
    }
    if let Some(seed) = cli.seed {
        config.set_seed(seed);
    }
    if let Some(out) = cli.output {
        config.output = out;
    }
    config.apply_truncation |= cli.truncate;

    rayon::ThreadPoolBuilder::new()
        .num_threads(config.embedding.workers)
        .build_global()
        .map_err(|e| CliError::usage(format!("cannot start worker pool: {e}")))?;

    match cli.command {
        Command::Preprocess => pipeline::preprocess(&config),
        Command::TrainEmbeddings => pipeline::train_embeddings(&config),
        Command::BuildMapping => pipeline::build_mapping(&config),
        Command::LearnProfession => pipeline::learn_profession(&config),
        Command::PredictProfession => pipeline::predict_profession_command(&config),
        Command::LearnNationality => pipeline::learn_nationality(&config),
        Command::PredictNationality => pipeline::predict_nationality_command(&config),
        Command::Evaluate {
            relation,
            predictions,
            gold,
        } => {
            let relation = match relation {
                RelationArg::Profession => Relation::Profession,
                RelationArg::Nationality => Relation::Nationality,
            };
            pipeline::evaluate(&config, relation, predictions.as_deref(), gold.as_deref())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_USAGE)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new().filter_level(level).format_timestamp(None).init();

    match run(cli) {
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code)
        }
    }
}
