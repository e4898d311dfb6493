//! Pipeline driver for the complementary-clothing recommendation engine.
//!
//! Exit codes: 0 success, 1 usage, 2 missing artifact, 3 data error. Every
//! successful run prints one JSON summary object on stdout; diagnostics go
//! to stderr.

mod artifacts;
mod commands;
mod config;
mod error;

use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crate::config::PipelineConfig;
use crate::error::{CliError, CliResult};

#[derive(Debug, Parser)]
#[command(name = "outfit", version, about = "Complementary clothing recommendation pipeline")]
struct Cli {
    /// TOML config with [paths] and [params]; flags override it.
    #[arg(long, global = true, env = "OUTFIT_CONFIG")]
    config: Option<PathBuf>,

    /// Increase log verbosity (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Parse a manifest, apply cleanup filters, write cleaned records.
    Ingest(commands::ingest::IngestArgs),
    /// Compute per-part descriptors into the descriptor cache.
    Featurize(commands::featurize::FeaturizeArgs),
    /// Train the shared vector-quantization codebook.
    Codebook(commands::codebook::CodebookArgs),
    /// Train a recommender model.
    Train(commands::train::TrainArgs),
    /// Transform a query image into predicted hidden-part descriptors.
    Recommend(commands::recommend::RecommendArgs),
    /// Rank inventory items against transformed queries.
    Retrieve(commands::retrieve::RetrieveArgs),
    /// Aggregate crowd ratings into agreement-filtered scores.
    Evaluate(commands::evaluate::EvaluateArgs),
    /// Render the per-query retrieval gallery.
    Report(commands::report::ReportArgs),
}

fn dispatch(cli: Cli) -> CliResult<serde_json::Value> {
    let config = match &cli.config {
        Some(path) => PipelineConfig::load(path)?,
        None => PipelineConfig::default(),
    };
    match cli.command {
        Command::Ingest(args) => commands::ingest::run(&config, args),
        Command::Featurize(args) => commands::featurize::run(&config, args),
        Command::Codebook(args) => commands::codebook::run(&config, args),
        Command::Train(args) => commands::train::run(&config, args),
        Command::Recommend(args) => commands::recommend::run(&config, args),
        Command::Retrieve(args) => commands::retrieve::run(&config, args),
        Command::Evaluate(args) => commands::evaluate::run(&config, args),
        Command::Report(args) => commands::report::run(&config, args),
    }
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => CliError::Usage(String::new()).exit_code(),
            };
            let _ = e.print();
            std::process::exit(code);
        }
    };

    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new()
        .filter_level(level)
        .parse_default_env()
        .init();

    match dispatch(cli) {
        Ok(summary) => {
            println!("{summary}");
        }
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(e.exit_code());
        }
    }
}
