//! `mound` — patch-based mound counting pipeline.
//!
//! Subcommands mirror the pipeline stages: `tile` an orthomosaic into
//! patches, compute per-patch `features` from annotation files, `fit`
//! correction models, `select` the best one, `count` a new block,
//! generate `synth` test data, and render a block `report`.

mod commands;
mod config;
mod jobs;
mod logging;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::PipelineConfig;

#[derive(Parser)]
#[command(
    name = "mound",
    version,
    about = "Two-stage mound counting: instance-segmentation features + regression correction"
)]
struct Cli {
    /// JSON config file; CLI flags override its values.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Log level for stderr: error, warn, info, debug (default warn;
    /// MOUND_LOG env var is honored when the flag is absent).
    #[arg(long, global = true, value_name = "LEVEL")]
    log: Option<String>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Split an orthomosaic image into non-overlapping patches.
    Tile(commands::tile::TileArgs),
    /// Compute the per-patch feature CSV from annotation files.
    Features(commands::features::FeaturesArgs),
    /// Train correction models from a feature CSV.
    Fit(commands::fit::FitArgs),
    /// Pick the best bundle by validation RCP.
    Select(commands::select::SelectArgs),
    /// Count mounds on a block from detections and a trained bundle.
    Count(commands::count::CountArgs),
    /// Generate synthetic blocks with known ground truth.
    Synth(commands::synth::SynthArgs),
    /// Render a Table-style block report from a counts CSV.
    Report(commands::report::ReportArgs),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    logging::init(cli.log.as_deref());
    let config = match PipelineConfig::load(cli.config.as_deref()) {
        Ok(c) => c,
        Err(e) => {
            logging::error(e.to_string());
            return ExitCode::from(2);
        }
    };
    let result = match cli.command {
        Command::Tile(args) => commands::tile::run(args, &config),
        Command::Features(args) => commands::features::run(args, &config),
        Command::Fit(args) => commands::fit::run(args, &config),
        Command::Select(args) => commands::select::run(args, &config),
        Command::Count(args) => commands::count::run(args, &config),
        Command::Synth(args) => commands::synth::run(args, &config),
        Command::Report(args) => commands::report::run(args, &config),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            logging::error(e.to_string());
            ExitCode::from(if e.is_validation() { 2 } else { 3 })
        }
    }
}
