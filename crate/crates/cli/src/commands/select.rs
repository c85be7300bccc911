use std::path::PathBuf;

use clap::Args;
use mound_core::evaluate::format_percent;
use mound_core::features::read_features_csv;
use mound_core::regress::{load_bundle, select_best};
use mound_core::Result;

use crate::config::PipelineConfig;

use super::require_file;

#[derive(Args)]
pub struct SelectArgs {
    /// Candidate bundle JSON files, in tie-break priority order.
    #[arg(required = true)]
    pub bundles: Vec<PathBuf>,

    /// Validation feature CSV (targets required).
    #[arg(long, value_name = "PATH")]
    pub validation: PathBuf,

    /// Write the selection outcome as JSON.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

pub fn run(args: SelectArgs, _config: &PipelineConfig) -> Result<()> {
    require_file(&args.validation)?;
    let validation = read_features_csv(&args.validation)?;
    let mut bundles = Vec::with_capacity(args.bundles.len());
    for path in &args.bundles {
        require_file(path)?;
        bundles.push(load_bundle(path)?);
    }
    let selection = select_best(&bundles, &validation)?;

    for (i, bundle) in bundles.iter().enumerate() {
        let marker = if i == selection.best_index { " <- selected" } else { "" };
        println!(
            "{:<8} rcp {:>8} ({}){marker}",
            bundle.kind().to_string(),
            format_percent(selection.rcps[i]),
            args.bundles[i].display(),
        );
    }

    if let Some(out) = &args.out {
        let json = serde_json::json!({
            "winner": bundles[selection.best_index].kind().name(),
            "winner_path": args.bundles[selection.best_index].to_string_lossy(),
            "rcps": bundles
                .iter()
                .zip(selection.rcps.iter())
                .map(|(b, r)| serde_json::json!({ "model": b.kind().name(), "rcp": r }))
                .collect::<Vec<_>>(),
        });
        std::fs::write(out, serde_json::to_string_pretty(&json).unwrap())
            .map_err(|e| mound_core::Error::io(out, e))?;
    }
    Ok(())
}
