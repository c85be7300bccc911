use std::path::PathBuf;

use clap::Args;
use mound_core::annotations::{clip_to_patch, parse_via_with, ParseOptions};
use mound_core::evaluate::{block_count, build_report, format_percent, rcp, BlockCounts};
use mound_core::features::compute_features;
use mound_core::regress::load_bundle;
use mound_core::{Error, Result};

use crate::config::PipelineConfig;
use crate::manifest::GridManifest;

use super::{read_to_string, require_file};

#[derive(Args)]
pub struct CountArgs {
    /// Detector prediction JSON (VIA dialect).
    #[arg(long, value_name = "PATH")]
    pub detections: PathBuf,

    /// Grid manifest for the block.
    #[arg(long, value_name = "PATH")]
    pub grid: PathBuf,

    /// Trained model bundle JSON.
    #[arg(long, value_name = "PATH")]
    pub bundle: PathBuf,

    /// Ground-truth block count; enables RCP reporting.
    #[arg(long, value_name = "N")]
    pub gt: Option<u64>,

    /// Write a report CSV here.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,

    /// Drop predictions scored below this [default: 0.5].
    #[arg(long, value_name = "T")]
    pub score_threshold: Option<f64>,
}

pub fn run(args: CountArgs, config: &PipelineConfig) -> Result<()> {
    require_file(&args.bundle)?;
    let manifest = GridManifest::read(&args.grid)?;
    let grid = manifest.to_grid()?;
    let bundle = load_bundle(&args.bundle)?;
    let options = ParseOptions {
        score_threshold: config.score_threshold(args.score_threshold),
    };
    let detections = parse_via_with(&read_to_string(&args.detections)?, &options)?;

    let mut local = Vec::with_capacity(grid.patch_count() as usize);
    let mut corrected = Vec::with_capacity(grid.patch_count() as usize);
    for bounds in grid.iter() {
        let patch = clip_to_patch(&detections, &bounds)?;
        let features = compute_features(&patch, &bounds)?;
        local.push(features.mound_count as f64);
        corrected.push(bundle.predict(&features));
    }
    let local_count = block_count(&local)?;
    let corrected_count = block_count(&corrected)?;

    println!("block {}", manifest.block_id);
    println!("local count     {local_count}");
    println!("corrected count {corrected_count} ({})", bundle.kind());
    if let Some(gt) = args.gt {
        let local_rcp = rcp(local_count as f64, gt as f64)?;
        let corrected_rcp = rcp(corrected_count as f64, gt as f64)?;
        println!("ground truth    {gt}");
        println!("local rcp       {}", format_percent(local_rcp));
        println!("corrected rcp   {}", format_percent(corrected_rcp));
        if let Some(out) = &args.out {
            let report = build_report(
                &[BlockCounts {
                    block_id: manifest.block_id.clone(),
                    ground_truth: gt,
                    local_count,
                    model_counts: vec![corrected_count],
                }],
                &[bundle.kind().name().to_string()],
            )?;
            std::fs::write(out, report.to_csv()).map_err(|e| Error::io(out, e))?;
        }
    } else if let Some(out) = &args.out {
        let csv = format!(
            "block_id,local_count,corrected_count\n{},{local_count},{corrected_count}\n",
            manifest.block_id
        );
        std::fs::write(out, csv).map_err(|e| Error::io(out, e))?;
    }
    Ok(())
}
