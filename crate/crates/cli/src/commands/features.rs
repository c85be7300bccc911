use std::path::PathBuf;

use clap::Args;
use mound_core::annotations::{clip_to_patch, parse_via_with, ParseOptions};
use mound_core::features::{compute_features, write_features_csv, PatchSample, TrainingSet};
use mound_core::Result;

use crate::config::PipelineConfig;
use crate::jobs::parallel_map;
use crate::logging;
use crate::manifest::GridManifest;

use super::read_to_string;

#[derive(Args)]
pub struct FeaturesArgs {
    /// Ground-truth annotation JSON (VIA dialect).
    #[arg(long, value_name = "PATH")]
    pub ground_truth: PathBuf,

    /// Detector prediction JSON (VIA dialect with scores).
    #[arg(long, value_name = "PATH")]
    pub detections: PathBuf,

    /// Grid manifest from `mound tile` (or `mound synth`).
    #[arg(long, value_name = "PATH")]
    pub grid: PathBuf,

    /// Output feature CSV.
    #[arg(long, value_name = "PATH")]
    pub out: PathBuf,

    /// Drop predictions scored below this [default: 0.5].
    #[arg(long, value_name = "T")]
    pub score_threshold: Option<f64>,

    /// Worker threads [default: available parallelism].
    #[arg(long, value_name = "N")]
    pub jobs: Option<usize>,
}

pub fn run(args: FeaturesArgs, config: &PipelineConfig) -> Result<()> {
    let manifest = GridManifest::read(&args.grid)?;
    let grid = manifest.to_grid()?;
    let options = ParseOptions {
        score_threshold: config.score_threshold(args.score_threshold),
    };
    // Ground truth carries no scores; the threshold only affects
    // score-bearing files.
    let ground_truth = parse_via_with(&read_to_string(&args.ground_truth)?, &options)?;
    let detections = parse_via_with(&read_to_string(&args.detections)?, &options)?;

    let block_id = manifest.block_id.clone();
    let bounds: Vec<_> = grid.iter().collect();
    let samples = parallel_map(bounds, config.jobs(args.jobs), |b| -> Result<PatchSample> {
        let det_patch = clip_to_patch(&detections, &b)?;
        let gt_patch = clip_to_patch(&ground_truth, &b)?;
        Ok(PatchSample {
            block_id: block_id.clone(),
            row: b.row,
            col: b.col,
            features: compute_features(&det_patch, &b)?,
            target: Some(gt_patch.counted_mounds() as f64),
        })
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;

    let set = TrainingSet::new(samples);
    write_features_csv(&set, &args.out)?;
    logging::info(format!("{} patch samples", set.len()));
    println!("wrote {} feature rows to {}", set.len(), args.out.display());
    Ok(())
}
