use std::path::PathBuf;

use clap::Args;
use mound_core::annotations::serialize_via;
use mound_core::raster::{build_grid, write_png};
use mound_core::synth::{generate_suite, BlockManifest, SynthParams};
use mound_core::{Error, Result};

use crate::config::PipelineConfig;
use crate::logging;
use crate::manifest::GridManifest;

use super::{ensure_dir, read_to_string};

#[derive(Args)]
pub struct SynthArgs {
    /// Output directory for the generated suite.
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,

    /// Template parameters JSON (defaults used when omitted).
    #[arg(long, value_name = "PATH")]
    pub params: Option<PathBuf>,

    /// Number of blocks to generate.
    #[arg(long, value_name = "N", default_value_t = 1)]
    pub n: u32,

    /// Suite seed; per-block seeds are derived from it [default: 0].
    #[arg(long, value_name = "N")]
    pub seed: Option<u64>,
}

pub fn run(args: SynthArgs, config: &PipelineConfig) -> Result<()> {
    let template: SynthParams = match &args.params {
        Some(path) => {
            let params: SynthParams = serde_json::from_str(&read_to_string(path)?)?;
            params.validate()?;
            params
        }
        None => SynthParams::default(),
    };
    ensure_dir(&args.out)?;
    let seed = config.seed(args.seed);
    let blocks = generate_suite(args.n, &template, seed)?;

    let mut ids = Vec::with_capacity(blocks.len());
    for block in &blocks {
        let id = &block.params.block_id;
        let raster_name = format!("{id}_raster.png");
        let truth_name = format!("{id}_truth.json");
        let det_name = format!("{id}_detections.json");
        write_png(&block.raster, &args.out.join(&raster_name))?;
        let write = |name: &str, text: String| -> Result<()> {
            let path = args.out.join(name);
            std::fs::write(&path, text).map_err(|e| Error::io(path, e))
        };
        write(&truth_name, serialize_via(&block.ground_truth))?;
        write(&det_name, serialize_via(&block.detections))?;
        let manifest = BlockManifest {
            block_id: id.clone(),
            seed: block.params.rng_seed,
            params: block.params.clone(),
            gt_count: block.gt_count,
            raster: raster_name,
            ground_truth: truth_name,
            detections: det_name,
        };
        write(
            &format!("{id}_manifest.json"),
            serde_json::to_string_pretty(&manifest)?,
        )?;
        // Grid manifest so features/count run directly on the output.
        let grid = build_grid(
            block.params.block_width,
            block.params.block_height,
            block.params.patch_size,
            true,
        )?;
        GridManifest::from_grid(id, &grid).write(&args.out.join(format!("{id}_grid.json")))?;
        logging::info(format!("block {id}: {} mounds", block.gt_count));
        ids.push(id.clone());
    }

    let suite = serde_json::json!({
        "base_seed": seed,
        "n_blocks": args.n,
        "blocks": ids,
    });
    let suite_path = args.out.join("suite.json");
    std::fs::write(&suite_path, serde_json::to_string_pretty(&suite).unwrap())
        .map_err(|e| Error::io(&suite_path, e))?;
    println!("wrote {} blocks to {}", blocks.len(), args.out.display());
    Ok(())
}
