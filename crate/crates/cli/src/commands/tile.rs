use std::path::PathBuf;

use clap::Args;
use mound_core::raster::{build_grid, extract_patch, patch_id, read_image, write_png};
use mound_core::Result;

use crate::config::PipelineConfig;
use crate::jobs::parallel_map;
use crate::logging;
use crate::manifest::GridManifest;

use super::{ensure_dir, require_file};

#[derive(Args)]
pub struct TileArgs {
    /// Source orthomosaic (8-bit PNG or TIFF).
    pub image: PathBuf,

    /// Output directory for patch PNGs and the grid manifest.
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,

    /// Patch edge length in pixels [default: 608].
    #[arg(long, value_name = "PX")]
    pub patch_size: Option<u32>,

    /// Keep clipped edge patches [default: true].
    #[arg(long, value_name = "BOOL")]
    pub partial: Option<bool>,

    /// Block id used in patch file names [default: image file stem].
    #[arg(long, value_name = "ID")]
    pub block_id: Option<String>,

    /// Worker threads [default: available parallelism].
    #[arg(long, value_name = "N")]
    pub jobs: Option<usize>,
}

pub fn run(args: TileArgs, config: &PipelineConfig) -> Result<()> {
    require_file(&args.image)?;
    ensure_dir(&args.out)?;
    let patch_size = config.patch_size(args.patch_size);
    let include_partial = config.include_partial(args.partial);
    let block_id = args.block_id.clone().unwrap_or_else(|| {
        args.image
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "block".to_string())
    });

    let raster = read_image(&args.image)?;
    let grid = build_grid(raster.width(), raster.height(), patch_size, include_partial)?;
    logging::info(format!(
        "tiling {}x{} into {} patches ({}x{})",
        raster.width(),
        raster.height(),
        grid.patch_count(),
        grid.rows,
        grid.cols
    ));

    let bounds: Vec<_> = grid.iter().collect();
    let results = parallel_map(bounds, config.jobs(args.jobs), |b| {
        let patch = extract_patch(&raster, &b)?;
        let name = format!("{}.png", patch_id(&block_id, b.row, b.col));
        write_png(&patch, &args.out.join(name))
    });
    for r in results {
        r?;
    }

    let manifest = GridManifest::from_grid(&block_id, &grid);
    manifest.write(&args.out.join("grid_manifest.json"))?;
    println!(
        "wrote {} patches and grid_manifest.json to {}",
        grid.patch_count(),
        args.out.display()
    );
    Ok(())
}
