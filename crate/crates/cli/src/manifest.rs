//! Grid manifest JSON: the tiling contract shared by `tile`,
//! `features`, and `count`.

use std::path::Path;

use mound_core::raster::{build_grid, patch_id, PatchGrid};
use mound_core::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridManifest {
    pub block_id: String,
    pub source_width: u32,
    pub source_height: u32,
    pub patch_size: u32,
    pub include_partial: bool,
    pub rows: u32,
    pub cols: u32,
    pub patches: Vec<PatchEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PatchEntry {
    pub id: String,
    pub row: u32,
    pub col: u32,
    pub x0: u32,
    pub y0: u32,
    pub width: u32,
    pub height: u32,
}

impl GridManifest {
    pub fn from_grid(block_id: &str, grid: &PatchGrid) -> Self {
        let patches = grid
            .iter()
            .map(|b| PatchEntry {
                id: patch_id(block_id, b.row, b.col),
                row: b.row,
                col: b.col,
                x0: b.x0,
                y0: b.y0,
                width: b.width,
                height: b.height,
            })
            .collect();
        GridManifest {
            block_id: block_id.to_string(),
            source_width: grid.source_width,
            source_height: grid.source_height,
            patch_size: grid.patch_size,
            include_partial: grid.include_partial,
            rows: grid.rows,
            cols: grid.cols,
            patches,
        }
    }

    /// Reconstruct the grid, checking the stored shape against the
    /// regenerated one.
    pub fn to_grid(&self) -> Result<PatchGrid> {
        let grid = build_grid(
            self.source_width,
            self.source_height,
            self.patch_size,
            self.include_partial,
        )?;
        if grid.rows != self.rows || grid.cols != self.cols {
            return Err(Error::Validation(format!(
                "manifest claims {}x{} patches but the grid computes {}x{}",
                self.rows, self.cols, grid.rows, grid.cols
            )));
        }
        if self.patches.len() as u64 != grid.patch_count() {
            return Err(Error::Validation(format!(
                "manifest lists {} patches, expected {}",
                self.patches.len(),
                grid.patch_count()
            )));
        }
        Ok(grid)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self).map_err(Error::from)?;
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let manifest: GridManifest = serde_json::from_str(&text)?;
        manifest.to_grid()?;
        Ok(manifest)
    }
}
