//! Orthomosaic rasters and their decomposition into a non-overlapping
//! patch grid.
//!
//! Patches are indexed row-major and zero-based. With `include_partial`
//! the grid covers every source pixel exactly once; clipped edge patches
//! keep their true (smaller) size so downstream area ratios stay unbiased.

use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::Path;

use crate::error::{Error, Result};

/// 8-bit raster, row-major, channel-interleaved.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Raster {
    width: u32,
    height: u32,
    channels: u8,
    pixels: Vec<u8>,
    valid_mask: Option<Vec<bool>>,
}

impl Raster {
    pub fn new(width: u32, height: u32, channels: u8, pixels: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidArgument(format!(
                "raster dimensions must be >= 1, got {width}x{height}"
            )));
        }
        if channels != 1 && channels != 3 {
            return Err(Error::InvalidArgument(format!(
                "raster must have 1 or 3 channels, got {channels}"
            )));
        }
        let expected = width as usize * height as usize * channels as usize;
        if pixels.len() != expected {
            return Err(Error::InvalidArgument(format!(
                "pixel buffer length {} does not match {width}x{height}x{channels} = {expected}",
                pixels.len()
            )));
        }
        Ok(Raster {
            width,
            height,
            channels,
            pixels,
            valid_mask: None,
        })
    }

    /// Uniform fill, mostly for tests and synthetic data.
    pub fn filled(width: u32, height: u32, channels: u8, value: u8) -> Result<Self> {
        let len = width as usize * height as usize * channels as usize;
        Raster::new(width, height, channels, vec![value; len])
    }

    pub fn with_valid_mask(mut self, mask: Vec<bool>) -> Result<Self> {
        if mask.len() != self.width as usize * self.height as usize {
            return Err(Error::InvalidArgument(format!(
                "valid mask length {} does not match {}x{}",
                mask.len(),
                self.width,
                self.height
            )));
        }
        self.valid_mask = Some(mask);
        Ok(self)
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn channels(&self) -> u8 {
        self.channels
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn valid_mask(&self) -> Option<&[bool]> {
        self.valid_mask.as_deref()
    }

    /// Sample one channel at (x, y).
    pub fn sample(&self, x: u32, y: u32, channel: u8) -> u8 {
        debug_assert!(x < self.width && y < self.height && channel < self.channels);
        let idx = (y as usize * self.width as usize + x as usize) * self.channels as usize
            + channel as usize;
        self.pixels[idx]
    }

    pub fn set_pixel(&mut self, x: u32, y: u32, value: &[u8]) {
        debug_assert_eq!(value.len(), self.channels as usize);
        let idx = (y as usize * self.width as usize + x as usize) * self.channels as usize;
        self.pixels[idx..idx + value.len()].copy_from_slice(value);
    }
}

/// Deterministic decomposition of a raster extent into patches.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PatchGrid {
    pub source_width: u32,
    pub source_height: u32,
    pub patch_size: u32,
    pub rows: u32,
    pub cols: u32,
    pub include_partial: bool,
}

/// Pixel extent of one patch within its source raster.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PatchBounds {
    pub x0: u32,
    pub y0: u32,
    pub width: u32,
    pub height: u32,
    pub row: u32,
    pub col: u32,
}

impl PatchBounds {
    pub fn area(&self) -> u64 {
        self.width as u64 * self.height as u64
    }
}

/// Default patch edge length in pixels.
pub const DEFAULT_PATCH_SIZE: u32 = 608;

/// Build the patch grid for a source extent.
///
/// With `include_partial`, clipped edge patches are kept so the grid
/// covers every pixel; otherwise only full patches remain.
pub fn build_grid(
    source_width: u32,
    source_height: u32,
    patch_size: u32,
    include_partial: bool,
) -> Result<PatchGrid> {
    if source_width == 0 || source_height == 0 || patch_size == 0 {
        return Err(Error::InvalidArgument(format!(
            "grid dimensions must be >= 1, got {source_width}x{source_height} patch {patch_size}"
        )));
    }
    let (rows, cols) = if include_partial {
        (
            source_height.div_ceil(patch_size),
            source_width.div_ceil(patch_size),
        )
    } else {
        (source_height / patch_size, source_width / patch_size)
    };
    Ok(PatchGrid {
        source_width,
        source_height,
        patch_size,
        rows,
        cols,
        include_partial,
    })
}

impl PatchGrid {
    pub fn patch_count(&self) -> u64 {
        self.rows as u64 * self.cols as u64
    }

    /// Row-major iteration over all patch bounds.
    pub fn iter(&self) -> impl Iterator<Item = PatchBounds> + '_ {
        let grid = *self;
        (0..grid.rows).flat_map(move |row| {
            (0..grid.cols).map(move |col| patch_bounds(&grid, row, col).expect("in-range index"))
        })
    }

    /// Linear row-major index of a patch.
    pub fn patch_index(&self, row: u32, col: u32) -> u64 {
        row as u64 * self.cols as u64 + col as u64
    }
}

/// Bounds of the patch at (row, col), clipped to the source extent.
pub fn patch_bounds(grid: &PatchGrid, row: u32, col: u32) -> Result<PatchBounds> {
    if row >= grid.rows || col >= grid.cols {
        return Err(Error::IndexOutOfRange(format!(
            "patch ({row}, {col}) outside grid of {}x{}",
            grid.rows, grid.cols
        )));
    }
    let x0 = col * grid.patch_size;
    let y0 = row * grid.patch_size;
    let width = grid.patch_size.min(grid.source_width - x0);
    let height = grid.patch_size.min(grid.source_height - y0);
    Ok(PatchBounds {
        x0,
        y0,
        width,
        height,
        row,
        col,
    })
}

/// Patch id string: `{block_id}_r{row}_c{col}`.
pub fn patch_id(block_id: &str, row: u32, col: u32) -> String {
    format!("{block_id}_r{row}_c{col}")
}

/// Copy the pixels (and valid mask, when present) under `bounds` into a
/// new raster.
pub fn extract_patch(raster: &Raster, bounds: &PatchBounds) -> Result<Raster> {
    let x1 = bounds.x0 as u64 + bounds.width as u64;
    let y1 = bounds.y0 as u64 + bounds.height as u64;
    if x1 > raster.width as u64 || y1 > raster.height as u64 {
        return Err(Error::InvalidArgument(format!(
            "bounds {}x{} at ({}, {}) exceed raster {}x{}",
            bounds.width, bounds.height, bounds.x0, bounds.y0, raster.width, raster.height
        )));
    }
    let ch = raster.channels as usize;
    let mut pixels = Vec::with_capacity(bounds.width as usize * bounds.height as usize * ch);
    for y in bounds.y0..bounds.y0 + bounds.height {
        let row_start = (y as usize * raster.width as usize + bounds.x0 as usize) * ch;
        let row_end = row_start + bounds.width as usize * ch;
        pixels.extend_from_slice(&raster.pixels[row_start..row_end]);
    }
    let mut out = Raster::new(bounds.width, bounds.height, raster.channels, pixels)?;
    if let Some(mask) = &raster.valid_mask {
        let mut sub = Vec::with_capacity(bounds.width as usize * bounds.height as usize);
        for y in bounds.y0..bounds.y0 + bounds.height {
            let row_start = y as usize * raster.width as usize + bounds.x0 as usize;
            sub.extend_from_slice(&mask[row_start..row_start + bounds.width as usize]);
        }
        out = out.with_valid_mask(sub)?;
    }
    Ok(out)
}

// --- image file I/O -------------------------------------------------------

/// Read a raster from an 8-bit PNG or TIFF file, dispatching on extension
/// (.png / .tif / .tiff). Alpha channels become the valid mask.
pub fn read_image(path: &Path) -> Result<Raster> {
    match path
        .extension()
        .and_then(|e| e.to_str())
        .map(|e| e.to_ascii_lowercase())
        .as_deref()
    {
        Some("png") => read_png(path),
        Some("tif") | Some("tiff") => read_tiff(path),
        other => Err(Error::InvalidArgument(format!(
            "unsupported image extension {other:?} for {} (expected png/tif/tiff)",
            path.display()
        ))),
    }
}

pub fn read_png(path: &Path) -> Result<Raster> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let decoder = png::Decoder::new(BufReader::new(file));
    let mut reader = decoder
        .read_info()
        .map_err(|e| Error::ImageDecode(format!("{}: {e}", path.display())))?;
    let mut buf = vec![0u8; reader.output_buffer_size().unwrap_or(0)];
    let info = reader
        .next_frame(&mut buf)
        .map_err(|e| Error::ImageDecode(format!("{}: {e}", path.display())))?;
    buf.truncate(info.buffer_size());
    if info.bit_depth != png::BitDepth::Eight {
        return Err(Error::ImageDecode(format!(
            "{}: only 8-bit images are supported",
            path.display()
        )));
    }
    from_interleaved(info.width, info.height, info.color_type.samples() as u8, buf)
}

fn read_tiff(path: &Path) -> Result<Raster> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut decoder = tiff::decoder::Decoder::new(BufReader::new(file))
        .map_err(|e| Error::ImageDecode(format!("{}: {e}", path.display())))?;
    let (width, height) = decoder
        .dimensions()
        .map_err(|e| Error::ImageDecode(format!("{}: {e}", path.display())))?;
    let color = decoder
        .colortype()
        .map_err(|e| Error::ImageDecode(format!("{}: {e}", path.display())))?;
    let samples: u8 = match color {
        tiff::ColorType::Gray(8) => 1,
        tiff::ColorType::GrayA(8) => 2,
        tiff::ColorType::RGB(8) => 3,
        tiff::ColorType::RGBA(8) => 4,
        other => {
            return Err(Error::ImageDecode(format!(
                "{}: unsupported TIFF color type {other:?}",
                path.display()
            )))
        }
    };
    let data = decoder
        .read_image()
        .map_err(|e| Error::ImageDecode(format!("{}: {e}", path.display())))?;
    let buf = match data {
        tiff::decoder::DecodingResult::U8(v) => v,
        _ => {
            return Err(Error::ImageDecode(format!(
                "{}: only 8-bit TIFF samples are supported",
                path.display()
            )))
        }
    };
    from_interleaved(width, height, samples, buf)
}

/// Split an interleaved decode buffer into color channels + valid mask.
fn from_interleaved(width: u32, height: u32, samples: u8, buf: Vec<u8>) -> Result<Raster> {
    let n = width as usize * height as usize;
    if buf.len() != n * samples as usize {
        return Err(Error::ImageDecode(format!(
            "decoded buffer length {} does not match {width}x{height}x{samples}",
            buf.len()
        )));
    }
    match samples {
        1 => Raster::new(width, height, 1, buf),
        3 => Raster::new(width, height, 3, buf),
        2 | 4 => {
            let colors = samples as usize - 1;
            let mut pixels = Vec::with_capacity(n * colors);
            let mut mask = Vec::with_capacity(n);
            for px in buf.chunks_exact(samples as usize) {
                pixels.extend_from_slice(&px[..colors]);
                mask.push(px[colors] > 0);
            }
            Raster::new(width, height, colors as u8, pixels)?.with_valid_mask(mask)
        }
        other => Err(Error::ImageDecode(format!(
            "unsupported channel count {other}"
        ))),
    }
}

/// Write a raster as an 8-bit PNG. A valid mask, when present, is written
/// as the alpha channel.
pub fn write_png(raster: &Raster, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut encoder = png::Encoder::new(BufWriter::new(file), raster.width, raster.height);
    encoder.set_depth(png::BitDepth::Eight);
    let data: Vec<u8>;
    let buf: &[u8] = match (&raster.valid_mask, raster.channels) {
        (None, 1) => {
            encoder.set_color(png::ColorType::Grayscale);
            &raster.pixels
        }
        (None, 3) => {
            encoder.set_color(png::ColorType::Rgb);
            &raster.pixels
        }
        (Some(mask), ch) => {
            encoder.set_color(if ch == 1 {
                png::ColorType::GrayscaleAlpha
            } else {
                png::ColorType::Rgba
            });
            let ch = ch as usize;
            let mut out = Vec::with_capacity(raster.pixels.len() + mask.len());
            for (px, &valid) in raster.pixels.chunks_exact(ch).zip(mask.iter()) {
                out.extend_from_slice(px);
                out.push(if valid { 255 } else { 0 });
            }
            data = out;
            &data
        }
        _ => unreachable!("channels validated at construction"),
    };
    let mut writer = encoder
        .write_header()
        .map_err(|e| Error::ImageDecode(format!("{}: {e}", path.display())))?;
    writer
        .write_image_data(buf)
        .map_err(|e| Error::ImageDecode(format!("{}: {e}", path.display())))?;
    Ok(())
}
