//! Synthetic planting blocks with known statistics.
//!
//! A block is a grayscale raster plus ground-truth annotations and
//! degraded detections. Mound centers come from Poisson-disc sampling
//! (dart throwing with a minimum separation of twice the largest
//! radius); the target count is Poisson at the requested density.
//! Tree/water/debris regions are star polygons added until their union
//! coverage reaches the class target. Occlusion is modeled statistically
//! in the detection channel: ground truth always contains every placed
//! mound, and the degrader drops mounds per patch with the configured
//! miss model. Everything derives from the block seed, so regeneration
//! is bit-identical.

use serde::{Deserialize, Serialize};

use crate::annotations::{
    clip_to_patch, AnnotatedObject, AnnotationSet, BinaryMask, ObjectClass,
};
use crate::detect::{degrade_detections, MissModel};
use crate::error::{Error, Result};
use crate::features::compute_features;
use crate::geometry::{clip_polygon_to_rect, signed_area, ClipRect, Point};
use crate::raster::{build_grid, PatchBounds, Raster, DEFAULT_PATCH_SIZE};
use crate::rng::{derive_seed, Rng};

/// Generation parameters for one block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SynthParams {
    pub block_id: String,
    pub block_width: u32,
    pub block_height: u32,
    pub patch_size: u32,
    /// Mean mounds per 608x608 patch area.
    pub mound_density: f64,
    pub mound_radius_min: f64,
    pub mound_radius_max: f64,
    pub tree_coverage: f64,
    pub water_coverage: f64,
    pub debris_coverage: f64,
    pub miss_model: MissModel,
    pub rng_seed: u64,
}

impl Default for SynthParams {
    fn default() -> Self {
        SynthParams {
            block_id: "block".to_string(),
            // 4x4 patches keeps suite generation fast.
            block_width: 4 * DEFAULT_PATCH_SIZE,
            block_height: 4 * DEFAULT_PATCH_SIZE,
            patch_size: DEFAULT_PATCH_SIZE,
            mound_density: 20.0,
            mound_radius_min: 4.0,
            mound_radius_max: 7.0,
            tree_coverage: 0.15,
            water_coverage: 0.08,
            debris_coverage: 0.10,
            miss_model: MissModel {
                intercept: 0.08,
                tree: 0.5,
                water: 0.7,
                debris: 0.4,
            },
            rng_seed: 0,
        }
    }
}

impl SynthParams {
    pub fn validate(&self) -> Result<()> {
        if self.block_width == 0 || self.block_height == 0 || self.patch_size == 0 {
            return Err(Error::InvalidArgument(format!(
                "block dimensions must be >= 1, got {}x{} patch {}",
                self.block_width, self.block_height, self.patch_size
            )));
        }
        if !(self.mound_density.is_finite() && self.mound_density >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "mound density must be >= 0, got {}",
                self.mound_density
            )));
        }
        if !(self.mound_radius_min.is_finite() && self.mound_radius_min > 0.0)
            || self.mound_radius_min > self.mound_radius_max
        {
            return Err(Error::InvalidArgument(format!(
                "mound radii must satisfy 0 < min <= max, got {}..{}",
                self.mound_radius_min, self.mound_radius_max
            )));
        }
        let coverages = [self.tree_coverage, self.water_coverage, self.debris_coverage];
        if coverages.iter().any(|c| !(0.0..=1.0).contains(c)) {
            return Err(Error::InvalidArgument(
                "coverage fractions must lie in [0, 1]".to_string(),
            ));
        }
        if coverages.iter().sum::<f64>() > 0.9 {
            return Err(Error::InvalidArgument(format!(
                "coverage fractions sum to {} (> 0.9)",
                coverages.iter().sum::<f64>()
            )));
        }
        self.miss_model.validate()
    }
}

/// One generated block.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthBlock {
    pub params: SynthParams,
    pub raster: Raster,
    pub ground_truth: AnnotationSet,
    pub detections: AnnotationSet,
    /// Number of placed mounds, occluded ones included.
    pub gt_count: u64,
}

/// Per-block manifest, written alongside the emitted files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockManifest {
    pub block_id: String,
    pub seed: u64,
    pub params: SynthParams,
    pub gt_count: u64,
    pub raster: String,
    pub ground_truth: String,
    pub detections: String,
}

const PLACEMENT_ATTEMPTS: usize = 10_000;

struct PlacedMound {
    center: Point,
    radius: f64,
    intensity: u8,
}

fn place_mounds(params: &SynthParams, rng: &mut Rng) -> Result<Vec<PlacedMound>> {
    let patch_area = 608.0 * 608.0;
    let mean =
        params.mound_density * (params.block_width as f64 * params.block_height as f64) / patch_area;
    let target = rng.poisson(mean);
    let min_sep = 2.0 * params.mound_radius_max;
    let inset = params.mound_radius_max;
    let (w, h) = (params.block_width as f64, params.block_height as f64);
    if target > 0 && (w <= 2.0 * inset || h <= 2.0 * inset) {
        return Err(Error::Generation(format!(
            "block {}x{} too small for mound radius {}",
            params.block_width, params.block_height, params.mound_radius_max
        )));
    }

    // Local density varies from patch to patch (mound counts depend on
    // zone characteristics): each patch gets a weight in [0.4, 1.6],
    // normalized so the block total stays at the Poisson draw.
    let grid = build_grid(params.block_width, params.block_height, params.patch_size, true)?;
    let mut weights: Vec<f64> = (0..grid.patch_count())
        .map(|_| rng.range_f64(0.4, 1.6))
        .collect();
    let weight_sum: f64 = weights.iter().sum();
    for weight in &mut weights {
        *weight /= weight_sum;
    }
    let mut cumulative = Vec::with_capacity(weights.len());
    let mut acc = 0.0;
    for &weight in &weights {
        acc += weight;
        cumulative.push(acc);
    }

    let mut placed: Vec<PlacedMound> = Vec::with_capacity(target as usize);
    for _ in 0..target {
        let mut accepted = false;
        for _ in 0..PLACEMENT_ATTEMPTS {
            // Pick a patch by weight, then a position inside it (clamped
            // to the block inset so disks render fully).
            let u = rng.next_f64();
            let idx = cumulative
                .iter()
                .position(|&c| u < c)
                .unwrap_or(cumulative.len() - 1) as u32;
            let bounds = crate::raster::patch_bounds(&grid, idx / grid.cols, idx % grid.cols)?;
            let lo_x = (bounds.x0 as f64).max(inset);
            let hi_x = ((bounds.x0 + bounds.width) as f64).min(w - inset);
            let lo_y = (bounds.y0 as f64).max(inset);
            let hi_y = ((bounds.y0 + bounds.height) as f64).min(h - inset);
            if lo_x >= hi_x || lo_y >= hi_y {
                continue;
            }
            let candidate = [rng.range_f64(lo_x, hi_x), rng.range_f64(lo_y, hi_y)];
            let clear = placed.iter().all(|m| {
                let dx = m.center[0] - candidate[0];
                let dy = m.center[1] - candidate[1];
                dx * dx + dy * dy >= min_sep * min_sep
            });
            if clear {
                placed.push(PlacedMound {
                    center: candidate,
                    radius: rng.range_f64(params.mound_radius_min, params.mound_radius_max),
                    intensity: 208 + rng.range_u32(40) as u8,
                });
                accepted = true;
                break;
            }
        }
        if !accepted {
            return Err(Error::Generation(format!(
                "mound placement failed after {PLACEMENT_ATTEMPTS} attempts \
                 ({} placed, density {})",
                placed.len(),
                params.mound_density
            )));
        }
    }
    Ok(placed)
}

fn mound_polygon(center: Point, radius: f64) -> Vec<Point> {
    let sides = 16;
    (0..sides)
        .map(|i| {
            let angle = i as f64 / sides as f64 * std::f64::consts::TAU;
            [
                center[0] + radius * angle.cos(),
                center[1] + radius * angle.sin(),
            ]
        })
        .collect()
}

fn star_polygon(rng: &mut Rng, w: f64, h: f64) -> Vec<Point> {
    // Base radius sized so one polygon covers roughly 0.5-2% of the
    // block; overshoot of the coverage target stays well under 0.05.
    let base = 0.056 * w.min(h);
    let radius = base * rng.range_f64(0.5, 1.4);
    let cx = rng.range_f64(0.0, w);
    let cy = rng.range_f64(0.0, h);
    let vertices = 7 + rng.range_u32(6) as usize;
    let offset = rng.range_f64(0.0, std::f64::consts::TAU);
    let poly: Vec<Point> = (0..vertices)
        .map(|i| {
            let angle = offset + i as f64 / vertices as f64 * std::f64::consts::TAU;
            let r = radius * rng.range_f64(0.6, 1.3);
            [cx + r * angle.cos(), cy + r * angle.sin()]
        })
        .collect();
    clip_polygon_to_rect(
        &poly,
        ClipRect {
            x0: 0.0,
            y0: 0.0,
            x1: w,
            y1: h,
        },
    )
}

/// Rasterize `polygon` into `mask` (whole-block extent), returning how
/// many bits flipped from clear to set.
fn paint_union(polygon: &[Point], mask: &mut BinaryMask) -> u64 {
    let (w, h) = (mask.width, mask.height);
    let min_x = polygon.iter().fold(f64::INFINITY, |m, p| m.min(p[0]));
    let max_x = polygon.iter().fold(f64::NEG_INFINITY, |m, p| m.max(p[0]));
    let min_y = polygon.iter().fold(f64::INFINITY, |m, p| m.min(p[1]));
    let max_y = polygon.iter().fold(f64::NEG_INFINITY, |m, p| m.max(p[1]));
    let x0 = (min_x.floor().max(0.0) as u32).min(w);
    let y0 = (min_y.floor().max(0.0) as u32).min(h);
    let x1 = (max_x.ceil().max(0.0) as u32).min(w);
    let y1 = (max_y.ceil().max(0.0) as u32).min(h);
    if x0 >= x1 || y0 >= y1 {
        return 0;
    }
    let bbox = PatchBounds {
        x0,
        y0,
        width: x1 - x0,
        height: y1 - y0,
        row: 0,
        col: 0,
    };
    let local = crate::annotations::rasterize_polygon(polygon, &bbox);
    let mut flipped = 0;
    for y in 0..bbox.height {
        for x in 0..bbox.width {
            if local.get(x, y) && !mask.get(x0 + x, y0 + y) {
                mask.set(x0 + x, y0 + y, true);
                flipped += 1;
            }
        }
    }
    flipped
}

fn place_regions(
    params: &SynthParams,
    class: ObjectClass,
    target: f64,
    rng: &mut Rng,
) -> Result<(Vec<AnnotatedObject>, BinaryMask)> {
    let (w, h) = (params.block_width, params.block_height);
    let mut mask = BinaryMask::empty(w, h);
    let mut objects = Vec::new();
    if target <= 0.0 {
        return Ok((objects, mask));
    }
    let total = w as f64 * h as f64;
    let mut covered = 0u64;
    let mut attempts = 0usize;
    while (covered as f64) < target * total {
        attempts += 1;
        if attempts > PLACEMENT_ATTEMPTS {
            return Err(Error::Generation(format!(
                "{class} coverage target {target} unreachable after {PLACEMENT_ATTEMPTS} attempts"
            )));
        }
        let poly = star_polygon(rng, w as f64, h as f64);
        if poly.len() < 3 || signed_area(&poly).abs() < 1.0 {
            continue;
        }
        covered += paint_union(&poly, &mut mask);
        objects.push(AnnotatedObject::from_parts(class, poly, None, true));
    }
    Ok((objects, mask))
}

/// Generate one block from its parameters.
pub fn generate_block(params: &SynthParams) -> Result<SynthBlock> {
    params.validate()?;
    let (w, h) = (params.block_width, params.block_height);

    let mut mound_rng = Rng::new(derive_seed(params.rng_seed, "mounds", 0));
    let mounds = place_mounds(params, &mut mound_rng)?;
    let gt_count = mounds.len() as u64;

    let mut region_objects = Vec::new();
    let mut region_masks = Vec::new();
    for (class, target) in [
        (ObjectClass::Tree, params.tree_coverage),
        (ObjectClass::Water, params.water_coverage),
        (ObjectClass::Debris, params.debris_coverage),
    ] {
        let mut rng = Rng::new(derive_seed(params.rng_seed, class.to_string().as_str(), 0));
        let (objects, mask) = place_regions(params, class, target, &mut rng)?;
        region_objects.extend(objects);
        region_masks.push((class, mask));
    }

    // Render: noisy background, then class regions, then bright mounds.
    let mut noise_rng = Rng::new(derive_seed(params.rng_seed, "raster", 0));
    let n = w as usize * h as usize;
    let mut pixels = vec![0u8; n];
    for (idx, px) in pixels.iter_mut().enumerate() {
        let mut value = 56 + noise_rng.range_u32(16) as u8;
        for (class, mask) in &region_masks {
            if mask.bits()[idx] {
                let base = match class {
                    ObjectClass::Water => 28,
                    ObjectClass::Tree => 96,
                    ObjectClass::Debris => 128,
                    ObjectClass::Mound => unreachable!(),
                };
                value = base + (noise_rng.next_u64() % 12) as u8;
            }
        }
        *px = value;
    }
    let mut raster = Raster::new(w, h, 1, pixels)?;
    for m in &mounds {
        let r = m.radius;
        let x0 = (m.center[0] - r).floor().max(0.0) as u32;
        let y0 = (m.center[1] - r).floor().max(0.0) as u32;
        let x1 = ((m.center[0] + r).ceil() as u32).min(w);
        let y1 = ((m.center[1] + r).ceil() as u32).min(h);
        for y in y0..y1 {
            for x in x0..x1 {
                let dx = x as f64 + 0.5 - m.center[0];
                let dy = y as f64 + 0.5 - m.center[1];
                if dx * dx + dy * dy <= r * r {
                    raster.set_pixel(x, y, &[m.intensity]);
                }
            }
        }
    }

    let mut objects: Vec<AnnotatedObject> = mounds
        .iter()
        .map(|m| {
            AnnotatedObject::from_parts(
                ObjectClass::Mound,
                mound_polygon(m.center, m.radius),
                None,
                true,
            )
        })
        .collect();
    objects.extend(region_objects);
    let ground_truth = AnnotationSet::new(params.block_id.clone(), w, h, objects);

    let detections = degrade_block(params, &ground_truth)?;

    Ok(SynthBlock {
        params: params.clone(),
        raster,
        ground_truth,
        detections,
        gt_count,
    })
}

/// Run the miss model over every patch of the block grid, preserving
/// ground-truth object order in the output.
fn degrade_block(params: &SynthParams, truth: &AnnotationSet) -> Result<AnnotationSet> {
    let grid = build_grid(
        params.block_width,
        params.block_height,
        params.patch_size,
        true,
    )?;
    let detect_base = derive_seed(params.rng_seed, "detect", 0);

    // Assign each mound to its centroid patch.
    let mut patch_of = vec![None::<u64>; truth.objects.len()];
    for (i, obj) in truth.objects.iter().enumerate() {
        if obj.class != ObjectClass::Mound {
            continue;
        }
        let c = crate::annotations::polygon_centroid(&obj.polygon)?;
        let col = ((c[0] / params.patch_size as f64) as u32).min(grid.cols - 1);
        let row = ((c[1] / params.patch_size as f64) as u32).min(grid.rows - 1);
        patch_of[i] = Some(grid.patch_index(row, col));
    }

    let mut keep = vec![true; truth.objects.len()];
    for bounds in grid.iter() {
        let patch_index = grid.patch_index(bounds.row, bounds.col);
        let members: Vec<usize> = (0..truth.objects.len())
            .filter(|&i| patch_of[i] == Some(patch_index))
            .collect();
        if members.is_empty() {
            continue;
        }
        let clipped = clip_to_patch(truth, &bounds)?;
        let features = compute_features(&clipped, &bounds)?;
        let patch_truth = AnnotationSet {
            image_id: truth.image_id.clone(),
            image_width: truth.image_width,
            image_height: truth.image_height,
            objects: members
                .iter()
                .map(|&i| truth.objects[i].clone())
                .collect(),
        };
        let kept = degrade_detections(
            &patch_truth,
            &features,
            &params.miss_model,
            detect_base ^ patch_index,
        )?;
        // Objects are compared positionally: the degrader preserves
        // relative order, so walk both lists in lockstep.
        let mut kept_iter = kept.objects.iter();
        let mut next_kept = kept_iter.next();
        for &i in &members {
            match next_kept {
                Some(obj) if *obj == truth.objects[i] => {
                    next_kept = kept_iter.next();
                }
                _ => keep[i] = false,
            }
        }
    }

    Ok(AnnotationSet {
        image_id: truth.image_id.clone(),
        image_width: truth.image_width,
        image_height: truth.image_height,
        objects: truth
            .objects
            .iter()
            .enumerate()
            .filter(|(i, obj)| obj.class != ObjectClass::Mound || keep[*i])
            .map(|(_, obj)| obj.clone())
            .collect(),
    })
}

/// Generate `n_blocks` blocks with seeded parameter variation: density
/// and coverage targets each perturbed by +-30% per block, ids suffixed
/// with the block index.
pub fn generate_suite(
    n_blocks: u32,
    template: &SynthParams,
    base_seed: u64,
) -> Result<Vec<SynthBlock>> {
    if n_blocks == 0 {
        return Err(Error::InvalidArgument(
            "suite needs at least one block".to_string(),
        ));
    }
    template.validate()?;
    let mut blocks = Vec::with_capacity(n_blocks as usize);
    for i in 0..n_blocks as u64 {
        let mut vary = Rng::new(derive_seed(base_seed, "params", i));
        let mut perturb = |value: f64| value * (1.0 + 0.3 * vary.range_f64(-1.0, 1.0));
        let params = SynthParams {
            block_id: format!("{}{:02}", template.block_id, i),
            mound_density: perturb(template.mound_density),
            tree_coverage: perturb(template.tree_coverage).min(0.3),
            water_coverage: perturb(template.water_coverage).min(0.3),
            debris_coverage: perturb(template.debris_coverage).min(0.3),
            rng_seed: derive_seed(base_seed, "block", i),
            ..template.clone()
        };
        blocks.push(generate_block(&params).map_err(|e| {
            Error::Generation(format!("block {i}: {e}"))
        })?);
    }
    Ok(blocks)
}
