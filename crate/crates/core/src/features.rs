//! Per-patch feature vectors and dataset assembly.
//!
//! A patch is summarized by four numbers: the count of mounds whose
//! centroid falls in the patch, and the pixel-area fractions of tree,
//! water, and debris coverage. Ratio denominators use the true (possibly
//! clipped) patch area so edge patches are unbiased. Overlapping polygons
//! of the same class are unioned before counting pixels.

use std::fmt::Write as _;
use std::path::Path;

use crate::annotations::{rasterize_into, AnnotationSet, BinaryMask, ObjectClass};
use crate::error::{Error, Result};
use crate::raster::{patch_id, PatchBounds, PatchGrid};

/// The regression input for one patch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeatureVector {
    /// Detected mound count (x1).
    pub mound_count: u32,
    /// Tree area fraction (x2).
    pub tree_ratio: f64,
    /// Water area fraction (x3).
    pub water_ratio: f64,
    /// Debris area fraction (x4).
    pub debris_ratio: f64,
}

impl FeatureVector {
    pub fn zero() -> Self {
        FeatureVector {
            mound_count: 0,
            tree_ratio: 0.0,
            water_ratio: 0.0,
            debris_ratio: 0.0,
        }
    }

    pub fn as_array(&self) -> [f64; 4] {
        [
            self.mound_count as f64,
            self.tree_ratio,
            self.water_ratio,
            self.debris_ratio,
        ]
    }

    fn validate(&self) -> Result<()> {
        for (name, ratio) in [
            ("tree", self.tree_ratio),
            ("water", self.water_ratio),
            ("debris", self.debris_ratio),
        ] {
            if !ratio.is_finite() || !(0.0..=1.0).contains(&ratio) {
                return Err(Error::Validation(format!(
                    "{name} ratio {ratio} outside [0, 1]"
                )));
            }
        }
        Ok(())
    }
}

/// One patch with features and, for training data, a ground-truth count.
#[derive(Debug, Clone, PartialEq)]
pub struct PatchSample {
    pub block_id: String,
    pub row: u32,
    pub col: u32,
    pub features: FeatureVector,
    /// Ground-truth mound count; absent for inference sets.
    pub target: Option<f64>,
}

impl PatchSample {
    pub fn patch_id(&self) -> String {
        patch_id(&self.block_id, self.row, self.col)
    }
}

/// A collection of patch samples.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainingSet {
    pub samples: Vec<PatchSample>,
}

impl TrainingSet {
    pub fn new(samples: Vec<PatchSample>) -> Self {
        TrainingSet { samples }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Feature matrix rows.
    pub fn feature_rows(&self) -> Vec<[f64; 4]> {
        self.samples.iter().map(|s| s.features.as_array()).collect()
    }

    /// Targets for fitting. Errors if any sample lacks one.
    pub fn targets(&self) -> Result<Vec<f64>> {
        self.samples
            .iter()
            .map(|s| {
                s.target.ok_or_else(|| {
                    Error::Validation(format!("sample {} has no target", s.patch_id()))
                })
            })
            .collect()
    }
}

/// Compute the feature vector of a clipped patch.
///
/// `clipped` must come from `clip_to_patch` for the same bounds: mounds
/// are counted via their `counts_here` flag, ratios from unioned class
/// masks over the patch area.
pub fn compute_features(clipped: &AnnotationSet, bounds: &PatchBounds) -> Result<FeatureVector> {
    if bounds.x0 as u64 + bounds.width as u64 > clipped.image_width as u64
        || bounds.y0 as u64 + bounds.height as u64 > clipped.image_height as u64
    {
        return Err(Error::InvalidArgument(format!(
            "bounds at ({}, {}) size {}x{} do not fit image {}x{}",
            bounds.x0,
            bounds.y0,
            bounds.width,
            bounds.height,
            clipped.image_width,
            clipped.image_height
        )));
    }
    let mut mound_count = 0u32;
    let mut masks: [Option<BinaryMask>; 3] = [None, None, None];
    for obj in &clipped.objects {
        match obj.class {
            ObjectClass::Mound => {
                if obj.counts_here {
                    mound_count += 1;
                }
            }
            ObjectClass::Tree | ObjectClass::Water | ObjectClass::Debris => {
                let slot = match obj.class {
                    ObjectClass::Tree => 0,
                    ObjectClass::Water => 1,
                    _ => 2,
                };
                let mask = masks[slot]
                    .get_or_insert_with(|| BinaryMask::empty(bounds.width, bounds.height));
                rasterize_into(&obj.polygon, bounds, mask);
            }
        }
    }
    let area = bounds.area() as f64;
    let ratio =
        |mask: &Option<BinaryMask>| mask.as_ref().map_or(0.0, |m| m.count_set() as f64 / area);
    Ok(FeatureVector {
        mound_count,
        tree_ratio: ratio(&masks[0]),
        water_ratio: ratio(&masks[1]),
        debris_ratio: ratio(&masks[2]),
    })
}

/// Assemble a training set from whole-block ground truth and detections.
///
/// Both sets are clipped to every patch of the grid; features come from
/// detections, targets from the ground-truth mound count. Samples are
/// ordered row-major.
pub fn build_dataset(
    ground_truth: &AnnotationSet,
    detections: &AnnotationSet,
    grid: &PatchGrid,
    block_id: &str,
) -> Result<TrainingSet> {
    let gt_patches = clip_all(ground_truth, grid)?;
    let det_patches = clip_all(detections, grid)?;
    build_dataset_from_patches(&gt_patches, &det_patches, grid, block_id)
}

/// Clip a whole-block set to every patch of a grid, row-major.
pub fn clip_all(set: &AnnotationSet, grid: &PatchGrid) -> Result<Vec<AnnotationSet>> {
    grid.iter()
        .map(|bounds| crate::annotations::clip_to_patch(set, &bounds))
        .collect()
}

/// Assemble a dataset from per-patch clipped sets in row-major order.
pub fn build_dataset_from_patches(
    ground_truth: &[AnnotationSet],
    detections: &[AnnotationSet],
    grid: &PatchGrid,
    block_id: &str,
) -> Result<TrainingSet> {
    let expected = grid.patch_count() as usize;
    if ground_truth.len() != expected || detections.len() != expected {
        let mut missing = Vec::new();
        for (idx, bounds) in grid.iter().enumerate() {
            let id = patch_id(block_id, bounds.row, bounds.col);
            if idx >= ground_truth.len() {
                missing.push(format!("{id} (ground truth)"));
            }
            if idx >= detections.len() {
                missing.push(format!("{id} (detections)"));
            }
        }
        return Err(Error::DatasetConsistency(format!(
            "grid has {expected} patches but got {} ground-truth and {} detection sets; missing: {}",
            ground_truth.len(),
            detections.len(),
            missing.join(", ")
        )));
    }
    let mut samples = Vec::with_capacity(expected);
    for (idx, bounds) in grid.iter().enumerate() {
        let features = compute_features(&detections[idx], &bounds)?;
        let target = ground_truth[idx].counted_mounds() as f64;
        samples.push(PatchSample {
            block_id: block_id.to_string(),
            row: bounds.row,
            col: bounds.col,
            features,
            target: Some(target),
        });
    }
    Ok(TrainingSet::new(samples))
}

// --- CSV form ---------------------------------------------------------------

const CSV_HEADER: &str = "block_id,row,col,x1,x2,x3,x4,y";

/// Render a set as CSV (fixed columns, '.' decimal separator, shortest
/// lossless float form).
pub fn features_to_csv(set: &TrainingSet) -> String {
    let mut out = String::with_capacity(64 * (set.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for s in &set.samples {
        let f = &s.features;
        let _ = write!(
            out,
            "{},{},{},{},{},{},{},",
            s.block_id, s.row, s.col, f.mound_count, f.tree_ratio, f.water_ratio, f.debris_ratio
        );
        if let Some(y) = s.target {
            let _ = write!(out, "{y}");
        }
        out.push('\n');
    }
    out
}

/// Parse the CSV form, enforcing feature invariants per row.
pub fn features_from_csv(text: &str) -> Result<TrainingSet> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header.trim_end() == CSV_HEADER => {}
        Some((_, header)) => {
            return Err(Error::Validation(format!(
                "unexpected feature CSV header {header:?} (expected {CSV_HEADER:?})"
            )))
        }
        None => return Err(Error::Validation("empty feature CSV".to_string())),
    }
    let mut samples = Vec::new();
    for (line_no, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let row_err = |msg: String| Error::Validation(format!("row {}: {msg}", line_no + 1));
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 8 {
            return Err(row_err(format!("expected 8 fields, got {}", fields.len())));
        }
        let parse_u32 = |s: &str, name: &str| {
            s.trim()
                .parse::<u32>()
                .map_err(|e| row_err(format!("bad {name} {s:?}: {e}")))
        };
        let parse_f64 = |s: &str, name: &str| {
            s.trim()
                .parse::<f64>()
                .map_err(|e| row_err(format!("bad {name} {s:?}: {e}")))
        };
        let features = FeatureVector {
            mound_count: parse_u32(fields[3], "x1")?,
            tree_ratio: parse_f64(fields[4], "x2")?,
            water_ratio: parse_f64(fields[5], "x3")?,
            debris_ratio: parse_f64(fields[6], "x4")?,
        };
        features.validate().map_err(|e| row_err(e.to_string()))?;
        let target = if fields[7].trim().is_empty() {
            None
        } else {
            let y = parse_f64(fields[7], "y")?;
            if !y.is_finite() || y < 0.0 {
                return Err(row_err(format!("target {y} must be non-negative")));
            }
            Some(y)
        };
        samples.push(PatchSample {
            block_id: fields[0].trim().to_string(),
            row: parse_u32(fields[1], "row")?,
            col: parse_u32(fields[2], "col")?,
            features,
            target,
        });
    }
    Ok(TrainingSet::new(samples))
}

pub fn write_features_csv(set: &TrainingSet, path: &Path) -> Result<()> {
    std::fs::write(path, features_to_csv(set)).map_err(|e| Error::io(path, e))
}

pub fn read_features_csv(path: &Path) -> Result<TrainingSet> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    features_from_csv(&text)
}
