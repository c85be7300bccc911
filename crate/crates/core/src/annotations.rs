//! Polygon annotations: VIA-dialect JSON parsing and serialization,
//! rasterization to per-patch masks, and patch clipping.
//!
//! Ground truth and detector predictions share one schema; predictions
//! additionally carry a `score` per region. Coordinates are continuous
//! (sub-pixel vertices are allowed); only the inside test discretizes,
//! using pixel centers under the even-odd rule.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{self, ClipRect, Point};
use crate::raster::PatchBounds;

/// Object classes the pipeline understands. Anything else is rejected at
/// parse time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ObjectClass {
    Mound,
    Tree,
    Water,
    Debris,
}

impl ObjectClass {
    pub const ALL: [ObjectClass; 4] = [
        ObjectClass::Mound,
        ObjectClass::Tree,
        ObjectClass::Water,
        ObjectClass::Debris,
    ];
}

impl FromStr for ObjectClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "mound" => Ok(ObjectClass::Mound),
            "tree" => Ok(ObjectClass::Tree),
            "water" => Ok(ObjectClass::Water),
            "debris" => Ok(ObjectClass::Debris),
            other => Err(Error::Validation(format!(
                "unknown object class {other:?} (expected mound, tree, water, or debris)"
            ))),
        }
    }
}

impl fmt::Display for ObjectClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            ObjectClass::Mound => "mound",
            ObjectClass::Tree => "tree",
            ObjectClass::Water => "water",
            ObjectClass::Debris => "debris",
        };
        f.write_str(name)
    }
}

/// One polygon-labeled object instance.
#[derive(Debug, Clone, PartialEq)]
pub struct AnnotatedObject {
    pub class: ObjectClass,
    pub polygon: Vec<Point>,
    /// Detector confidence; absent for ground truth.
    pub score: Option<f64>,
    /// After clipping: whether this instance is counted in the current
    /// patch (centroid rule). Always true before clipping.
    pub counts_here: bool,
}

impl AnnotatedObject {
    /// Validating constructor: >= 3 finite vertices, simple polygon,
    /// score (when present) finite and in [0, 1].
    pub fn new(class: ObjectClass, polygon: Vec<Point>, score: Option<f64>) -> Result<Self> {
        if polygon.len() < 3 {
            return Err(Error::Validation(format!(
                "polygon for {class} has {} vertices; at least 3 required",
                polygon.len()
            )));
        }
        if polygon
            .iter()
            .any(|p| !p[0].is_finite() || !p[1].is_finite())
        {
            return Err(Error::Validation(format!(
                "polygon for {class} has non-finite vertices"
            )));
        }
        if !geometry::is_simple(&polygon) {
            return Err(Error::Validation(format!(
                "polygon for {class} is self-intersecting"
            )));
        }
        if let Some(s) = score {
            if !s.is_finite() || !(0.0..=1.0).contains(&s) {
                return Err(Error::Validation(format!(
                    "score {s} for {class} outside [0, 1]"
                )));
            }
        }
        Ok(AnnotatedObject {
            class,
            polygon,
            score,
            counts_here: true,
        })
    }

    /// Internal constructor for polygons that are simple by construction
    /// (clip output, traced blob boundaries).
    pub(crate) fn from_parts(
        class: ObjectClass,
        polygon: Vec<Point>,
        score: Option<f64>,
        counts_here: bool,
    ) -> Self {
        debug_assert!(polygon.len() >= 3);
        AnnotatedObject {
            class,
            polygon,
            score,
            counts_here,
        }
    }

    pub fn area(&self) -> f64 {
        geometry::signed_area(&self.polygon).abs()
    }
}

/// Polygon-labeled instances for one image (or one patch).
#[derive(Debug, Clone, PartialEq)]
pub struct AnnotationSet {
    pub image_id: String,
    pub image_width: u32,
    pub image_height: u32,
    pub objects: Vec<AnnotatedObject>,
}

impl AnnotationSet {
    /// Build a set, clamping all vertices to the image extent.
    pub fn new(
        image_id: impl Into<String>,
        image_width: u32,
        image_height: u32,
        mut objects: Vec<AnnotatedObject>,
    ) -> Self {
        let w = image_width as f64;
        let h = image_height as f64;
        for obj in &mut objects {
            for p in &mut obj.polygon {
                p[0] = p[0].clamp(0.0, w);
                p[1] = p[1].clamp(0.0, h);
            }
        }
        AnnotationSet {
            image_id: image_id.into(),
            image_width,
            image_height,
            objects,
        }
    }

    pub fn count_class(&self, class: ObjectClass) -> usize {
        self.objects.iter().filter(|o| o.class == class).count()
    }

    /// Mound instances counted in this (possibly clipped) set.
    pub fn counted_mounds(&self) -> usize {
        self.objects
            .iter()
            .filter(|o| o.class == ObjectClass::Mound && o.counts_here)
            .count()
    }
}

/// Per-pixel boolean mask, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryMask {
    pub width: u32,
    pub height: u32,
    bits: Vec<bool>,
}

impl BinaryMask {
    pub fn empty(width: u32, height: u32) -> Self {
        BinaryMask {
            width,
            height,
            bits: vec![false; width as usize * height as usize],
        }
    }

    pub fn get(&self, x: u32, y: u32) -> bool {
        self.bits[y as usize * self.width as usize + x as usize]
    }

    pub fn set(&mut self, x: u32, y: u32, value: bool) {
        self.bits[y as usize * self.width as usize + x as usize] = value;
    }

    pub fn count_set(&self) -> u64 {
        self.bits.iter().filter(|&&b| b).count() as u64
    }

    /// In-place union with another mask of identical dimensions.
    pub fn union_with(&mut self, other: &BinaryMask) {
        assert_eq!((self.width, self.height), (other.width, other.height));
        for (a, b) in self.bits.iter_mut().zip(other.bits.iter()) {
            *a |= *b;
        }
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }
}

// --- VIA JSON schema -------------------------------------------------------

#[derive(Debug, Serialize, Deserialize)]
struct ViaImage {
    filename: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    file_attributes: Option<ViaFileAttributes>,
    regions: Vec<ViaRegion>,
}

#[derive(Debug, Serialize, Deserialize)]
struct ViaFileAttributes {
    #[serde(default)]
    width: Option<u32>,
    #[serde(default)]
    height: Option<u32>,
}

#[derive(Debug, Serialize, Deserialize)]
struct ViaRegion {
    shape_attributes: ViaShape,
    region_attributes: ViaRegionAttributes,
}

#[derive(Debug, Serialize, Deserialize)]
struct ViaShape {
    name: String,
    all_points_x: Vec<f64>,
    all_points_y: Vec<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
struct ViaRegionAttributes {
    class: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    score: Option<f64>,
}

/// Parse-time options.
#[derive(Debug, Clone, Copy)]
pub struct ParseOptions {
    /// Predictions with score below this are dropped. Ground-truth
    /// objects (no score) are always kept.
    pub score_threshold: f64,
}

impl Default for ParseOptions {
    fn default() -> Self {
        ParseOptions {
            score_threshold: 0.5,
        }
    }
}

/// Parse a single-image VIA document with default options.
pub fn parse_via(document: &str) -> Result<AnnotationSet> {
    parse_via_with(document, &ParseOptions::default())
}

/// Parse a single-image VIA document.
///
/// The image extent is taken from `file_attributes.width/height` when
/// present, otherwise inferred from the vertex bounding box. Vertices are
/// clamped to the extent after validation.
pub fn parse_via_with(document: &str, options: &ParseOptions) -> Result<AnnotationSet> {
    let doc: BTreeMap<String, ViaImage> = serde_json::from_str(document)?;
    if doc.len() != 1 {
        return Err(Error::Validation(format!(
            "expected exactly one image entry per document, found {}",
            doc.len()
        )));
    }
    let (image_id, image) = doc.into_iter().next().expect("length checked");

    let mut objects = Vec::with_capacity(image.regions.len());
    for (idx, region) in image.regions.iter().enumerate() {
        if region.shape_attributes.name != "polygon" {
            return Err(Error::Validation(format!(
                "region {idx} of {image_id:?}: unsupported shape {:?} (only \"polygon\")",
                region.shape_attributes.name
            )));
        }
        let xs = &region.shape_attributes.all_points_x;
        let ys = &region.shape_attributes.all_points_y;
        if xs.len() != ys.len() {
            return Err(Error::Validation(format!(
                "region {idx} of {image_id:?}: {} x coordinates but {} y coordinates",
                xs.len(),
                ys.len()
            )));
        }
        let class: ObjectClass = region.region_attributes.class.parse().map_err(|e| {
            Error::Validation(format!("region {idx} of {image_id:?}: {e}"))
        })?;
        let polygon: Vec<Point> = xs.iter().zip(ys.iter()).map(|(&x, &y)| [x, y]).collect();
        let object = AnnotatedObject::new(class, polygon, region.region_attributes.score)
            .map_err(|e| Error::Validation(format!("region {idx} of {image_id:?}: {e}")))?;
        if let Some(score) = object.score {
            if score < options.score_threshold {
                continue;
            }
        }
        objects.push(object);
    }

    let (width, height) = match image.file_attributes {
        Some(ViaFileAttributes {
            width: Some(w),
            height: Some(h),
        }) => (w, h),
        _ => infer_extent(&objects),
    };
    Ok(AnnotationSet::new(image_id, width, height, objects))
}

fn infer_extent(objects: &[AnnotatedObject]) -> (u32, u32) {
    let mut max_x = 1.0f64;
    let mut max_y = 1.0f64;
    for obj in objects {
        for p in &obj.polygon {
            max_x = max_x.max(p[0]);
            max_y = max_y.max(p[1]);
        }
    }
    (max_x.ceil() as u32, max_y.ceil() as u32)
}

/// Serialize a set back into the VIA dialect. `parse_via` of the output
/// reproduces the input set.
pub fn serialize_via(set: &AnnotationSet) -> String {
    let regions = set
        .objects
        .iter()
        .map(|obj| ViaRegion {
            shape_attributes: ViaShape {
                name: "polygon".to_string(),
                all_points_x: obj.polygon.iter().map(|p| p[0]).collect(),
                all_points_y: obj.polygon.iter().map(|p| p[1]).collect(),
            },
            region_attributes: ViaRegionAttributes {
                class: obj.class.to_string(),
                score: obj.score,
            },
        })
        .collect();
    let mut doc = BTreeMap::new();
    doc.insert(
        set.image_id.clone(),
        ViaImage {
            filename: set.image_id.clone(),
            file_attributes: Some(ViaFileAttributes {
                width: Some(set.image_width),
                height: Some(set.image_height),
            }),
            regions,
        },
    );
    serde_json::to_string_pretty(&doc).expect("VIA document is always serializable")
}

// --- geometry operations ---------------------------------------------------

/// Rasterize a polygon into a mask covering `bounds`.
///
/// Polygon coordinates are interpreted in source-image space; the mask is
/// translated by the bounds offset. A pixel is set iff its center lies
/// inside under the even-odd rule, with crossings treated half-open so
/// that adjacent patches partition pixel centers exactly. Degenerate
/// polygons produce an empty mask.
pub fn rasterize_polygon(polygon: &[Point], bounds: &PatchBounds) -> BinaryMask {
    let mut mask = BinaryMask::empty(bounds.width, bounds.height);
    rasterize_into(polygon, bounds, &mut mask);
    mask
}

pub(crate) fn rasterize_into(polygon: &[Point], bounds: &PatchBounds, mask: &mut BinaryMask) {
    if polygon.len() < 3 {
        return;
    }
    let x0 = bounds.x0 as f64;
    let mut crossings = Vec::new();
    for row in 0..bounds.height {
        let y = bounds.y0 as f64 + row as f64 + 0.5;
        geometry::scanline_crossings(polygon, y, &mut crossings);
        for pair in crossings.chunks_exact(2) {
            let (a, b) = (pair[0], pair[1]);
            // Pixel centers in [a, b): col + 0.5 + x0 in that interval.
            let start = (a - x0 - 0.5).ceil().max(0.0) as i64;
            let end = (b - x0 - 0.5).ceil().min(bounds.width as f64) as i64;
            for col in start..end {
                mask.set(col as u32, row, true);
            }
        }
    }
}

/// Area centroid of a simple polygon (shoelace formula).
pub fn polygon_centroid(polygon: &[Point]) -> Result<Point> {
    geometry::centroid(polygon)
}

fn zero_area(polygon: &[Point]) -> bool {
    geometry::signed_area(polygon).abs() < 1e-9
}

/// Clip every object to a patch.
///
/// Polygons are clipped with Sutherland-Hodgman and stay in source-image
/// coordinates; objects whose clipped polygon has zero area are dropped.
/// For mounds, `counts_here` records whether the original polygon's
/// centroid falls in this patch (half-open bounds), which assigns every
/// straddling instance to exactly one patch of a grid.
pub fn clip_to_patch(set: &AnnotationSet, bounds: &PatchBounds) -> Result<AnnotationSet> {
    let bx1 = bounds.x0 as u64 + bounds.width as u64;
    let by1 = bounds.y0 as u64 + bounds.height as u64;
    if bx1 > set.image_width as u64 || by1 > set.image_height as u64 {
        return Err(Error::InvalidArgument(format!(
            "patch bounds {}x{} at ({}, {}) exceed image {}x{}",
            bounds.width, bounds.height, bounds.x0, bounds.y0, set.image_width, set.image_height
        )));
    }
    let rect = ClipRect {
        x0: bounds.x0 as f64,
        y0: bounds.y0 as f64,
        x1: bx1 as f64,
        y1: by1 as f64,
    };
    let mut objects = Vec::new();
    for obj in &set.objects {
        let clipped = geometry::clip_polygon_to_rect(&obj.polygon, rect);
        if clipped.len() < 3 || zero_area(&clipped) {
            continue;
        }
        let counts_here = if obj.class == ObjectClass::Mound {
            match geometry::centroid(&obj.polygon) {
                Ok([cx, cy]) => {
                    cx >= rect.x0 && cx < rect.x1 && cy >= rect.y0 && cy < rect.y1
                }
                Err(_) => false,
            }
        } else {
            true
        };
        objects.push(AnnotatedObject::from_parts(
            obj.class,
            clipped,
            obj.score,
            counts_here,
        ));
    }
    Ok(AnnotationSet {
        image_id: set.image_id.clone(),
        image_width: set.image_width,
        image_height: set.image_height,
        objects,
    })
}

/// Shared test fixture: a convex polygon with random center, radius, and
/// vertex count, fully inside `[0, extent]^2`.
#[cfg(test)]
pub(crate) fn random_convex_polygon(rng: &mut crate::rng::Rng, extent: f64) -> Vec<Point> {
    let r = rng.range_f64(extent * 0.05, extent * 0.25);
    let cx = rng.range_f64(r + 0.5, extent - r - 0.5);
    let cy = rng.range_f64(r + 0.5, extent - r - 0.5);
    let n = 3 + rng.range_u32(6) as usize;
    let offset = rng.range_f64(0.0, std::f64::consts::TAU);
    (0..n)
        .map(|i| {
            let angle = offset + i as f64 / n as f64 * std::f64::consts::TAU;
            [cx + r * angle.cos(), cy + r * angle.sin()]
        })
        .collect()
}
