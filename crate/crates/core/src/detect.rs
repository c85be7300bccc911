//! Desk-scale stand-ins for the segmentation stage.
//!
//! `detect_blobs` thresholds one channel and labels connected components
//! (two-pass union-find), emitting each surviving component as a mound
//! whose polygon is its traced outer boundary on the pixel-corner
//! lattice, so the polygon area equals the pixel count exactly.
//!
//! `degrade_detections` drops ground-truth mounds with a coverage-
//! dependent miss probability, producing the feature-correlated
//! underestimation that the regression stage corrects. It never invents
//! detections.

use serde::{Deserialize, Serialize};

use crate::annotations::{AnnotatedObject, AnnotationSet, ObjectClass};
use crate::error::{Error, Result};
use crate::features::FeatureVector;
use crate::geometry::Point;
use crate::raster::Raster;
use crate::rng::Rng;

/// Pixel adjacency for component labeling.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Connectivity {
    Four,
    Eight,
}

/// Blob detector parameters.
#[derive(Debug, Clone, Copy)]
pub struct BlobParams {
    /// Channel index to threshold.
    pub channel: u8,
    /// Minimum intensity considered foreground.
    pub threshold: u8,
    /// Components smaller than this (pixels) are discarded.
    pub min_area: u32,
    /// Components larger than this are discarded.
    pub max_area: u32,
    pub connectivity: Connectivity,
}

impl BlobParams {
    fn validate(&self, raster: &Raster) -> Result<()> {
        if self.channel >= raster.channels() {
            return Err(Error::InvalidArgument(format!(
                "channel {} out of range for {}-channel raster",
                self.channel,
                raster.channels()
            )));
        }
        if self.min_area == 0 || self.min_area > self.max_area {
            return Err(Error::InvalidArgument(format!(
                "area bounds must satisfy 0 < min <= max, got {}..{}",
                self.min_area, self.max_area
            )));
        }
        Ok(())
    }
}

impl Default for BlobParams {
    fn default() -> Self {
        BlobParams {
            channel: 0,
            threshold: 180,
            min_area: 4,
            max_area: u32::MAX,
            connectivity: Connectivity::Eight,
        }
    }
}

struct UnionFind {
    parent: Vec<u32>,
}

impl UnionFind {
    fn new() -> Self {
        UnionFind { parent: Vec::new() }
    }

    fn make(&mut self) -> u32 {
        let id = self.parent.len() as u32;
        self.parent.push(id);
        id
    }

    fn find(&mut self, mut x: u32) -> u32 {
        while self.parent[x as usize] != x {
            let grand = self.parent[self.parent[x as usize] as usize];
            self.parent[x as usize] = grand;
            x = grand;
        }
        x
    }

    fn union(&mut self, a: u32, b: u32) {
        let ra = self.find(a);
        let rb = self.find(b);
        if ra != rb {
            // Smaller root wins so final labels follow first appearance.
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.parent[hi as usize] = lo;
        }
    }
}

/// Label connected foreground components. Returns per-pixel labels
/// (`u32::MAX` = background) and the number of components.
pub(crate) fn label_components(
    foreground: &[bool],
    width: u32,
    height: u32,
    connectivity: Connectivity,
) -> (Vec<u32>, u32) {
    const BG: u32 = u32::MAX;
    let w = width as usize;
    let mut labels = vec![BG; w * height as usize];
    let mut uf = UnionFind::new();
    for y in 0..height as usize {
        for x in 0..w {
            let idx = y * w + x;
            if !foreground[idx] {
                continue;
            }
            let mut neighbor = BG;
            let mut merge = |labels: &mut [u32], uf: &mut UnionFind, nidx: usize| {
                let l = labels[nidx];
                if l != BG {
                    if neighbor == BG {
                        neighbor = l;
                    } else {
                        uf.union(neighbor, l);
                    }
                }
            };
            if x > 0 {
                merge(&mut labels, &mut uf, idx - 1);
            }
            if y > 0 {
                merge(&mut labels, &mut uf, idx - w);
                if connectivity == Connectivity::Eight {
                    if x > 0 {
                        merge(&mut labels, &mut uf, idx - w - 1);
                    }
                    if x + 1 < w {
                        merge(&mut labels, &mut uf, idx - w + 1);
                    }
                }
            }
            labels[idx] = if neighbor == BG { uf.make() } else { neighbor };
        }
    }
    // Second pass: resolve to root labels, renumbered densely in order of
    // first appearance.
    let mut remap = vec![BG; uf.parent.len()];
    let mut next = 0u32;
    for label in labels.iter_mut() {
        if *label == BG {
            continue;
        }
        let root = uf.find(*label);
        if remap[root as usize] == BG {
            remap[root as usize] = next;
            next += 1;
        }
        *label = remap[root as usize];
    }
    (labels, next)
}

/// Trace the outer boundary of a labeled component as a polygon on the
/// pixel-corner lattice, starting from its topmost-leftmost pixel.
///
/// The walk keeps the component on the right of the travel direction and
/// prefers the leftmost turn at pinch corners, merging diagonal-touch
/// passages into one loop. The polygon's shoelace area equals the pixel
/// count for hole-free components.
fn trace_boundary(labels: &[u32], width: u32, label: u32, start: (u32, u32)) -> Vec<Point> {
    let w = width as usize;
    let inside = |cx: i64, cy: i64| -> bool {
        if cx < 0 || cy < 0 {
            return false;
        }
        let (cx, cy) = (cx as usize, cy as usize);
        if cx >= w {
            return false;
        }
        match labels.get(cy * w + cx) {
            Some(&l) => l == label,
            None => false,
        }
    };
    // Headings: E, S, W, N with y growing downward.
    const DIRS: [(i64, i64); 4] = [(1, 0), (0, 1), (-1, 0), (0, -1)];
    // Cell on the inside (right) of an edge leaving corner (cx, cy) with
    // heading d.
    let right_cell = |cx: i64, cy: i64, d: usize| -> (i64, i64) {
        match d {
            0 => (cx, cy),          // E: cell below the edge
            1 => (cx - 1, cy),      // S: cell to the west
            2 => (cx - 1, cy - 1),  // W: cell above
            3 => (cx, cy - 1),      // N: cell to the east
            _ => unreachable!(),
        }
    };
    let left_cell = |cx: i64, cy: i64, d: usize| -> (i64, i64) {
        match d {
            0 => (cx, cy - 1),
            1 => (cx, cy),
            2 => (cx - 1, cy),
            3 => (cx - 1, cy - 1),
            _ => unreachable!(),
        }
    };

    // Start at the top-left corner of the start pixel heading east; the
    // start pixel is inside and the row above is not (topmost).
    let start_corner = (start.0 as i64, start.1 as i64);
    let start_dir = 0usize;
    let mut corner = start_corner;
    let mut dir = start_dir;
    let mut polygon: Vec<Point> = Vec::new();
    loop {
        polygon.push([corner.0 as f64, corner.1 as f64]);
        // Advance one edge.
        corner = (corner.0 + DIRS[dir].0, corner.1 + DIRS[dir].1);
        // Choose next direction: prefer left turn, then straight, then
        // right turn. A valid crack edge has inside on the right and
        // outside on the left.
        let mut next_dir = None;
        for turn in [3usize, 0, 1] {
            let cand = (dir + turn) % 4;
            let r = right_cell(corner.0, corner.1, cand);
            let l = left_cell(corner.0, corner.1, cand);
            if inside(r.0, r.1) && !inside(l.0, l.1) {
                next_dir = Some(cand);
                break;
            }
        }
        dir = next_dir.expect("boundary walk always has a continuation");
        if corner == start_corner && dir == start_dir {
            break;
        }
    }
    // Merge collinear runs.
    let mut merged: Vec<Point> = Vec::with_capacity(polygon.len());
    let n = polygon.len();
    for i in 0..n {
        let prev = polygon[(i + n - 1) % n];
        let cur = polygon[i];
        let next = polygon[(i + 1) % n];
        let d1 = (cur[0] - prev[0], cur[1] - prev[1]);
        let d2 = (next[0] - cur[0], next[1] - cur[1]);
        if d1.0 * d2.1 - d1.1 * d2.0 != 0.0 {
            merged.push(cur);
        }
    }
    merged
}

/// Threshold one channel and emit connected components as mounds.
///
/// A pixel is foreground when its sample is >= threshold and (when a
/// valid mask is present) the pixel holds real data. Components outside
/// the pixel-count bounds are discarded. Score is 1.0 on every emission.
pub fn detect_blobs(raster: &Raster, params: &BlobParams) -> Result<AnnotationSet> {
    params.validate(raster)?;
    let (width, height) = (raster.width(), raster.height());
    let n = width as usize * height as usize;
    let mut foreground = vec![false; n];
    for y in 0..height {
        for x in 0..width {
            let idx = y as usize * width as usize + x as usize;
            let valid = raster.valid_mask().is_none_or(|m| m[idx]);
            foreground[idx] = valid && raster.sample(x, y, params.channel) >= params.threshold;
        }
    }
    let (labels, count) = label_components(&foreground, width, height, params.connectivity);

    let mut areas = vec![0u32; count as usize];
    let mut first_pixel = vec![None::<(u32, u32)>; count as usize];
    for y in 0..height {
        for x in 0..width {
            let l = labels[y as usize * width as usize + x as usize];
            if l != u32::MAX {
                areas[l as usize] += 1;
                if first_pixel[l as usize].is_none() {
                    first_pixel[l as usize] = Some((x, y));
                }
            }
        }
    }

    let mut objects = Vec::new();
    for label in 0..count {
        let area = areas[label as usize];
        if area < params.min_area || area > params.max_area {
            continue;
        }
        let start = first_pixel[label as usize].expect("labeled component has pixels");
        let polygon = trace_boundary(&labels, width, label, start);
        if polygon.len() >= 3 {
            objects.push(AnnotatedObject::from_parts(
                ObjectClass::Mound,
                polygon,
                Some(1.0),
                true,
            ));
        }
    }
    Ok(AnnotationSet {
        image_id: String::new(),
        image_width: width,
        image_height: height,
        objects,
    })
}

/// Per-mound miss probability as a linear function of coverage ratios.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MissModel {
    pub intercept: f64,
    pub tree: f64,
    pub water: f64,
    pub debris: f64,
}

impl MissModel {
    pub const ZERO: MissModel = MissModel {
        intercept: 0.0,
        tree: 0.0,
        water: 0.0,
        debris: 0.0,
    };

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("intercept", self.intercept),
            ("tree", self.tree),
            ("water", self.water),
            ("debris", self.debris),
        ] {
            if !v.is_finite() {
                return Err(Error::InvalidArgument(format!(
                    "miss model coefficient {name} is not finite"
                )));
            }
        }
        Ok(())
    }

    /// Miss probability for a patch, clamped to [0, 0.95].
    pub fn miss_probability(&self, features: &FeatureVector) -> f64 {
        let raw = self.intercept
            + self.tree * features.tree_ratio
            + self.water * features.water_ratio
            + self.debris * features.debris_ratio;
        raw.clamp(0.0, 0.95)
    }
}

/// Drop ground-truth mounds independently with the patch's miss
/// probability; other classes pass through unchanged. Deterministic for
/// a given seed. Never emits an object absent from the truth.
pub fn degrade_detections(
    truth: &AnnotationSet,
    features_context: &FeatureVector,
    miss_model: &MissModel,
    rng_seed: u64,
) -> Result<AnnotationSet> {
    miss_model.validate()?;
    let p = miss_model.miss_probability(features_context);
    let mut rng = Rng::new(rng_seed);
    let objects = truth
        .objects
        .iter()
        .filter(|obj| obj.class != ObjectClass::Mound || !rng.bernoulli(p))
        .cloned()
        .collect();
    Ok(AnnotationSet {
        image_id: truth.image_id.clone(),
        image_width: truth.image_width,
        image_height: truth.image_height,
        objects,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::annotations::polygon_centroid;
    use crate::geometry::signed_area;

    fn gray(width: u32, height: u32, bright: &[(u32, u32)]) -> Raster {
        let mut raster = Raster::filled(width, height, 1, 0).unwrap();
        for &(x, y) in bright {
            raster.set_pixel(x, y, &[255]);
        }
        raster
    }

    #[test]
    fn all_black_raster_detects_nothing() {
        let raster = Raster::filled(32, 32, 1, 0).unwrap();
        let set = detect_blobs(&raster, &BlobParams::default()).unwrap();
        assert!(set.objects.is_empty());
    }

    #[test]
    fn white_square_detects_one_mound_with_exact_area() {
        let mut raster = Raster::filled(32, 32, 1, 0).unwrap();
        for y in 10..20 {
            for x in 5..15 {
                raster.set_pixel(x, y, &[255]);
            }
        }
        let params = BlobParams {
            min_area: 4,
            ..BlobParams::default()
        };
        let set = detect_blobs(&raster, &params).unwrap();
        assert_eq!(set.objects.len(), 1);
        let area = signed_area(&set.objects[0].polygon).abs();
        assert!((area - 100.0).abs() < 1e-9, "area {area}");
        assert_eq!(set.objects[0].score, Some(1.0));
    }

    #[test]
    fn area_filter_discards_small_and_large() {
        let raster = gray(16, 16, &[(2, 2), (8, 8), (8, 9), (9, 8), (9, 9)]);
        let params = BlobParams {
            min_area: 2,
            max_area: 10,
            connectivity: Connectivity::Four,
            ..BlobParams::default()
        };
        let set = detect_blobs(&raster, &params).unwrap();
        // The lone pixel at (2,2) falls below min_area.
        assert_eq!(set.objects.len(), 1);
    }

    #[test]
    fn diagonal_pixels_one_component_under_eight_two_under_four() {
        let raster = gray(8, 8, &[(2, 2), (3, 3)]);
        let base = BlobParams {
            min_area: 1,
            ..BlobParams::default()
        };
        let eight = detect_blobs(&raster, &base).unwrap();
        assert_eq!(eight.objects.len(), 1);
        let four = detect_blobs(
            &raster,
            &BlobParams {
                connectivity: Connectivity::Four,
                ..base
            },
        )
        .unwrap();
        assert_eq!(four.objects.len(), 2);
    }

    #[test]
    fn traced_polygon_of_diagonal_pair_covers_both_pixels() {
        let raster = gray(8, 8, &[(2, 2), (3, 3)]);
        let set = detect_blobs(
            &raster,
            &BlobParams {
                min_area: 1,
                ..BlobParams::default()
            },
        )
        .unwrap();
        let area = signed_area(&set.objects[0].polygon).abs();
        assert_eq!(area, 2.0);
    }

    /// Brute-force flood fill, independent of the union-find path.
    fn flood_fill_count(foreground: &[bool], width: u32, height: u32, conn: Connectivity) -> u32 {
        let w = width as i64;
        let h = height as i64;
        let mut seen = vec![false; foreground.len()];
        let mut count = 0;
        for start in 0..foreground.len() {
            if !foreground[start] || seen[start] {
                continue;
            }
            count += 1;
            let mut stack = vec![start];
            seen[start] = true;
            while let Some(idx) = stack.pop() {
                let (x, y) = ((idx as i64) % w, (idx as i64) / w);
                let neighbors: &[(i64, i64)] = match conn {
                    Connectivity::Four => &[(1, 0), (-1, 0), (0, 1), (0, -1)],
                    Connectivity::Eight => &[
                        (1, 0),
                        (-1, 0),
                        (0, 1),
                        (0, -1),
                        (1, 1),
                        (1, -1),
                        (-1, 1),
                        (-1, -1),
                    ],
                };
                for (dx, dy) in neighbors {
                    let (nx, ny) = (x + dx, y + dy);
                    if nx < 0 || ny < 0 || nx >= w || ny >= h {
                        continue;
                    }
                    let nidx = (ny * w + nx) as usize;
                    if foreground[nidx] && !seen[nidx] {
                        seen[nidx] = true;
                        stack.push(nidx);
                    }
                }
            }
        }
        count
    }

    #[test]
    fn labeling_matches_flood_fill_on_all_4x4_patterns() {
        // Every 4x4 binary pattern embedded in an 8x8 frame with a
        // one-pixel background margin on all sides.
        for pattern in 0u32..(1 << 16) {
            let mut foreground = vec![false; 64];
            for bit in 0..16 {
                if pattern & (1 << bit) != 0 {
                    let (x, y) = (bit % 4 + 2, bit / 4 + 2);
                    foreground[y * 8 + x] = true;
                }
            }
            for conn in [Connectivity::Four, Connectivity::Eight] {
                let (_, count) = label_components(&foreground, 8, 8, conn);
                let oracle = flood_fill_count(&foreground, 8, 8, conn);
                assert_eq!(count, oracle, "pattern {pattern:#06x} {conn:?}");
            }
        }
    }

    #[test]
    fn detect_is_deterministic() {
        let raster = gray(16, 16, &[(1, 1), (1, 2), (2, 1), (9, 9), (9, 10)]);
        let params = BlobParams {
            min_area: 1,
            ..BlobParams::default()
        };
        let a = detect_blobs(&raster, &params).unwrap();
        let b = detect_blobs(&raster, &params).unwrap();
        assert_eq!(a, b);
    }

    fn mound_square(cx: f64, cy: f64) -> AnnotatedObject {
        AnnotatedObject::new(
            ObjectClass::Mound,
            vec![
                [cx - 1.0, cy - 1.0],
                [cx + 1.0, cy - 1.0],
                [cx + 1.0, cy + 1.0],
                [cx - 1.0, cy + 1.0],
            ],
            None,
        )
        .unwrap()
    }

    fn truth_with_mounds(n: usize) -> AnnotationSet {
        let objects = (0..n)
            .map(|i| mound_square(3.0 + (i % 100) as f64 * 5.0, 3.0 + (i / 100) as f64 * 5.0))
            .collect();
        AnnotationSet::new("t", 600, 600, objects)
    }

    #[test]
    fn zero_miss_model_is_identity() {
        let truth = truth_with_mounds(20);
        let out =
            degrade_detections(&truth, &FeatureVector::zero(), &MissModel::ZERO, 7).unwrap();
        assert_eq!(out, truth);
    }

    #[test]
    fn clamped_miss_rate_matches_binomial() {
        // intercept 1.0 clamps to p = 0.95; kept count ~ Binomial(1000, 0.05).
        let truth = truth_with_mounds(1000);
        let model = MissModel {
            intercept: 1.0,
            ..MissModel::ZERO
        };
        let out = degrade_detections(&truth, &FeatureVector::zero(), &model, 7).unwrap();
        let kept = out.objects.len() as f64;
        let mean = 1000.0 * 0.05;
        let sigma = (1000.0_f64 * 0.05 * 0.95).sqrt();
        assert!(
            (kept - mean).abs() <= 3.0 * sigma,
            "kept {kept_n} vs Binomial(1000, 0.05)",
            kept_n = kept
        );
    }

    #[test]
    fn water_coverage_raises_miss_rate() {
        let truth = truth_with_mounds(1);
        let model = MissModel {
            water: 0.5,
            ..MissModel::ZERO
        };
        let wet = FeatureVector {
            water_ratio: 0.4,
            ..FeatureVector::zero()
        };
        let dry = FeatureVector::zero();
        let trials = 1000;
        let mut missed_wet = 0;
        let mut missed_dry = 0;
        for seed in 0..trials {
            if degrade_detections(&truth, &wet, &model, seed)
                .unwrap()
                .objects
                .is_empty()
            {
                missed_wet += 1;
            }
            if degrade_detections(&truth, &dry, &model, seed)
                .unwrap()
                .objects
                .is_empty()
            {
                missed_dry += 1;
            }
        }
        let diff = (missed_wet - missed_dry) as f64 / trials as f64;
        assert!((diff - 0.2).abs() < 0.05, "miss rate difference {diff}");
    }

    #[test]
    fn degrade_never_invents_detections() {
        let truth = truth_with_mounds(50);
        let model = MissModel {
            intercept: 0.3,
            ..MissModel::ZERO
        };
        let out = degrade_detections(&truth, &FeatureVector::zero(), &model, 11).unwrap();
        for obj in &out.objects {
            assert!(truth.objects.contains(obj));
        }
    }

    #[test]
    fn nan_coefficient_is_rejected() {
        let truth = truth_with_mounds(1);
        let model = MissModel {
            intercept: f64::NAN,
            ..MissModel::ZERO
        };
        assert!(degrade_detections(&truth, &FeatureVector::zero(), &model, 1).is_err());
    }

    #[test]
    fn degrade_is_deterministic_given_seed() {
        let truth = truth_with_mounds(100);
        let model = MissModel {
            intercept: 0.4,
            ..MissModel::ZERO
        };
        let a = degrade_detections(&truth, &FeatureVector::zero(), &model, 99).unwrap();
        let b = degrade_detections(&truth, &FeatureVector::zero(), &model, 99).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn disk_centroids_recovered_within_two_pixels() {
        // Five disjoint bright disks; detected centroids must land within
        // 2 px of the true centers.
        let centers = [(10.0, 10.0), (30.0, 12.0), (50.0, 30.0), (12.0, 40.0), (40.0, 52.0)];
        let mut raster = Raster::filled(64, 64, 1, 40).unwrap();
        for &(cx, cy) in &centers {
            for y in 0..64u32 {
                for x in 0..64u32 {
                    let dx = x as f64 + 0.5 - cx;
                    let dy = y as f64 + 0.5 - cy;
                    if dx * dx + dy * dy <= 4.5 * 4.5 {
                        raster.set_pixel(x, y, &[220]);
                    }
                }
            }
        }
        let set = detect_blobs(&raster, &BlobParams::default()).unwrap();
        assert_eq!(set.objects.len(), centers.len());
        for &(cx, cy) in &centers {
            let hit = set.objects.iter().any(|obj| {
                let c = polygon_centroid(&obj.polygon).unwrap();
                ((c[0] - cx).powi(2) + (c[1] - cy).powi(2)).sqrt() <= 2.0
            });
            assert!(hit, "no detection near ({cx}, {cy})");
        }
    }
}
