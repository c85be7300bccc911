//! Polygon primitives: signed area, centroid, rectangle clipping,
//! point-in-polygon, and scanline crossings.
//!
//! Polygons are ordered vertex lists in continuous pixel coordinates;
//! closing edges are implicit. Inside tests use the even-odd rule.

use crate::error::{Error, Result};

pub type Point = [f64; 2];

/// Signed area via the shoelace formula. Positive for counter-clockwise
/// vertex order in a y-down coordinate system iff vertices wind clockwise
/// on screen; callers should take `abs()` when orientation is irrelevant.
pub fn signed_area(polygon: &[Point]) -> f64 {
    if polygon.len() < 3 {
        return 0.0;
    }
    let mut acc = 0.0;
    for i in 0..polygon.len() {
        let [x0, y0] = polygon[i];
        let [x1, y1] = polygon[(i + 1) % polygon.len()];
        acc += x0 * y1 - x1 * y0;
    }
    acc / 2.0
}

/// Area centroid via the shoelace formula.
pub fn centroid(polygon: &[Point]) -> Result<Point> {
    let area = signed_area(polygon);
    if area.abs() < 1e-12 {
        return Err(Error::DegenerateGeometry(format!(
            "polygon with {} vertices has zero area",
            polygon.len()
        )));
    }
    let mut cx = 0.0;
    let mut cy = 0.0;
    for i in 0..polygon.len() {
        let [x0, y0] = polygon[i];
        let [x1, y1] = polygon[(i + 1) % polygon.len()];
        let cross = x0 * y1 - x1 * y0;
        cx += (x0 + x1) * cross;
        cy += (y0 + y1) * cross;
    }
    Ok([cx / (6.0 * area), cy / (6.0 * area)])
}

/// Even-odd point-in-polygon test on a ray cast toward +x.
pub fn point_in_polygon(point: Point, polygon: &[Point]) -> bool {
    let [px, py] = point;
    let mut inside = false;
    for i in 0..polygon.len() {
        let [x0, y0] = polygon[i];
        let [x1, y1] = polygon[(i + 1) % polygon.len()];
        // Half-open in y so shared vertices are counted once.
        if (y0 <= py) != (y1 <= py) {
            let x_cross = x0 + (py - y0) * (x1 - x0) / (y1 - y0);
            if px < x_cross {
                inside = !inside;
            }
        }
    }
    inside
}

/// True when no two non-adjacent edges properly intersect.
///
/// Touching at shared endpoints of adjacent edges is allowed; collinear
/// overlaps are tolerated (they cancel under the even-odd rule).
pub fn is_simple(polygon: &[Point]) -> bool {
    let n = polygon.len();
    if n < 3 {
        return false;
    }
    for i in 0..n {
        for j in (i + 1)..n {
            // Skip adjacent edges (they share an endpoint by construction).
            if j == i || (j + 1) % n == i || (i + 1) % n == j {
                continue;
            }
            let a = polygon[i];
            let b = polygon[(i + 1) % n];
            let c = polygon[j];
            let d = polygon[(j + 1) % n];
            if segments_properly_intersect(a, b, c, d) {
                return false;
            }
        }
    }
    true
}

fn orient(a: Point, b: Point, c: Point) -> f64 {
    (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
}

fn segments_properly_intersect(a: Point, b: Point, c: Point, d: Point) -> bool {
    let d1 = orient(c, d, a);
    let d2 = orient(c, d, b);
    let d3 = orient(a, b, c);
    let d4 = orient(a, b, d);
    ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
}

/// Axis-aligned clip rectangle [x0, x1] x [y0, y1].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClipRect {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
}

impl ClipRect {
    pub fn contains(&self, p: Point) -> bool {
        p[0] >= self.x0 && p[0] <= self.x1 && p[1] >= self.y0 && p[1] <= self.y1
    }
}

enum ClipEdge {
    Left(f64),
    Right(f64),
    Top(f64),
    Bottom(f64),
}

impl ClipEdge {
    fn inside(&self, p: Point) -> bool {
        match *self {
            ClipEdge::Left(x) => p[0] >= x,
            ClipEdge::Right(x) => p[0] <= x,
            ClipEdge::Top(y) => p[1] >= y,
            ClipEdge::Bottom(y) => p[1] <= y,
        }
    }

    fn intersect(&self, a: Point, b: Point) -> Point {
        match *self {
            ClipEdge::Left(x) | ClipEdge::Right(x) => {
                let t = (x - a[0]) / (b[0] - a[0]);
                [x, a[1] + t * (b[1] - a[1])]
            }
            ClipEdge::Top(y) | ClipEdge::Bottom(y) => {
                let t = (y - a[1]) / (b[1] - a[1]);
                [a[0] + t * (b[0] - a[0]), y]
            }
        }
    }
}

/// Sutherland-Hodgman clip of a polygon against an axis-aligned rectangle.
///
/// Returns an empty vec when the polygon lies entirely outside. Non-convex
/// subjects may come back with degenerate bridge edges along the rectangle
/// border; those cancel under even-odd rasterization and contribute zero
/// area, so downstream consumers are unaffected.
pub fn clip_polygon_to_rect(polygon: &[Point], rect: ClipRect) -> Vec<Point> {
    let edges = [
        ClipEdge::Left(rect.x0),
        ClipEdge::Right(rect.x1),
        ClipEdge::Top(rect.y0),
        ClipEdge::Bottom(rect.y1),
    ];
    let mut current: Vec<Point> = polygon.to_vec();
    for edge in &edges {
        if current.is_empty() {
            break;
        }
        let mut next = Vec::with_capacity(current.len() + 4);
        for i in 0..current.len() {
            let a = current[i];
            let b = current[(i + 1) % current.len()];
            let a_in = edge.inside(a);
            let b_in = edge.inside(b);
            match (a_in, b_in) {
                (true, true) => next.push(b),
                (true, false) => next.push(edge.intersect(a, b)),
                (false, true) => {
                    next.push(edge.intersect(a, b));
                    next.push(b);
                }
                (false, false) => {}
            }
        }
        current = next;
    }
    dedup_consecutive(&mut current);
    if current.len() < 3 {
        current.clear();
    }
    current
}

fn dedup_consecutive(points: &mut Vec<Point>) {
    if points.len() < 2 {
        return;
    }
    let mut out: Vec<Point> = Vec::with_capacity(points.len());
    for &p in points.iter() {
        if out.last().is_none_or(|&q| q != p) {
            out.push(p);
        }
    }
    if out.len() >= 2 && out.first() == out.last() {
        out.pop();
    }
    *points = out;
}

/// X coordinates where polygon edges cross the horizontal line `y`,
/// sorted ascending. Even-odd fill pairs consecutive crossings.
pub fn scanline_crossings(polygon: &[Point], y: f64, out: &mut Vec<f64>) {
    out.clear();
    for i in 0..polygon.len() {
        let [x0, y0] = polygon[i];
        let [x1, y1] = polygon[(i + 1) % polygon.len()];
        if (y0 <= y) != (y1 <= y) {
            out.push(x0 + (y - y0) * (x1 - x0) / (y1 - y0));
        }
    }
    out.sort_by(|a, b| a.partial_cmp(b).unwrap());
}
