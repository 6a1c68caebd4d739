//! Polygon area, intersection and overlap scores.
//!
//! Convex pairs are intersected exactly with Sutherland-Hodgman clipping.
//! Concave polygons are ear-clipped into triangles first and the pairwise
//! convex intersections are summed, which is exact because the triangles
//! partition the polygon.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{Point2D, Polygon};

/// Areas below this are treated as zero.
pub const AREA_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OverlapScores {
    pub iou: f64,
    pub inter_over_det: f64,
    pub intersection_area: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BBox {
    pub min_x: f64,
    pub min_y: f64,
    pub max_x: f64,
    pub max_y: f64,
}

impl BBox {
    pub fn of(points: &[Point2D]) -> Self {
        points.iter().fold(
            BBox { min_x: f64::INFINITY, min_y: f64::INFINITY, max_x: f64::NEG_INFINITY, max_y: f64::NEG_INFINITY },
            |b, p| BBox {
                min_x: b.min_x.min(p.x),
                min_y: b.min_y.min(p.y),
                max_x: b.max_x.max(p.x),
                max_y: b.max_y.max(p.y),
            },
        )
    }

    pub fn overlaps(&self, other: &BBox) -> bool {
        self.min_x < other.max_x && other.min_x < self.max_x && self.min_y < other.max_y && other.min_y < self.max_y
    }
}

#[inline]
fn cross(o: Point2D, a: Point2D, b: Point2D) -> f64 {
    (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x)
}

/// Shoelace signed area; positive for counter-clockwise vertex order.
pub fn signed_area(vertices: &[Point2D]) -> f64 {
    let n = vertices.len();
    if n < 3 {
        return 0.0;
    }
    // Shift to the first vertex to limit cancellation on large coordinates.
    let o = vertices[0];
    let mut s = 0.0;
    for i in 1..n - 1 {
        s += cross(o, vertices[i], vertices[i + 1]);
    }
    s / 2.0
}

fn snap(a: f64) -> f64 {
    if a < AREA_EPS {
        0.0
    } else {
        a
    }
}

pub fn polygon_area(p: &Polygon) -> f64 {
    snap(signed_area(p.vertices()).abs())
}

fn orientation(a: Point2D, b: Point2D, c: Point2D) -> i8 {
    let v = cross(a, b, c);
    if v > 0.0 {
        1
    } else if v < 0.0 {
        -1
    } else {
        0
    }
}

/// Proper crossing, or collinear overlap of positive length.
fn segments_cross(p1: Point2D, p2: Point2D, q1: Point2D, q2: Point2D) -> bool {
    let (o1, o2, o3, o4) = (orientation(p1, p2, q1), orientation(p1, p2, q2), orientation(q1, q2, p1), orientation(q1, q2, p2));
    if o1 * o2 < 0 && o3 * o4 < 0 {
        return true;
    }
    if o1 == 0 && o2 == 0 && o3 == 0 && o4 == 0 {
        // Collinear: project onto the dominant axis and test for overlap of positive length.
        let key = |p: Point2D| if (p2.x - p1.x).abs() >= (p2.y - p1.y).abs() { p.x } else { p.y };
        let (a0, a1) = (key(p1).min(key(p2)), key(p1).max(key(p2)));
        let (b0, b1) = (key(q1).min(key(q2)), key(q1).max(key(q2)));
        return a0.max(b0) < a1.min(b1);
    }
    false
}

fn dedup_ring(vertices: &[Point2D]) -> Vec<Point2D> {
    let mut out: Vec<Point2D> = Vec::with_capacity(vertices.len());
    for &v in vertices {
        if out.last() != Some(&v) {
            out.push(v);
        }
    }
    while out.len() > 1 && out.first() == out.last() {
        out.pop();
    }
    out
}

/// True when two non-adjacent edges cross, or adjacent edges fold back over each other.
pub fn is_self_intersecting(vertices: &[Point2D]) -> bool {
    let v = dedup_ring(vertices);
    let n = v.len();
    if n < 3 {
        return false;
    }
    for i in 0..n {
        let (a, b) = (v[i], v[(i + 1) % n]);
        for j in i + 1..n {
            let (c, d) = (v[j], v[(j + 1) % n]);
            let adjacent = j == i + 1 || (i == 0 && j == n - 1);
            if adjacent {
                // Adjacent edges only conflict when they overlap collinearly.
                let shared = if j == i + 1 { b } else { a };
                let (other_a, other_c) = if j == i + 1 { (a, d) } else { (b, c) };
                if orientation(other_a, shared, other_c) == 0 {
                    let da = (other_a.x - shared.x, other_a.y - shared.y);
                    let dc = (other_c.x - shared.x, other_c.y - shared.y);
                    if da.0 * dc.0 + da.1 * dc.1 > 0.0 {
                        return true;
                    }
                }
                continue;
            }
            if segments_cross(a, b, c, d) {
                return true;
            }
        }
    }
    false
}

/// Counter-clockwise convex hull (monotone chain). Returns the input unchanged
/// when it has fewer than three non-collinear points.
pub fn convex_hull(points: &[Point2D]) -> Vec<Point2D> {
    let mut pts: Vec<Point2D> = points.to_vec();
    pts.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
    pts.dedup();
    if pts.len() < 3 {
        return points.to_vec();
    }
    let mut hull: Vec<Point2D> = Vec::with_capacity(pts.len() * 2);
    for pass in 0..2 {
        let start = hull.len();
        let iter: Box<dyn Iterator<Item = &Point2D>> =
            if pass == 0 { Box::new(pts.iter()) } else { Box::new(pts.iter().rev()) };
        for &p in iter {
            while hull.len() >= start + 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0 {
                hull.pop();
            }
            hull.push(p);
        }
        hull.pop();
    }
    if hull.len() < 3 {
        return points.to_vec();
    }
    hull
}

/// Convexity test for a counter-clockwise simple ring.
pub fn is_convex(vertices: &[Point2D]) -> bool {
    let v = dedup_ring(vertices);
    let n = v.len();
    if n <= 3 {
        return true;
    }
    let scale = BBox::of(&v);
    let tol = -1e-12 * ((scale.max_x - scale.min_x) + (scale.max_y - scale.min_y)).powi(2);
    (0..n).all(|i| cross(v[i], v[(i + 1) % n], v[(i + 2) % n]) >= tol)
}

/// Clips `subject` against a convex counter-clockwise `clip` ring.
pub fn clip_convex(subject: &[Point2D], clip: &[Point2D]) -> Vec<Point2D> {
    let mut output = subject.to_vec();
    let m = clip.len();
    for i in 0..m {
        if output.is_empty() {
            break;
        }
        let (e0, e1) = (clip[i], clip[(i + 1) % m]);
        if e0 == e1 {
            continue;
        }
        let input = std::mem::take(&mut output);
        let side = |p: Point2D| cross(e0, e1, p);
        let mut prev = *input.last().unwrap();
        let mut prev_side = side(prev);
        for &cur in &input {
            let cur_side = side(cur);
            if cur_side >= 0.0 {
                if prev_side < 0.0 {
                    output.push(lerp(prev, cur, prev_side / (prev_side - cur_side)));
                }
                output.push(cur);
            } else if prev_side >= 0.0 {
                output.push(lerp(prev, cur, prev_side / (prev_side - cur_side)));
            }
            prev = cur;
            prev_side = cur_side;
        }
    }
    output
}

fn lerp(a: Point2D, b: Point2D, t: f64) -> Point2D {
    Point2D::new(a.x + t * (b.x - a.x), a.y + t * (b.y - a.y))
}

fn point_in_triangle(p: Point2D, a: Point2D, b: Point2D, c: Point2D) -> bool {
    cross(a, b, p) >= 0.0 && cross(b, c, p) >= 0.0 && cross(c, a, p) >= 0.0
}

/// Ear-clipping triangulation of a simple counter-clockwise ring.
pub fn triangulate(vertices: &[Point2D]) -> Vec<[Point2D; 3]> {
    let mut ring = dedup_ring(vertices);
    // Drop collinear vertices; they carry no area.
    let mut i = 0;
    while ring.len() > 3 && i < ring.len() {
        let n = ring.len();
        if cross(ring[(i + n - 1) % n], ring[i], ring[(i + 1) % n]) == 0.0 {
            ring.remove(i);
            i = i.saturating_sub(1);
        } else {
            i += 1;
        }
    }
    let mut tris = Vec::with_capacity(ring.len().saturating_sub(2));
    while ring.len() > 3 {
        let n = ring.len();
        let ear = (0..n).find(|&i| {
            let (a, b, c) = (ring[(i + n - 1) % n], ring[i], ring[(i + 1) % n]);
            cross(a, b, c) > 0.0
                && ring
                    .iter()
                    .enumerate()
                    .filter(|&(j, _)| j != i && j != (i + n - 1) % n && j != (i + 1) % n)
                    .all(|(_, &p)| p == a || p == b || p == c || !point_in_triangle(p, a, b, c))
        });
        // Numerical trouble: clip the most convex corner.
        let i = ear.unwrap_or_else(|| {
            (0..n)
                .max_by(|&x, &y| {
                    let cx = cross(ring[(x + n - 1) % n], ring[x], ring[(x + 1) % n]);
                    let cy = cross(ring[(y + n - 1) % n], ring[y], ring[(y + 1) % n]);
                    cx.total_cmp(&cy)
                })
                .unwrap()
        });
        tris.push([ring[(i + n - 1) % n], ring[i], ring[(i + 1) % n]]);
        ring.remove(i);
    }
    if ring.len() == 3 {
        tris.push([ring[0], ring[1], ring[2]]);
    }
    tris
}

fn convex_pieces(p: &Polygon) -> Vec<Vec<Point2D>> {
    if is_convex(p.vertices()) {
        vec![p.vertices().to_vec()]
    } else {
        triangulate(p.vertices()).into_iter().map(|t| t.to_vec()).collect()
    }
}

/// Area of `a ∩ b`.
pub fn intersect_area(a: &Polygon, b: &Polygon) -> f64 {
    if !a.bbox().overlaps(&b.bbox()) {
        return 0.0;
    }
    let pa = convex_pieces(a);
    let pb = convex_pieces(b);
    let mut total = 0.0;
    for x in &pa {
        let bx = BBox::of(x);
        for y in &pb {
            if !bx.overlaps(&BBox::of(y)) {
                continue;
            }
            let clipped = clip_convex(x, y);
            total += signed_area(&clipped).abs();
        }
    }
    snap(total.min(polygon_area(a)).min(polygon_area(b)))
}

/// IoU and intersection-over-detection for a detection/ground-truth pair.
pub fn overlap_scores(det: &Polygon, gt: &Polygon) -> Result<OverlapScores> {
    let (ad, ag) = (polygon_area(det), polygon_area(gt));
    if ad == 0.0 || ag == 0.0 {
        return Err(Error::Degenerate("zero-area polygon in overlap computation"));
    }
    let inter = intersect_area(det, gt);
    let iod = (inter / ad).clamp(0.0, 1.0);
    let iou = (inter / (ad + ag - inter)).clamp(0.0, 1.0).min(iod);
    Ok(OverlapScores { iou, inter_over_det: iod, intersection_area: inter })
}

/// Area-weighted centroid.
pub fn centroid(p: &Polygon) -> Result<Point2D> {
    let v = p.vertices();
    let o = v[0];
    let (mut a2, mut cx, mut cy) = (0.0, 0.0, 0.0);
    for i in 0..v.len() {
        let (p0, p1) = (v[i], v[(i + 1) % v.len()]);
        let (x0, y0, x1, y1) = (p0.x - o.x, p0.y - o.y, p1.x - o.x, p1.y - o.y);
        let c = x0 * y1 - x1 * y0;
        a2 += c;
        cx += (x0 + x1) * c;
        cy += (y0 + y1) * c;
    }
    if (a2 / 2.0).abs() < AREA_EPS {
        return Err(Error::Degenerate("zero-area polygon has no centroid"));
    }
    Ok(Point2D::new(o.x + cx / (3.0 * a2), o.y + cy / (3.0 * a2)))
}
