//! Planar polygons and the 2D predicates behind them.

use serde::{Deserialize, Serialize};

use super::{Plane, Vec3};
use crate::error::{Error, Result};

pub type Vec2 = nalgebra::Vector2<f64>;

fn cross2(a: &Vec2, b: &Vec2) -> f64 {
    a.x * b.y - a.y * b.x
}

/// Shoelace area; positive for counter-clockwise loops.
pub fn signed_area(poly: &[Vec2]) -> f64 {
    let n = poly.len();
    if n < 3 {
        return 0.0;
    }
    let mut acc = 0.0;
    for i in 0..n {
        let a = poly[i];
        let b = poly[(i + 1) % n];
        acc += a.x * b.y - b.x * a.y;
    }
    0.5 * acc
}

/// Even-odd rule. Points exactly on the boundary may land on either side.
pub fn point_in_polygon(p: &Vec2, poly: &[Vec2]) -> bool {
    let n = poly.len();
    let mut inside = false;
    let mut j = n.wrapping_sub(1);
    for i in 0..n {
        let a = poly[i];
        let b = poly[j];
        if (a.y > p.y) != (b.y > p.y) {
            let x = (b.x - a.x) * (p.y - a.y) / (b.y - a.y) + a.x;
            if p.x < x {
                inside = !inside;
            }
        }
        j = i;
    }
    inside
}

/// Euclidean distance from `p` to segment `ab`.
pub fn segment_distance(p: &Vec2, a: &Vec2, b: &Vec2) -> f64 {
    let ab = b - a;
    let len2 = ab.norm_squared();
    let t = if len2 > 0.0 {
        ((p - a).dot(&ab) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    (a + ab * t - p).norm()
}

fn boundary_distance(p: &Vec2, poly: &[Vec2]) -> f64 {
    let n = poly.len();
    (0..n)
        .map(|i| segment_distance(p, &poly[i], &poly[(i + 1) % n]))
        .fold(f64::INFINITY, f64::min)
}

fn segments_cross(a: &Vec2, b: &Vec2, c: &Vec2, d: &Vec2) -> bool {
    let d1 = cross2(&(b - a), &(c - a));
    let d2 = cross2(&(b - a), &(d - a));
    let d3 = cross2(&(d - c), &(a - c));
    let d4 = cross2(&(d - c), &(b - c));
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    let on = |p: &Vec2, q: &Vec2, r: &Vec2, o: f64| {
        o == 0.0
            && r.x >= p.x.min(q.x)
            && r.x <= p.x.max(q.x)
            && r.y >= p.y.min(q.y)
            && r.y <= p.y.max(q.y)
    };
    on(a, b, c, d1) || on(a, b, d, d2) || on(c, d, a, d3) || on(c, d, b, d4)
}

/// No two non-adjacent edges touch and no vertex repeats.
pub fn is_simple(poly: &[Vec2]) -> bool {
    let n = poly.len();
    if n < 3 {
        return false;
    }
    for i in 0..n {
        for j in (i + 1)..n {
            if (poly[i] - poly[j]).norm() < 1e-12 {
                return false;
            }
        }
    }
    for i in 0..n {
        let (a, b) = (poly[i], poly[(i + 1) % n]);
        for j in (i + 1)..n {
            if j == i + 1 || (i == 0 && j == n - 1) {
                continue;
            }
            let (c, d) = (poly[j], poly[(j + 1) % n]);
            if segments_cross(&a, &b, &c, &d) {
                return false;
            }
        }
    }
    true
}

/// Ear-clipping triangulation of a simple polygon.
///
/// Returns index triples into `poly`, each counter-clockwise. Collinear
/// vertices are allowed; zero-area ears are dropped.
pub fn triangulate(poly: &[Vec2]) -> Vec<[usize; 3]> {
    let n = poly.len();
    if n < 3 {
        return Vec::new();
    }
    let mut idx: Vec<usize> = (0..n).collect();
    if signed_area(poly) < 0.0 {
        idx.reverse();
    }
    let mut out = Vec::with_capacity(n - 2);
    let mut guard = 0;
    while idx.len() > 3 && guard < 4 * n * n {
        guard += 1;
        let m = idx.len();
        let mut clipped = false;
        for k in 0..m {
            let (ia, ib, ic) = (idx[(k + m - 1) % m], idx[k], idx[(k + 1) % m]);
            let (a, b, c) = (poly[ia], poly[ib], poly[ic]);
            let turn = cross2(&(b - a), &(c - b));
            if turn < 0.0 {
                continue;
            }
            if turn == 0.0 {
                // Collinear vertex: remove without emitting a triangle.
                idx.remove(k);
                clipped = true;
                break;
            }
            let blocked = idx.iter().any(|&j| {
                if j == ia || j == ib || j == ic {
                    return false;
                }
                let p = poly[j];
                cross2(&(b - a), &(p - a)) >= 0.0
                    && cross2(&(c - b), &(p - b)) >= 0.0
                    && cross2(&(a - c), &(p - c)) >= 0.0
            });
            if !blocked {
                out.push([ia, ib, ic]);
                idx.remove(k);
                clipped = true;
                break;
            }
        }
        if !clipped {
            break;
        }
    }
    if idx.len() == 3 {
        let (a, b, c) = (poly[idx[0]], poly[idx[1]], poly[idx[2]]);
        if cross2(&(b - a), &(c - a)) > 0.0 {
            out.push([idx[0], idx[1], idx[2]]);
        }
    }
    out
}

/// Sutherland–Hodgman clip of `subject` by a convex counter-clockwise `clip`.
pub fn convex_clip(subject: &[Vec2], clip: &[Vec2]) -> Vec<Vec2> {
    let mut output: Vec<Vec2> = subject.to_vec();
    let m = clip.len();
    for i in 0..m {
        if output.is_empty() {
            break;
        }
        let (a, b) = (clip[i], clip[(i + 1) % m]);
        let edge = b - a;
        let input = std::mem::take(&mut output);
        let k = input.len();
        for j in 0..k {
            let cur = input[j];
            let prev = input[(j + k - 1) % k];
            let cin = cross2(&edge, &(cur - a)) >= 0.0;
            let pin = cross2(&edge, &(prev - a)) >= 0.0;
            if cin {
                if !pin {
                    output.push(line_hit(&prev, &cur, &a, &edge));
                }
                output.push(cur);
            } else if pin {
                output.push(line_hit(&prev, &cur, &a, &edge));
            }
        }
    }
    output
}

fn line_hit(p: &Vec2, q: &Vec2, a: &Vec2, edge: &Vec2) -> Vec2 {
    let d = q - p;
    let denom = cross2(edge, &d);
    if denom == 0.0 {
        return *p;
    }
    let t = cross2(edge, &(a - p)) / denom;
    p + d * t
}

/// Area of the intersection of two simple polygons.
///
/// Both are triangulated; the intersection area is the sum of pairwise
/// convex triangle intersections.
pub fn polygon_intersection_area(a: &[Vec2], b: &[Vec2]) -> f64 {
    let ta = triangulate(a);
    let tb = triangulate(b);
    let mut area = 0.0;
    for t in &ta {
        let tri_a = [a[t[0]], a[t[1]], a[t[2]]];
        let (amin, amax) = bounds(&tri_a);
        for s in &tb {
            let tri_b = [b[s[0]], b[s[1]], b[s[2]]];
            let (bmin, bmax) = bounds(&tri_b);
            if amax.x < bmin.x || bmax.x < amin.x || amax.y < bmin.y || bmax.y < amin.y {
                continue;
            }
            let clipped = convex_clip(&tri_a, &tri_b);
            area += signed_area(&clipped).max(0.0);
        }
    }
    area
}

fn bounds(pts: &[Vec2]) -> (Vec2, Vec2) {
    let mut lo = Vec2::repeat(f64::INFINITY);
    let mut hi = Vec2::repeat(f64::NEG_INFINITY);
    for p in pts {
        lo = lo.inf(p);
        hi = hi.sup(p);
    }
    (lo, hi)
}

/// Planar polygon in 3D.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Polygon3D {
    pub plane: Plane,
    pub vertices: Vec<Vec3>,
}

impl Polygon3D {
    pub const PLANARITY_TOL: f64 = 1e-6;

    /// Validates planarity, vertex count and simplicity.
    pub fn new(plane: Plane, vertices: Vec<Vec3>) -> Result<Self> {
        if vertices.len() < 3 {
            return Err(Error::InvalidPolygon(format!(
                "{} vertices, need at least 3",
                vertices.len()
            )));
        }
        if vertices.iter().any(|v| v.iter().any(|c| !c.is_finite())) {
            return Err(Error::InvalidPolygon("non-finite vertex".into()));
        }
        let worst = vertices
            .iter()
            .map(|v| plane.distance(v))
            .fold(0.0, f64::max);
        if worst > Self::PLANARITY_TOL {
            return Err(Error::InvalidPolygon(format!(
                "vertex {worst:.3e} m off its plane"
            )));
        }
        let poly = Self { plane, vertices };
        if !is_simple(&poly.to_2d()) {
            return Err(Error::InvalidPolygon("self-intersecting loop".into()));
        }
        Ok(poly)
    }

    /// Vertices in the plane's 2D basis.
    pub fn to_2d(&self) -> Vec<Vec2> {
        self.vertices.iter().map(|v| self.plane.to_2d(v)).collect()
    }

    pub fn area(&self) -> f64 {
        signed_area(&self.to_2d()).abs()
    }

    /// Triangles as vertex index triples (counter-clockwise in plane basis).
    pub fn triangles(&self) -> Vec<[usize; 3]> {
        triangulate(&self.to_2d())
    }

    /// Whether the orthogonal projection of `p` falls inside the polygon.
    pub fn contains_projection(&self, p: &Vec3) -> bool {
        point_in_polygon(&self.plane.to_2d(p), &self.to_2d())
    }

    /// Parameter intervals `[t0, t1]` along the in-plane line `origin + t dir`
    /// where the line is within `tol` of the polygon. A negative `tol` keeps
    /// only points at least `-tol` inside the boundary.
    pub fn line_coverage(&self, origin: &Vec2, dir: &Vec2, tol: f64) -> Vec<(f64, f64)> {
        let poly = self.to_2d();
        let n = poly.len();
        let dir_len2 = dir.norm_squared();
        if dir_len2 == 0.0 {
            return Vec::new();
        }
        let r = tol.abs();
        let mut ts = Vec::with_capacity(8 * n);
        for i in 0..n {
            let (a, b) = (poly[i], poly[(i + 1) % n]);
            let e = b - a;
            let elen = e.norm();
            // Crossings with the edge line and its two offsets.
            if elen > 0.0 {
                let en = Vec2::new(-e.y, e.x) / elen;
                let denom = cross2(dir, &e);
                if denom.abs() > 1e-15 {
                    for off in [-r, 0.0, r] {
                        let a2 = a + en * off;
                        ts.push(cross2(&(a2 - origin), &e) / denom);
                    }
                }
            }
            // Entry and exit of the tolerance disc around the vertex.
            let t0 = (a - origin).dot(dir) / dir_len2;
            ts.push(t0);
            let perp2 = (origin + dir * t0 - a).norm_squared();
            if perp2 < r * r {
                let dt = ((r * r - perp2) / dir_len2).sqrt();
                ts.push(t0 - dt);
                ts.push(t0 + dt);
            }
        }
        ts.sort_by(|a, b| a.total_cmp(b));
        ts.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
        let near = |t: f64| {
            let p = origin + dir * t;
            if tol >= 0.0 {
                point_in_polygon(&p, &poly) || boundary_distance(&p, &poly) <= tol
            } else {
                point_in_polygon(&p, &poly) && boundary_distance(&p, &poly) >= -tol
            }
        };
        let mut out: Vec<(f64, f64)> = Vec::new();
        for w in ts.windows(2) {
            let (t0, t1) = (w[0], w[1]);
            if near(0.5 * (t0 + t1)) {
                match out.last_mut() {
                    Some(last) if (last.1 - t0).abs() < 1e-12 => last.1 = t1,
                    _ => out.push((t0, t1)),
                }
            }
        }
        out
    }
}
