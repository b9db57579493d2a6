use super::{DepthPatch, View, NEAR_PLANE};
use crate::geometry::{Plane, Vec3};

/// World-space triangle; `plane` overrides the depth plane so coplanar
/// pieces of one polygon produce identical depths.
#[derive(Clone, Debug, PartialEq)]
pub struct RenderTriangle {
    pub vertices: [Vec3; 3],
    pub plane: Option<Plane>,
}

const SUBPIXEL_BITS: u32 = 8;
const ONE: i64 = 1 << SUBPIXEL_BITS;
const HALF: i64 = ONE / 2;
// Keeps edge-function products well inside i64.
const COORD_LIMIT: f64 = 1.0e6;

fn lex_less(a: &Vec3, b: &Vec3) -> bool {
    (a.x, a.y, a.z) < (b.x, b.y, b.z)
}

// Order-independent so that a shared edge clips to the same point from
// either triangle.
fn near_crossing(a: &Vec3, b: &Vec3) -> Vec3 {
    let (p, q) = if lex_less(a, b) { (a, b) } else { (b, a) };
    let t = (NEAR_PLANE - p.z) / (q.z - p.z);
    let mut x = p + (q - p) * t;
    x.z = NEAR_PLANE;
    x
}

fn clip_near(poly: &[Vec3]) -> Vec<Vec3> {
    let mut out = Vec::with_capacity(poly.len() + 1);
    let n = poly.len();
    for i in 0..n {
        let cur = poly[i];
        let prev = poly[(i + n - 1) % n];
        let cin = cur.z >= NEAR_PLANE;
        let pin = prev.z >= NEAR_PLANE;
        if cin {
            if !pin {
                out.push(near_crossing(&prev, &cur));
            }
            out.push(cur);
        } else if pin {
            out.push(near_crossing(&prev, &cur));
        }
    }
    out
}

fn to_fixed(v: f64) -> i64 {
    (v.clamp(-COORD_LIMIT, COORD_LIMIT) * ONE as f64).round() as i64
}

fn edge(a: (i64, i64), b: (i64, i64), p: (i64, i64)) -> i64 {
    (b.0 - a.0) * (p.1 - a.1) - (b.1 - a.1) * (p.0 - a.0)
}

fn top_left(a: (i64, i64), b: (i64, i64)) -> bool {
    let (dx, dy) = (b.0 - a.0, b.1 - a.1);
    dy < 0 || (dy == 0 && dx < 0)
}

struct Target<'a> {
    view: &'a View,
    buf: &'a mut [f32],
    bounds: &'a mut [usize; 4],
}

struct DepthPlane {
    normal: Vec3,
    offset: f64,
    zmin: f64,
    zmax: f64,
}

fn fill(target: &mut Target<'_>, v: [(i64, i64); 3], plane: &DepthPlane) {
    let [a, mut b, mut c] = v;
    let area = edge(a, b, c);
    if area == 0 {
        return;
    }
    if area < 0 {
        std::mem::swap(&mut b, &mut c);
    }
    let view = target.view;
    let (w, h) = (view.width as i64, view.height as i64);
    let min_x = a.0.min(b.0).min(c.0);
    let max_x = a.0.max(b.0).max(c.0);
    let min_y = a.1.min(b.1).min(c.1);
    let max_y = a.1.max(b.1).max(c.1);
    let px0 = (min_x - HALF).div_euclid(ONE).max(0);
    let px1 = (max_x - HALF).div_euclid(ONE).min(w - 1);
    let py0 = (min_y - HALF).div_euclid(ONE).max(0);
    let py1 = (max_y - HALF).div_euclid(ONE).min(h - 1);
    if px0 > px1 || py0 > py1 {
        return;
    }
    let bias = |p: (i64, i64), q: (i64, i64)| if top_left(p, q) { 0 } else { 1 };
    let (b0, b1, b2) = (bias(b, c), bias(c, a), bias(a, b));
    let lo = plane.zmin * (1.0 - 1e-3);
    let hi = plane.zmax * (1.0 + 1e-3);
    for py in py0..=py1 {
        let cy = py * ONE + HALF;
        let ry = (py as f64 + 0.5 - view.cy) / view.fy;
        for px in px0..=px1 {
            let p = (px * ONE + HALF, cy);
            if edge(b, c, p) < b0 || edge(c, a, p) < b1 || edge(a, b, p) < b2 {
                continue;
            }
            let rx = (px as f64 + 0.5 - view.cx) / view.fx;
            let denom = plane.normal.x * rx + plane.normal.y * ry + plane.normal.z;
            let z = plane.offset / denom;
            if !(z.is_finite() && z > 0.0) {
                continue;
            }
            let z = z.clamp(lo, hi) as f32;
            let i = py as usize * view.width + px as usize;
            if z < target.buf[i] {
                target.buf[i] = z;
                let bd = &mut target.bounds;
                bd[0] = bd[0].min(px as usize);
                bd[1] = bd[1].max(px as usize);
                bd[2] = bd[2].min(py as usize);
                bd[3] = bd[3].max(py as usize);
            }
        }
    }
}

/// Z-buffered depth of `tris` seen from `view`, cropped to the covered
/// pixels. No back-face culling.
pub fn rasterize(tris: &[RenderTriangle], view: &View) -> Option<DepthPatch> {
    let mut buf = vec![f32::INFINITY; view.pixel_count()];
    let mut bounds = [usize::MAX, 0, usize::MAX, 0];
    let mut target = Target {
        view,
        buf: &mut buf,
        bounds: &mut bounds,
    };
    for tri in tris {
        let cam = tri.vertices.map(|p| view.to_camera(&p));
        let (normal, offset) = match &tri.plane {
            Some(pl) => view.plane_to_camera(pl),
            None => {
                let n = (cam[1] - cam[0]).cross(&(cam[2] - cam[0]));
                (n, n.dot(&cam[0]))
            }
        };
        if normal.norm_squared() == 0.0 {
            continue;
        }
        let clipped = clip_near(&cam);
        if clipped.len() < 3 {
            continue;
        }
        let zmin = clipped.iter().map(|p| p.z).fold(f64::INFINITY, f64::min);
        let zmax = clipped.iter().map(|p| p.z).fold(f64::NEG_INFINITY, f64::max);
        let plane = DepthPlane {
            normal,
            offset,
            zmin,
            zmax,
        };
        let screen: Vec<(i64, i64)> = clipped
            .iter()
            .map(|p| {
                (
                    to_fixed(view.fx * p.x / p.z + view.cx),
                    to_fixed(view.fy * p.y / p.z + view.cy),
                )
            })
            .collect();
        for k in 1..screen.len() - 1 {
            fill(&mut target, [screen[0], screen[k], screen[k + 1]], &plane);
        }
    }
    if bounds[0] == usize::MAX {
        return None;
    }
    let (x0, x1, y0, y1) = (bounds[0], bounds[1], bounds[2], bounds[3]);
    let (w, h) = (x1 - x0 + 1, y1 - y0 + 1);
    let mut depth = Vec::with_capacity(w * h);
    for y in y0..=y1 {
        depth.extend_from_slice(&buf[y * view.width + x0..y * view.width + x1 + 1]);
    }
    Some(DepthPatch { x0, y0, w, h, depth })
}
