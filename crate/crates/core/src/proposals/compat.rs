use serde::{Deserialize, Serialize};

use super::{Category, LayoutProposal, ObjectProposal};
use crate::error::{Error, Result};
use crate::geometry::{point_in_polygon, polygon_intersection_area, Vec2, Vec3};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Compatibility {
    Compatible,
    /// Overlap allowed but penalized by its voxel IoU.
    Tolerated(f64),
    Incompatible,
}

impl Compatibility {
    pub fn is_incompatible(self) -> bool {
        matches!(self, Compatibility::Incompatible)
    }

    /// IoU charged by the prior; zero unless tolerated.
    pub fn penalty(self) -> f64 {
        match self {
            Compatibility::Tolerated(iou) => iou,
            _ => 0.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CompatParams {
    /// Object pairs above this voxel IoU are incompatible.
    pub iou_threshold: f64,
    /// Chair/sofa penetration into a table top, as a fraction of its shorter side.
    pub surface_ratio_threshold: f64,
    /// Layout planes closer than this angle (degrees) and offset (m) are coplanar.
    pub coplanar_angle_deg: f64,
    pub coplanar_offset: f64,
    /// Thickness (m) of the slab around each layout polygon.
    pub slab_thickness: f64,
    /// Coplanar overlap (m²) above which two layouts are alternatives.
    pub coplanar_overlap_area: f64,
}

impl Default for CompatParams {
    fn default() -> Self {
        Self {
            iou_threshold: 0.3,
            surface_ratio_threshold: 0.3,
            coplanar_angle_deg: 1.0,
            coplanar_offset: 0.01,
            slab_thickness: 0.01,
            coplanar_overlap_area: 1e-4,
        }
    }
}

impl CompatParams {
    pub fn validate(&self) -> Result<()> {
        let ok = |v: f64| v.is_finite() && v >= 0.0;
        if !(self.iou_threshold > 0.0 && self.iou_threshold <= 1.0) {
            return Err(Error::Config("iou_threshold must be in (0, 1]".into()));
        }
        if ![
            self.surface_ratio_threshold,
            self.coplanar_angle_deg,
            self.coplanar_offset,
            self.slab_thickness,
            self.coplanar_overlap_area,
        ]
        .into_iter()
        .all(ok)
        {
            return Err(Error::Config("compatibility tolerances must be nonnegative".into()));
        }
        Ok(())
    }
}

fn raw_iou(a: &ObjectProposal, b: &ObjectProposal) -> f64 {
    let inter = a.voxels.intersection_count(&b.voxels);
    let union = a.voxels.occupied_count() + b.voxels.occupied_count() - inter;
    if union == 0 {
        0.0
    } else {
        inter as f64 / union as f64
    }
}

fn surface_pair<'a>(
    a: &'a ObjectProposal,
    b: &'a ObjectProposal,
) -> Option<(&'a ObjectProposal, &'a ObjectProposal)> {
    let seat = |c: Category| matches!(c, Category::Chair | Category::Sofa);
    match (a.category, b.category) {
        (ca, Category::Table) if seat(ca) => Some((a, b)),
        (Category::Table, cb) if seat(cb) => Some((b, a)),
        _ => None,
    }
}

/// Deepest penetration of `penetrating` into the owner's horizontal
/// surface: distance of an intersecting voxel center to the nearest
/// surface edge over the shorter side. Zero without intersection.
pub fn horizontal_surface_ratio(penetrating: &ObjectProposal, surface_owner: &ObjectProposal) -> f64 {
    let Some(surface) = &surface_owner.surface else {
        return 0.0;
    };
    let side = surface.shorter_side();
    if side <= 0.0 {
        return 0.0;
    }
    let grid = &penetrating.voxels;
    let deepest = grid
        .intersection_indices(&surface_owner.voxels)
        .into_iter()
        .filter_map(|g| surface.inside_edge_distance(&grid.center_of_global(g)))
        .fold(0.0, f64::max);
    (deepest / side).clamp(0.0, 1.0)
}

pub fn object_object_compat(a: &ObjectProposal, b: &ObjectProposal, params: &CompatParams) -> Compatibility {
    let iou = raw_iou(a, b);
    if let Some((seat, owner)) = surface_pair(a, b) {
        if owner.surface.is_some() {
            let ratio = horizontal_surface_ratio(seat, owner);
            return if ratio > params.surface_ratio_threshold {
                Compatibility::Incompatible
            } else if iou > 0.0 {
                Compatibility::Tolerated(iou)
            } else {
                Compatibility::Compatible
            };
        }
    }
    if iou == 0.0 {
        Compatibility::Compatible
    } else if iou <= params.iou_threshold {
        Compatibility::Tolerated(iou)
    } else {
        Compatibility::Incompatible
    }
}

/// Incompatible when object voxels inside the polygon's footprint reach
/// more than one voxel beyond its plane on both sides.
pub fn object_layout_compat(o: &ObjectProposal, l: &LayoutProposal) -> Compatibility {
    let plane = &l.polygon.plane;
    let vs = o.voxels.voxel_size;
    let corner_d: Vec<f64> = o.bbox.corners().iter().map(|c| plane.signed_distance(c)).collect();
    let lo = corner_d.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = corner_d.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    // Voxel centers stay within half a voxel of the mesh bounds.
    if lo >= -vs || hi <= vs {
        return Compatibility::Compatible;
    }
    let (u, v) = plane.basis();
    let poly: Vec<Vec2> = l
        .polygon
        .vertices
        .iter()
        .map(|p| Vec2::new(u.dot(p), v.dot(p)))
        .collect();
    let (mut pos, mut neg) = (0.0f64, 0.0f64);
    for c in o.voxels.occupied_centers() {
        let d = plane.signed_distance(&c);
        if d.abs() <= vs || (d > 0.0 && d <= pos) || (d < 0.0 && -d <= neg) {
            continue;
        }
        if point_in_polygon(&Vec2::new(u.dot(&c), v.dot(&c)), &poly) {
            if d > 0.0 {
                pos = d;
            } else {
                neg = -d;
            }
            if pos > vs && neg > vs {
                return Compatibility::Incompatible;
            }
        }
    }
    Compatibility::Compatible
}

fn coplanar(a: &LayoutProposal, b: &LayoutProposal, params: &CompatParams) -> bool {
    if a.plane_id == b.plane_id {
        return true;
    }
    let (pa, pb) = (a.plane(), b.plane());
    let dot = pa.normal.dot(&pb.normal);
    if pa.angle_to(pb) > params.coplanar_angle_deg.to_radians() {
        return false;
    }
    let ob = if dot < 0.0 { -pb.offset } else { pb.offset };
    (pa.offset - ob).abs() <= params.coplanar_offset
}

fn aabb(l: &LayoutProposal) -> (Vec3, Vec3) {
    let mut lo = Vec3::repeat(f64::INFINITY);
    let mut hi = Vec3::repeat(f64::NEG_INFINITY);
    for v in &l.polygon.vertices {
        lo = lo.inf(v);
        hi = hi.sup(v);
    }
    (lo, hi)
}

/// Layout pairs: coplanar overlap is an alternative; non-neighbours whose
/// interiors cross along the planes' intersection line are incompatible.
pub fn layout_layout_compat(a: &LayoutProposal, b: &LayoutProposal, params: &CompatParams) -> Compatibility {
    let slack = params.slab_thickness;
    let (alo, ahi) = aabb(a);
    let (blo, bhi) = aabb(b);
    if (0..3).any(|k| alo[k] > bhi[k] + slack || blo[k] > ahi[k] + slack) {
        return Compatibility::Compatible;
    }
    if coplanar(a, b, params) {
        let plane = a.plane();
        let pa = a.polygon.to_2d();
        let pb: Vec<Vec2> = b.polygon.vertices.iter().map(|p| plane.to_2d(p)).collect();
        return if polygon_intersection_area(&pa, &pb) > params.coplanar_overlap_area {
            Compatibility::Incompatible
        } else {
            Compatibility::Compatible
        };
    }
    if a.shares_edge(b) {
        return Compatibility::Compatible;
    }
    let (na, nb) = (a.plane().normal, b.plane().normal);
    let dir = na.cross(&nb);
    if dir.norm() < 1e-9 {
        // Parallel, distinct planes.
        return Compatibility::Compatible;
    }
    let dir = dir.normalize();
    // Point on both planes closest to the origin.
    let (ha, hb) = (a.plane().offset, b.plane().offset);
    let m = na.dot(&nb);
    let det = 1.0 - m * m;
    let p0 = na * ((ha - hb * m) / det) + nb * ((hb - ha * m) / det);
    let half = -0.5 * params.slab_thickness;
    let cover = |l: &LayoutProposal| {
        let plane = l.plane();
        let (u, v) = plane.basis();
        let origin = plane.to_2d(&p0);
        let d2 = Vec2::new(u.dot(&dir), v.dot(&dir));
        l.polygon.line_coverage(&origin, &d2, half)
    };
    let ca = cover(a);
    if ca.is_empty() {
        return Compatibility::Compatible;
    }
    let cb = cover(b);
    let mut overlap = 0.0;
    for &(a0, a1) in &ca {
        for &(b0, b1) in &cb {
            overlap += (a1.min(b1) - a0.max(b0)).max(0.0);
        }
    }
    if overlap > params.slab_thickness {
        Compatibility::Incompatible
    } else {
        Compatibility::Compatible
    }
}

/// Euclidean distance between bounding-box centers.
pub fn object_distance(a: &ObjectProposal, b: &ObjectProposal) -> f64 {
    (a.bbox.center - b.bbox.center).norm()
}
