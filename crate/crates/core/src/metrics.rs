//! Evaluation metrics: corner and box precision/recall, polygon IoU and
//! one-way Chamfer distance.

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::geometry::{
    chamfer_one_way, polygon_intersection_area, signed_area, voxel_iou, voxelize, OrientedBox, Polygon3D,
    RigidPoseScale, TriangleMesh, Vec2, Vec3,
};
use crate::proposals::Category;

/// Corner matching radius, meters.
pub const CORNER_RADIUS: f64 = 0.40;
/// Voxel size for box IoU, meters.
pub const BOX_VOXEL: f64 = 0.02;
/// Largest plane angle at which polygons are compared, degrees.
pub const POLYGON_MAX_ANGLE_DEG: f64 = 30.0;

/// `None` marks an undefined ratio (empty denominator).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PrecisionRecall {
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub matched: usize,
    pub predicted: usize,
    pub ground_truth: usize,
}

impl PrecisionRecall {
    fn new(matched: usize, predicted: usize, ground_truth: usize) -> Self {
        let ratio = |n: usize| (n > 0).then(|| matched as f64 / n as f64);
        Self {
            precision: ratio(predicted),
            recall: ratio(ground_truth),
            matched,
            predicted,
            ground_truth,
        }
    }
}

/// One-to-one greedy assignment over `(key, pred, gt)` candidates taken in
/// ascending key order; ties by pred then gt index.
pub fn greedy_match(n_pred: usize, n_gt: usize, mut pairs: Vec<(f64, usize, usize)>) -> Vec<(usize, usize)> {
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut used_p = vec![false; n_pred];
    let mut used_g = vec![false; n_gt];
    let mut out = Vec::new();
    for (_, p, g) in pairs {
        if !used_p[p] && !used_g[g] {
            used_p[p] = true;
            used_g[g] = true;
            out.push((p, g));
        }
    }
    out
}

pub fn corner_pr(pred: &[Vec3], gt: &[Vec3], radius: f64) -> PrecisionRecall {
    let mut pairs = Vec::new();
    for (i, p) in pred.iter().enumerate() {
        for (j, g) in gt.iter().enumerate() {
            let d = (p - g).norm();
            if d <= radius {
                pairs.push((d, i, j));
            }
        }
    }
    let matched = greedy_match(pred.len(), gt.len(), pairs).len();
    PrecisionRecall::new(matched, pred.len(), gt.len())
}

/// IoU after projecting `pred` onto the plane of `gt`; zero when the planes
/// differ by more than [`POLYGON_MAX_ANGLE_DEG`].
pub fn polygon_iou(pred: &Polygon3D, gt: &Polygon3D) -> f64 {
    if pred.plane.angle_to(&gt.plane) > POLYGON_MAX_ANGLE_DEG.to_radians() {
        return 0.0;
    }
    let g = gt.to_2d();
    let p: Vec<Vec2> = pred
        .vertices
        .iter()
        .map(|v| gt.plane.to_2d(&gt.plane.project(v)))
        .collect();
    let inter = polygon_intersection_area(&p, &g);
    let union = signed_area(&p).abs() + signed_area(&g).abs() - inter;
    if union > 0.0 {
        (inter / union).clamp(0.0, 1.0)
    } else {
        0.0
    }
}

/// Box IoU through voxelization at `voxel` meters.
pub fn box_iou(a: &OrientedBox, b: &OrientedBox, voxel: f64) -> Result<f64> {
    let id = RigidPoseScale::identity();
    voxel_iou(&voxelize(&a.to_mesh(), &id, voxel)?, &voxelize(&b.to_mesh(), &id, voxel)?)
}

fn box_matches(
    pred: &[(OrientedBox, Category)],
    gt: &[(OrientedBox, Category)],
    threshold: f64,
) -> Result<Vec<(usize, usize)>> {
    let mut pairs = Vec::new();
    for (i, (pb, pc)) in pred.iter().enumerate() {
        for (j, (gb, gc)) in gt.iter().enumerate() {
            if pc != gc {
                continue;
            }
            let iou = box_iou(pb, gb, BOX_VOXEL)?;
            if iou >= threshold && iou > 0.0 {
                pairs.push((-iou, i, j));
            }
        }
    }
    Ok(greedy_match(pred.len(), gt.len(), pairs))
}

/// Box precision/recall per category plus the pooled value.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoxReport {
    pub threshold: f64,
    pub overall: PrecisionRecall,
    pub per_category: BTreeMap<String, PrecisionRecall>,
}

pub fn bbox_pr(pred: &[(OrientedBox, Category)], gt: &[(OrientedBox, Category)], threshold: f64) -> Result<BoxReport> {
    let matches = box_matches(pred, gt, threshold)?;
    let mut per_category = BTreeMap::new();
    for c in Category::ALL.into_iter().filter(|c| !c.is_layout()) {
        let np = pred.iter().filter(|p| p.1 == c).count();
        let ng = gt.iter().filter(|g| g.1 == c).count();
        if np == 0 && ng == 0 {
            continue;
        }
        let m = matches.iter().filter(|(i, _)| pred[*i].1 == c).count();
        per_category.insert(c.name().to_string(), PrecisionRecall::new(m, np, ng));
    }
    Ok(BoxReport {
        threshold,
        overall: PrecisionRecall::new(matches.len(), pred.len(), gt.len()),
        per_category,
    })
}

/// An object as evaluated: posed mesh, category and bounding box.
#[derive(Clone, Debug)]
pub struct EvalObject {
    pub category: Category,
    pub mesh: TriangleMesh,
    pub bbox: OrientedBox,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChamferTable {
    /// Mean one-way distance per category, millimetres.
    pub per_category: BTreeMap<String, f64>,
    pub matched: usize,
    pub unmatched_gt: usize,
}

/// GT objects are matched to predictions by box IoU at `threshold`; each
/// matched pair contributes the distance from GT surface samples to
/// prediction surface samples. Both meshes use the same sampling seed.
pub fn chamfer_table(
    pred: &[EvalObject],
    gt: &[EvalObject],
    threshold: f64,
    samples: usize,
    seed: u64,
) -> Result<ChamferTable> {
    let pb: Vec<_> = pred.iter().map(|o| (o.bbox.clone(), o.category)).collect();
    let gb: Vec<_> = gt.iter().map(|o| (o.bbox.clone(), o.category)).collect();
    let mut matches = box_matches(&pb, &gb, threshold)?;
    matches.sort_by_key(|m| m.1);
    let mut sums: BTreeMap<String, (f64, usize)> = BTreeMap::new();
    for &(i, j) in &matches {
        let g = gt[j].mesh.sample_surface(samples, &mut ChaCha8Rng::seed_from_u64(seed));
        let p = pred[i].mesh.sample_surface(samples, &mut ChaCha8Rng::seed_from_u64(seed));
        let d = chamfer_one_way(&g, &p)?;
        let e = sums.entry(gt[j].category.name().to_string()).or_insert((0.0, 0));
        e.0 += d;
        e.1 += 1;
    }
    Ok(ChamferTable {
        per_category: sums.into_iter().map(|(k, (s, n))| (k, s / n as f64)).collect(),
        matched: matches.len(),
        unmatched_gt: gt.len() - matches.len(),
    })
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;
    use crate::geometry::Plane;

    fn square(x0: f64, y0: f64, side: f64, z: f64) -> Polygon3D {
        let plane = Plane::new(Vec3::new(0.0, 0.0, 1.0), z).unwrap();
        Polygon3D::new(
            plane,
            vec![
                Vec3::new(x0, y0, z),
                Vec3::new(x0 + side, y0, z),
                Vec3::new(x0 + side, y0 + side, z),
                Vec3::new(x0, y0 + side, z),
            ],
        )
        .unwrap()
    }

    fn cube(x: f64) -> OrientedBox {
        // Faces sit a quarter voxel off the 2 cm lattice.
        OrientedBox::new(Vec3::new(x + 0.505, 0.505, 0.505), Vec3::repeat(0.5), 0.0).unwrap()
    }

    fn grid_corners() -> Vec<Vec3> {
        (0..8).map(|i| Vec3::new((i % 4) as f64 * 2.0, (i / 4) as f64 * 3.0, 0.0)).collect()
    }

    #[test]
    fn identical_corners_match_fully() {
        let g = grid_corners();
        let pr = corner_pr(&g, &g, CORNER_RADIUS);
        assert_eq!((pr.precision, pr.recall), (Some(1.0), Some(1.0)));
    }

    #[test]
    fn one_ground_truth_corner_takes_one_prediction() {
        let g = [Vec3::zeros()];
        let pred = [Vec3::new(0.3, 0.0, 0.0), Vec3::new(0.0, 0.1, 0.0)];
        let pr = corner_pr(&pred, &g, CORNER_RADIUS);
        assert_eq!((pr.precision, pr.recall), (Some(0.5), Some(1.0)));
        assert_eq!(greedy_match(2, 1, vec![(0.3, 0, 0), (0.1, 1, 0)]), vec![(1, 0)]);
    }

    #[test]
    fn empty_sides_are_undefined() {
        let g = grid_corners();
        let pr = corner_pr(&g, &[], CORNER_RADIUS);
        assert_eq!((pr.precision, pr.recall), (Some(0.0), None));
        let pr = corner_pr(&[], &g, CORNER_RADIUS);
        assert_eq!((pr.precision, pr.recall), (None, Some(0.0)));
    }

    #[test]
    fn corners_just_outside_the_radius_miss() {
        let pr = corner_pr(&[Vec3::new(0.41, 0.0, 0.0)], &[Vec3::zeros()], CORNER_RADIUS);
        assert_eq!(pr.matched, 0);
    }

    #[test]
    fn polygon_iou_examples() {
        let a = square(0.0, 0.0, 1.0, 0.0);
        assert!((polygon_iou(&a, &a) - 1.0).abs() < 1e-12);
        assert_eq!(polygon_iou(&a, &square(2.0, 0.0, 1.0, 0.0)), 0.0);
        let half = polygon_iou(&a, &square(0.5, 0.0, 1.0, 0.0));
        assert!((half - 1.0 / 3.0).abs() < 1e-12);
        // Offset along the normal is projected away.
        assert!((polygon_iou(&square(0.0, 0.0, 1.0, 0.3), &a) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn steep_planes_are_not_compared() {
        let a = square(0.0, 0.0, 1.0, 0.0);
        let wall = Plane::new(Vec3::new(0.0, 1.0, 0.0), 0.0).unwrap();
        let w = Polygon3D::new(
            wall,
            vec![
                Vec3::new(0.0, 0.0, 0.0),
                Vec3::new(1.0, 0.0, 0.0),
                Vec3::new(1.0, 0.0, 1.0),
                Vec3::new(0.0, 0.0, 1.0),
            ],
        )
        .unwrap();
        assert_eq!(polygon_iou(&w, &a), 0.0);
    }

    #[test]
    fn box_pr_examples() {
        let gt = vec![(cube(0.0), Category::Chair), (cube(3.0), Category::Table)];
        let r = bbox_pr(&gt, &gt, 0.75).unwrap();
        assert_eq!((r.overall.precision, r.overall.recall), (Some(1.0), Some(1.0)));
        for pr in r.per_category.values() {
            assert_eq!((pr.precision, pr.recall), (Some(1.0), Some(1.0)));
        }
        let r = bbox_pr(&[], &gt, 0.5).unwrap();
        assert_eq!((r.overall.precision, r.overall.recall), (None, Some(0.0)));
        // Wrong category never matches.
        let r = bbox_pr(&[(cube(0.0), Category::Sofa)], &gt[..1], 0.5).unwrap();
        assert_eq!(r.overall.matched, 0);
    }

    #[test]
    fn jittered_box_matches_only_the_looser_threshold() {
        // Shifting a unit cube by d gives IoU (1 - d) / (1 + d) = 0.6 at d = 0.25.
        let shifted = cube(0.25);
        let iou = box_iou(&shifted, &cube(0.0), BOX_VOXEL).unwrap();
        assert!((iou - 0.6).abs() < 0.02, "{iou}");
        let gt = [(cube(0.0), Category::Bed)];
        let pred = [(shifted, Category::Bed)];
        assert_eq!(bbox_pr(&pred, &gt, 0.5).unwrap().overall.matched, 1);
        assert_eq!(bbox_pr(&pred, &gt, 0.75).unwrap().overall.matched, 0);
    }

    fn eval_quad(z: f64) -> EvalObject {
        let mesh = TriangleMesh::new(
            vec![
                Vec3::new(0.0, 0.0, z),
                Vec3::new(1.0, 0.0, z),
                Vec3::new(1.0, 1.0, z),
                Vec3::new(0.0, 1.0, z),
            ],
            vec![[0, 1, 2], [0, 2, 3]],
        )
        .unwrap();
        EvalObject {
            category: Category::Table,
            mesh,
            bbox: cube(0.0),
        }
    }

    #[test]
    fn chamfer_examples() {
        let gt = [eval_quad(0.5)];
        let exact = chamfer_table(&gt, &gt, 0.5, 2000, 3).unwrap();
        assert_eq!(exact.per_category["table"], 0.0);
        assert_eq!((exact.matched, exact.unmatched_gt), (1, 0));
        // A copy 10 mm along the normal.
        let moved = chamfer_table(&[eval_quad(0.51)], &gt, 0.5, 100_000, 3).unwrap();
        assert!((moved.per_category["table"] - 10.0).abs() < 1.0, "{:?}", moved.per_category);
        let empty = chamfer_table(&[], &gt, 0.5, 100, 3).unwrap();
        assert!(empty.per_category.is_empty());
        assert_eq!((empty.matched, empty.unmatched_gt), (0, 1));
    }

    fn arb_points(max: usize) -> impl Strategy<Value = Vec<Vec3>> {
        prop::collection::vec((-3.0..3.0f64, -3.0..3.0f64, 0.0..2.5f64), 0..max)
            .prop_map(|v| v.into_iter().map(|(x, y, z)| Vec3::new(x, y, z)).collect())
    }

    proptest! {
        #[test]
        fn swapping_roles_swaps_precision_and_recall(a in arb_points(12), b in arb_points(12)) {
            let ab = corner_pr(&a, &b, CORNER_RADIUS);
            let ba = corner_pr(&b, &a, CORNER_RADIUS);
            prop_assert_eq!(ab.precision, ba.recall);
            prop_assert_eq!(ab.matched, ba.matched);
            for v in [ab.precision, ab.recall].into_iter().flatten() {
                prop_assert!((0.0..=1.0).contains(&v));
            }
        }

        #[test]
        fn small_perturbations_keep_every_corner(
            offsets in prop::collection::vec((0.0..0.39f64, 0.0..std::f64::consts::TAU, -1.0..1.0f64), 8),
        ) {
            let g = grid_corners();
            let pred: Vec<Vec3> = g
                .iter()
                .zip(&offsets)
                .map(|(c, &(r, phi, u))| {
                    let s = (1.0 - u * u).sqrt();
                    c + r * Vec3::new(s * phi.cos(), s * phi.sin(), u)
                })
                .collect();
            let pr = corner_pr(&pred, &g, CORNER_RADIUS);
            prop_assert_eq!((pr.precision, pr.recall), (Some(1.0), Some(1.0)));
        }

        #[test]
        fn matching_is_injective(n in 0usize..6, m in 0usize..6, keys in prop::collection::vec(0.0..1.0f64, 36)) {
            let pairs: Vec<_> = (0..n).flat_map(|i| (0..m).map(move |j| (i, j))).map(|(i, j)| (keys[i * 6 + j], i, j)).collect();
            let out = greedy_match(n, m, pairs);
            let mut ps: Vec<_> = out.iter().map(|p| p.0).collect();
            let mut gs: Vec<_> = out.iter().map(|p| p.1).collect();
            ps.sort_unstable();
            ps.dedup();
            gs.sort_unstable();
            gs.dedup();
            prop_assert_eq!(ps.len(), out.len());
            prop_assert_eq!(gs.len(), out.len());
            prop_assert_eq!(out.len(), n.min(m));
        }

        #[test]
        fn near_coplanar_polygon_iou_is_symmetric(
            tilt in 0.0..1.0f64, dx in -0.8..0.8f64, dy in -0.8..0.8f64, side in 0.5..2.0f64,
        ) {
            let a = square(0.0, 0.0, 1.0, 0.0);
            let t = tilt.to_radians();
            let n = Vec3::new(t.sin(), 0.0, t.cos());
            let plane = Plane::new(n, 0.0).unwrap();
            let pts: Vec<Vec3> = [(0.0, 0.0), (side, 0.0), (side, side), (0.0, side)]
                .iter()
                .map(|&(x, y)| {
                    let (x, y) = (x + dx, y + dy);
                    Vec3::new(x, y, -n.x * x / n.z)
                })
                .collect();
            let b = Polygon3D::new(plane, pts).unwrap();
            prop_assert!((polygon_iou(&a, &b) - polygon_iou(&b, &a)).abs() <= 0.02);
        }
    }
}
