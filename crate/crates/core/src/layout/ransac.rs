use nalgebra::SymmetricEigen;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{fit_plane_3pts, gravity_up, Mat3, Plane, Vec3};
use crate::io::CloudPoint;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StageParams {
    /// Point-to-plane distance for hypothesis scoring, meters.
    pub distance: f64,
    /// Normal agreement for hypothesis scoring, degrees.
    pub normal_deg: f64,
    pub final_distance: f64,
    pub final_normal_deg: f64,
    /// A plane is accepted with strictly more final inliers than this.
    pub min_inliers: usize,
    pub iterations: usize,
}

impl Default for StageParams {
    fn default() -> Self {
        Self {
            distance: 0.10,
            normal_deg: 15.0,
            final_distance: 0.20,
            final_normal_deg: 30.0,
            min_inliers: 5000,
            iterations: 2000,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RansacParams {
    pub stage1: StageParams,
    pub stage2: StageParams,
    /// Largest tilt from gravity for the floor plane, degrees.
    pub floor_angle_deg: f64,
    /// Cap on accepted planes per stage.
    pub max_planes: usize,
}

impl Default for RansacParams {
    fn default() -> Self {
        Self {
            stage1: StageParams::default(),
            stage2: StageParams {
                distance: 1.0,
                normal_deg: 10.0,
                final_distance: 1.0,
                final_normal_deg: 10.0,
                min_inliers: 300,
                iterations: 2000,
            },
            floor_angle_deg: 15.0,
            max_planes: 64,
        }
    }
}

impl RansacParams {
    pub fn validate(&self) -> Result<()> {
        for s in [&self.stage1, &self.stage2] {
            let ok = [s.distance, s.normal_deg, s.final_distance, s.final_normal_deg]
                .iter()
                .all(|v| v.is_finite() && *v > 0.0)
                && s.normal_deg < 90.0
                && s.final_normal_deg < 90.0
                && s.iterations > 0;
            if !ok {
                return Err(Error::Config("RANSAC thresholds must be positive, angles below 90".into()));
            }
        }
        if !(self.floor_angle_deg > 0.0 && self.floor_angle_deg < 90.0) {
            return Err(Error::Config("floor_angle_deg must be in (0, 90)".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DetectedPlane {
    pub plane: Plane,
    /// Indices into the input cloud.
    pub inliers: Vec<usize>,
    /// 1 or 2.
    pub stage: u8,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct PlaneSet {
    pub planes: Vec<DetectedPlane>,
    /// Index of the floor among `planes`.
    pub floor: Option<usize>,
}

fn is_inlier(plane: &Plane, p: &CloudPoint, dist: f64, cos: f64) -> bool {
    plane.distance(&p.position) <= dist && plane.normal.dot(&p.normal).abs() >= cos
}

/// Least-squares plane through `pts`, normal oriented along the mean
/// point normal.
fn refine(cloud: &[CloudPoint], idx: &[usize], fallback: &Plane) -> Plane {
    let n = idx.len() as f64;
    let centroid = idx.iter().map(|&i| cloud[i].position).sum::<Vec3>() / n;
    let mut cov = Mat3::zeros();
    for &i in idx {
        let d = cloud[i].position - centroid;
        cov += d * d.transpose();
    }
    let eig = SymmetricEigen::new(cov);
    let k = eig.eigenvalues.imin();
    let mut normal: Vec3 = eig.eigenvectors.column(k).into_owned();
    if !(normal.norm() > 0.5) || normal.iter().any(|v| !v.is_finite()) {
        normal = fallback.normal;
    }
    normal = normal.normalize();
    let mean_normal: Vec3 = idx.iter().map(|&i| cloud[i].normal).sum();
    if normal.dot(&mean_normal) < 0.0 {
        normal = -normal;
    }
    Plane {
        normal,
        offset: normal.dot(&centroid),
    }
}

fn run_stage(
    cloud: &[CloudPoint],
    remaining: &mut Vec<usize>,
    stage: &StageParams,
    stage_id: u8,
    params: &RansacParams,
    rng: &mut ChaCha8Rng,
    out: &mut PlaneSet,
) {
    let cos = stage.normal_deg.to_radians().cos();
    let final_cos = stage.final_normal_deg.to_radians().cos();
    let floor_cos = params.floor_angle_deg.to_radians().cos();
    let mut accepted = 0;
    while remaining.len() >= 3 && accepted < params.max_planes {
        let m = remaining.len();
        let hyps: Vec<Option<Plane>> = (0..stage.iterations)
            .map(|_| {
                let a = rng.random_range(0..m);
                let mut b = rng.random_range(0..m - 1);
                if b >= a {
                    b += 1;
                }
                let mut c = rng.random_range(0..m - 2);
                for lo in [a.min(b), a.max(b)] {
                    if c >= lo {
                        c += 1;
                    }
                }
                let pts = [remaining[a], remaining[b], remaining[c]].map(|i| &cloud[i]);
                let plane = fit_plane_3pts(&pts[0].position, &pts[1].position, &pts[2].position).ok()?;
                // Samples whose normals disagree with the hypothesis cannot
                // all be inliers; skip counting.
                pts.iter()
                    .all(|p| plane.normal.dot(&p.normal).abs() >= cos)
                    .then_some(plane)
            })
            .collect();
        let counts: Vec<usize> = hyps
            .par_iter()
            .map(|h| match h {
                Some(pl) => remaining
                    .iter()
                    .filter(|&&i| is_inlier(pl, &cloud[i], stage.distance, cos))
                    .count(),
                None => 0,
            })
            .collect();
        let mut best = None;
        let mut best_count = 0;
        for (k, &c) in counts.iter().enumerate() {
            if c > best_count {
                best_count = c;
                best = Some(k);
            }
        }
        let Some(best) = best else { break };
        let plane = hyps[best].expect("counted hypothesis exists");
        let inliers: Vec<usize> = remaining
            .iter()
            .copied()
            .filter(|&i| is_inlier(&plane, &cloud[i], stage.final_distance, final_cos))
            .collect();
        if inliers.len() <= stage.min_inliers {
            break;
        }
        accepted += 1;
        let refined = refine(cloud, &inliers, &plane);
        let keep: std::collections::HashSet<usize> = inliers.iter().copied().collect();
        remaining.retain(|i| !keep.contains(i));
        let horizontal = refined.normal.dot(&gravity_up()).abs() >= floor_cos;
        if horizontal {
            if out.floor.is_some() {
                continue;
            }
            out.floor = Some(out.planes.len());
        }
        out.planes.push(DetectedPlane {
            plane: refined,
            inliers,
            stage: stage_id,
        });
    }
}

/// Two-stage plane detection; the first near-horizontal plane becomes the
/// floor and later ones are removed without being kept.
pub fn detect_planes(cloud: &[CloudPoint], params: &RansacParams, seed: u64) -> Result<PlaneSet> {
    params.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut remaining: Vec<usize> = (0..cloud.len()).collect();
    let mut out = PlaneSet::default();
    run_stage(cloud, &mut remaining, &params.stage1, 1, params, &mut rng, &mut out);
    run_stage(cloud, &mut remaining, &params.stage2, 2, params, &mut rng, &mut out);
    Ok(out)
}
