//! Core 3D types and geometric predicates.
//!
//! Gravity is fixed to `+z`. Object rotations produced by this crate are
//! yaw-only, but [`RigidPoseScale`] accepts any proper rotation.

mod chamfer;
mod mesh;
mod plane;
mod polygon;
mod voxel;

pub use chamfer::{chamfer_one_way, KdTree};
pub use mesh::TriangleMesh;
pub use plane::{fit_plane_3pts, intersect_three_planes, Plane};
pub use polygon::{
    convex_clip, point_in_polygon, polygon_intersection_area, segment_distance, signed_area,
    triangulate, Polygon3D, Vec2,
};
pub use voxel::{voxel_iou, voxelize, VoxelGrid};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Vec3 = nalgebra::Vector3<f64>;
pub type Mat3 = nalgebra::Matrix3<f64>;

/// Minimum triangle area below which a 3-point sample is degenerate.
pub const DEGENERATE_AREA: f64 = 1e-9;
/// Minimum |det| of three plane normals for a unique intersection.
pub const DEGENERATE_DET: f64 = 1e-6;

/// World up.
pub fn gravity_up() -> Vec3 {
    Vec3::new(0.0, 0.0, 1.0)
}

/// Rotation about `+z`.
pub fn yaw_rotation(yaw: f64) -> Mat3 {
    let (s, c) = yaw.sin_cos();
    Mat3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0)
}

/// Object placement: `p_world = R (s ∘ p_local) + t`.
#[derive(Clone, Debug, PartialEq)]
pub struct RigidPoseScale {
    pub rotation: Mat3,
    pub translation: Vec3,
    pub scale: Vec3,
}

impl RigidPoseScale {
    pub fn new(rotation: Mat3, translation: Vec3, scale: Vec3) -> Result<Self> {
        let det = rotation.determinant();
        if (det - 1.0).abs() > 1e-6 {
            return Err(Error::InvalidPose(format!("rotation determinant {det}")));
        }
        let ortho = (rotation.transpose() * rotation - Mat3::identity()).abs().max();
        if ortho > 1e-6 {
            return Err(Error::InvalidPose("rotation is not orthonormal".into()));
        }
        if scale.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
            return Err(Error::InvalidPose(format!("non-positive scale {scale:?}")));
        }
        if translation.iter().any(|t| !t.is_finite()) {
            return Err(Error::InvalidPose("non-finite translation".into()));
        }
        Ok(Self {
            rotation,
            translation,
            scale,
        })
    }

    pub fn identity() -> Self {
        Self {
            rotation: Mat3::identity(),
            translation: Vec3::zeros(),
            scale: Vec3::repeat(1.0),
        }
    }

    pub fn from_yaw(yaw: f64, translation: Vec3, scale: Vec3) -> Self {
        Self {
            rotation: yaw_rotation(yaw),
            translation,
            scale,
        }
    }

    pub fn apply(&self, p: &Vec3) -> Vec3 {
        self.rotation * p.component_mul(&self.scale) + self.translation
    }

    /// Heading of the local `+x` axis about gravity.
    pub fn yaw(&self) -> f64 {
        self.rotation[(1, 0)].atan2(self.rotation[(0, 0)])
    }

    /// Rotation and translation as a row-major 4x4 matrix (scale excluded).
    pub fn to_row_major(&self) -> [f64; 16] {
        let r = &self.rotation;
        let t = &self.translation;
        [
            r[(0, 0)],
            r[(0, 1)],
            r[(0, 2)],
            t.x,
            r[(1, 0)],
            r[(1, 1)],
            r[(1, 2)],
            t.y,
            r[(2, 0)],
            r[(2, 1)],
            r[(2, 2)],
            t.z,
            0.0,
            0.0,
            0.0,
            1.0,
        ]
    }

    pub fn from_row_major(m: &[f64; 16], scale: Vec3) -> Result<Self> {
        if m[12] != 0.0 || m[13] != 0.0 || m[14] != 0.0 || m[15] != 1.0 {
            return Err(Error::InvalidPose("last row must be 0 0 0 1".into()));
        }
        let rotation = Mat3::new(m[0], m[1], m[2], m[4], m[5], m[6], m[8], m[9], m[10]);
        Self::new(rotation, Vec3::new(m[3], m[7], m[11]), scale)
    }
}

/// Box with yaw-only orientation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrientedBox {
    pub center: Vec3,
    pub half_extents: Vec3,
    pub yaw: f64,
}

impl OrientedBox {
    pub fn new(center: Vec3, half_extents: Vec3, yaw: f64) -> Result<Self> {
        if half_extents.iter().any(|h| !(h.is_finite() && *h > 0.0)) {
            return Err(Error::InvalidPose(format!(
                "box half extents must be positive, got {half_extents:?}"
            )));
        }
        Ok(Self {
            center,
            half_extents,
            yaw,
        })
    }

    pub fn to_local(&self, p: &Vec3) -> Vec3 {
        yaw_rotation(-self.yaw) * (p - self.center)
    }

    pub fn contains(&self, p: &Vec3, slack: f64) -> bool {
        let q = self.to_local(p);
        (0..3).all(|k| q[k].abs() <= self.half_extents[k] * (1.0 + slack) + 1e-9)
    }

    pub fn corners(&self) -> [Vec3; 8] {
        let rot = yaw_rotation(self.yaw);
        let h = self.half_extents;
        let mut out = [Vec3::zeros(); 8];
        for (i, c) in out.iter_mut().enumerate() {
            let sx = if i & 1 == 0 { -1.0 } else { 1.0 };
            let sy = if i & 2 == 0 { -1.0 } else { 1.0 };
            let sz = if i & 4 == 0 { -1.0 } else { 1.0 };
            *c = self.center + rot * Vec3::new(sx * h.x, sy * h.y, sz * h.z);
        }
        out
    }

    pub fn volume(&self) -> f64 {
        8.0 * self.half_extents.x * self.half_extents.y * self.half_extents.z
    }

    /// Closed 12-triangle mesh of the box surface.
    pub fn to_mesh(&self) -> TriangleMesh {
        let unit = TriangleMesh::cuboid(-self.half_extents, self.half_extents);
        let pose = RigidPoseScale::from_yaw(self.yaw, self.center, Vec3::repeat(1.0));
        unit.transformed(&pose)
    }
}

/// Horizontal rectangle in world frame (table top, sofa seat).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HorizontalSurface {
    /// Center; `z` is the surface height.
    pub center: Vec3,
    pub half_extents: [f64; 2],
    pub yaw: f64,
}

impl HorizontalSurface {
    /// Coordinates of `p` in the rectangle frame (x, y only).
    pub fn local_xy(&self, p: &Vec3) -> [f64; 2] {
        let (s, c) = self.yaw.sin_cos();
        let dx = p.x - self.center.x;
        let dy = p.y - self.center.y;
        [c * dx + s * dy, -s * dx + c * dy]
    }

    /// Distance from the xy-projection of `p` to the nearest rectangle edge,
    /// or `None` when the projection falls outside the rectangle.
    pub fn inside_edge_distance(&self, p: &Vec3) -> Option<f64> {
        let [u, v] = self.local_xy(p);
        let du = self.half_extents[0] - u.abs();
        let dv = self.half_extents[1] - v.abs();
        if du < 0.0 || dv < 0.0 {
            None
        } else {
            Some(du.min(dv))
        }
    }

    pub fn shorter_side(&self) -> f64 {
        2.0 * self.half_extents[0].min(self.half_extents[1])
    }

    pub fn transformed(&self, pose: &RigidPoseScale) -> Self {
        let center = pose.apply(&self.center);
        Self {
            center,
            half_extents: [
                self.half_extents[0] * pose.scale.x,
                self.half_extents[1] * pose.scale.y,
            ],
            yaw: self.yaw + pose.yaw(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn pose_row_major_round_trip() {
        let pose =
            RigidPoseScale::from_yaw(0.7, Vec3::new(1.0, -2.0, 0.5), Vec3::new(1.1, 0.9, 1.0));
        let back = RigidPoseScale::from_row_major(&pose.to_row_major(), pose.scale).unwrap();
        assert_abs_diff_eq!(back.rotation, pose.rotation, epsilon = 1e-15);
        assert_eq!(back.translation, pose.translation);
        assert_abs_diff_eq!(back.yaw(), 0.7, epsilon = 1e-12);
    }

    #[test]
    fn pose_rejects_reflection_and_bad_scale() {
        let mut r = Mat3::identity();
        r[(2, 2)] = -1.0;
        assert!(RigidPoseScale::new(r, Vec3::zeros(), Vec3::repeat(1.0)).is_err());
        assert!(
            RigidPoseScale::new(Mat3::identity(), Vec3::zeros(), Vec3::new(1.0, 0.0, 1.0))
                .is_err()
        );
    }

    #[test]
    fn surface_edge_distance() {
        let s = HorizontalSurface {
            center: Vec3::new(0.0, 0.0, 0.75),
            half_extents: [0.5, 0.5],
            yaw: 0.0,
        };
        assert_abs_diff_eq!(s.inside_edge_distance(&Vec3::zeros()).unwrap(), 0.5);
        assert_abs_diff_eq!(
            s.inside_edge_distance(&Vec3::new(0.5, 0.0, 0.0)).unwrap(),
            0.0
        );
        assert!(s.inside_edge_distance(&Vec3::new(0.6, 0.0, 0.0)).is_none());
    }

    #[test]
    fn box_contains_its_corners() {
        let b = OrientedBox::new(Vec3::new(1.0, 2.0, 0.5), Vec3::new(0.3, 0.2, 0.5), 0.4).unwrap();
        for c in b.corners() {
            assert!(b.contains(&c, 0.0));
        }
        assert!(!b.contains(&Vec3::new(5.0, 2.0, 0.5), 0.05));
    }
}
