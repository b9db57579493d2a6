use serde::{Deserialize, Serialize};

use super::{Mat3, Vec2, Vec3, DEGENERATE_AREA, DEGENERATE_DET};
use crate::error::{Error, Result};

/// The set `{p : normal · p = offset}` with a unit normal.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Plane {
    pub normal: Vec3,
    pub offset: f64,
}

impl Plane {
    /// Normalizes `normal`; `offset` is scaled accordingly.
    pub fn new(normal: Vec3, offset: f64) -> Result<Self> {
        let len = normal.norm();
        if !(len.is_finite() && len > 1e-12) || !offset.is_finite() {
            return Err(Error::InvalidPolygon("plane normal must be non-zero".into()));
        }
        Ok(Self {
            normal: normal / len,
            offset: offset / len,
        })
    }

    pub fn through_point(normal: Vec3, point: &Vec3) -> Result<Self> {
        let len = normal.norm();
        if !(len.is_finite() && len > 1e-12) {
            return Err(Error::InvalidPolygon("plane normal must be non-zero".into()));
        }
        let n = normal / len;
        Ok(Self {
            normal: n,
            offset: n.dot(point),
        })
    }

    pub fn signed_distance(&self, p: &Vec3) -> f64 {
        self.normal.dot(p) - self.offset
    }

    pub fn distance(&self, p: &Vec3) -> f64 {
        self.signed_distance(p).abs()
    }

    pub fn project(&self, p: &Vec3) -> Vec3 {
        p - self.normal * self.signed_distance(p)
    }

    /// Orientation rule: `normal · z ≥ 0`; when the normal is horizontal,
    /// `x > 0`, then `y > 0`.
    pub fn canonicalized(&self) -> Self {
        let n = self.normal;
        let flip = if n.z != 0.0 {
            n.z < 0.0
        } else if n.x != 0.0 {
            n.x < 0.0
        } else {
            n.y < 0.0
        };
        if flip {
            Self {
                normal: -n,
                offset: -self.offset,
            }
        } else {
            *self
        }
    }

    /// Unoriented angle between the two normals, in radians.
    pub fn angle_to(&self, other: &Plane) -> f64 {
        self.normal.dot(&other.normal).abs().min(1.0).acos()
    }

    /// Orthonormal in-plane axes `(u, v)` with `u × v = normal`.
    ///
    /// For non-horizontal planes `u` is horizontal.
    pub fn basis(&self) -> (Vec3, Vec3) {
        let n = self.normal;
        let helper = if n.z.abs() < 0.9 {
            Vec3::new(0.0, 0.0, 1.0)
        } else {
            Vec3::new(1.0, 0.0, 0.0)
        };
        let u = helper.cross(&n).normalize();
        let v = n.cross(&u);
        (u, v)
    }

    pub fn to_2d(&self, p: &Vec3) -> Vec2 {
        let (u, v) = self.basis();
        Vec2::new(u.dot(p), v.dot(p))
    }

    pub fn from_2d(&self, q: &Vec2) -> Vec3 {
        let (u, v) = self.basis();
        u * q.x + v * q.y + self.normal * self.offset
    }
}

/// Plane through three points, canonically oriented.
pub fn fit_plane_3pts(p1: &Vec3, p2: &Vec3, p3: &Vec3) -> Result<Plane> {
    let cross = (p2 - p1).cross(&(p3 - p1));
    let area = 0.5 * cross.norm();
    if !(area > DEGENERATE_AREA) {
        return Err(Error::DegenerateSample);
    }
    let n = cross / (2.0 * area);
    let centroid = (p1 + p2 + p3) / 3.0;
    Ok(Plane {
        normal: n,
        offset: n.dot(&centroid),
    }
    .canonicalized())
}

/// Unique intersection point, or `None` when the normals are (nearly)
/// linearly dependent.
pub fn intersect_three_planes(a: &Plane, b: &Plane, c: &Plane) -> Option<Vec3> {
    let m = Mat3::from_rows(&[
        a.normal.transpose(),
        b.normal.transpose(),
        c.normal.transpose(),
    ]);
    if m.determinant().abs() <= DEGENERATE_DET {
        return None;
    }
    let rhs = Vec3::new(a.offset, b.offset, c.offset);
    m.lu().solve(&rhs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn axis_plane(axis: usize, offset: f64) -> Plane {
        let mut n = Vec3::zeros();
        n[axis] = 1.0;
        Plane { normal: n, offset }
    }

    #[test]
    fn fit_xy_plane() {
        let p = fit_plane_3pts(
            &Vec3::zeros(),
            &Vec3::new(1.0, 0.0, 0.0),
            &Vec3::new(0.0, 1.0, 0.0),
        )
        .unwrap();
        assert_eq!(p.normal, Vec3::new(0.0, 0.0, 1.0));
        assert_eq!(p.offset, 0.0);
    }

    #[test]
    fn fit_orientation_is_canonical() {
        // Clockwise order still yields an upward normal.
        let p = fit_plane_3pts(
            &Vec3::new(0.0, 0.0, 2.0),
            &Vec3::new(0.0, 1.0, 2.0),
            &Vec3::new(1.0, 0.0, 2.0),
        )
        .unwrap();
        assert_abs_diff_eq!(p.normal, Vec3::new(0.0, 0.0, 1.0), epsilon = 1e-15);
        assert_abs_diff_eq!(p.offset, 2.0, epsilon = 1e-12);
        // Vertical plane: tie-broken by +x.
        let w = fit_plane_3pts(
            &Vec3::new(3.0, 0.0, 0.0),
            &Vec3::new(3.0, 0.0, 1.0),
            &Vec3::new(3.0, 1.0, 0.0),
        )
        .unwrap();
        assert_abs_diff_eq!(w.normal, Vec3::new(1.0, 0.0, 0.0), epsilon = 1e-15);
        assert_abs_diff_eq!(w.offset, 3.0, epsilon = 1e-12);
    }

    #[test]
    fn fit_collinear_is_degenerate() {
        let r = fit_plane_3pts(
            &Vec3::zeros(),
            &Vec3::new(1.0, 1.0, 1.0),
            &Vec3::new(2.0, 2.0, 2.0),
        );
        assert!(matches!(r, Err(Error::DegenerateSample)));
    }

    #[test]
    fn three_axis_planes() {
        let p = intersect_three_planes(&axis_plane(0, 0.0), &axis_plane(1, 0.0), &axis_plane(2, 0.0));
        assert_eq!(p, Some(Vec3::zeros()));
        let q = intersect_three_planes(&axis_plane(0, 1.0), &axis_plane(1, 2.0), &axis_plane(2, 3.0))
            .unwrap();
        assert_abs_diff_eq!(q, Vec3::new(1.0, 2.0, 3.0), epsilon = 1e-12);
    }

    #[test]
    fn parallel_planes_have_no_corner() {
        let r = intersect_three_planes(&axis_plane(0, 0.0), &axis_plane(0, 2.0), &axis_plane(2, 0.0));
        assert!(r.is_none());
    }

    #[test]
    fn basis_round_trip() {
        let p = Plane::new(Vec3::new(1.0, 2.0, 0.5), 1.5).unwrap();
        let x = Vec3::new(0.3, -0.2, 4.0);
        let back = p.from_2d(&p.to_2d(&x));
        assert_abs_diff_eq!(back, p.project(&x), epsilon = 1e-12);
        let (u, v) = p.basis();
        assert_abs_diff_eq!(u.cross(&v), p.normal, epsilon = 1e-12);
    }

    proptest! {
        #[test]
        fn fitted_plane_contains_its_samples(
            a in prop::array::uniform3(-10.0f64..10.0),
            b in prop::array::uniform3(-10.0f64..10.0),
            c in prop::array::uniform3(-10.0f64..10.0),
        ) {
            let (a, b, c) = (Vec3::from(a), Vec3::from(b), Vec3::from(c));
            if let Ok(plane) = fit_plane_3pts(&a, &b, &c) {
                prop_assert!((plane.normal.norm() - 1.0).abs() <= 1e-9);
                for p in [a, b, c] {
                    prop_assert!(plane.distance(&p) <= 1e-9);
                }
            }
        }
    }
}
