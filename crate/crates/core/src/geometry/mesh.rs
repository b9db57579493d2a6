use std::collections::HashMap;

use rand::Rng;

use super::{RigidPoseScale, Vec3};
use crate::error::{Error, Result};

/// Triangle soup with shared vertices.
#[derive(Clone, Debug, PartialEq)]
pub struct TriangleMesh {
    pub vertices: Vec<Vec3>,
    pub triangles: Vec<[u32; 3]>,
}

const MIN_TRIANGLE_AREA: f64 = 1e-12;

impl TriangleMesh {
    /// Checks indices and drops zero-area triangles.
    pub fn new(vertices: Vec<Vec3>, triangles: Vec<[u32; 3]>) -> Result<Self> {
        if vertices.iter().any(|v| v.iter().any(|c| !c.is_finite())) {
            return Err(Error::DegenerateMesh("non-finite vertex".into()));
        }
        let n = vertices.len();
        for (k, t) in triangles.iter().enumerate() {
            if t.iter().any(|&i| i as usize >= n) {
                return Err(Error::DegenerateMesh(format!(
                    "triangle {k} references a vertex out of range ({n} vertices)"
                )));
            }
        }
        let mut mesh = Self {
            vertices,
            triangles,
        };
        mesh.triangles.retain(|t| {
            let [a, b, c] = t.map(|i| mesh.vertices[i as usize]);
            0.5 * (b - a).cross(&(c - a)).norm() > MIN_TRIANGLE_AREA
        });
        if mesh.triangles.is_empty() {
            return Err(Error::DegenerateMesh("no non-degenerate triangles".into()));
        }
        Ok(mesh)
    }

    /// Axis-aligned box with outward-facing triangles.
    pub fn cuboid(min: Vec3, max: Vec3) -> Self {
        let vertices = (0..8)
            .map(|i| {
                Vec3::new(
                    if i & 1 == 0 { min.x } else { max.x },
                    if i & 2 == 0 { min.y } else { max.y },
                    if i & 4 == 0 { min.z } else { max.z },
                )
            })
            .collect();
        let triangles = vec![
            [0, 2, 1],
            [1, 2, 3],
            [4, 5, 6],
            [5, 7, 6],
            [0, 1, 4],
            [1, 5, 4],
            [2, 6, 3],
            [3, 6, 7],
            [0, 4, 2],
            [2, 4, 6],
            [1, 3, 5],
            [3, 7, 5],
        ];
        Self {
            vertices,
            triangles,
        }
    }

    pub fn merge(parts: &[TriangleMesh]) -> Self {
        let mut vertices = Vec::new();
        let mut triangles = Vec::new();
        for part in parts {
            let base = vertices.len() as u32;
            vertices.extend_from_slice(&part.vertices);
            triangles.extend(part.triangles.iter().map(|t| t.map(|i| i + base)));
        }
        Self {
            vertices,
            triangles,
        }
    }

    pub fn transformed(&self, pose: &RigidPoseScale) -> Self {
        let mut out = Self {
            vertices: self.vertices.iter().map(|v| pose.apply(v)).collect(),
            triangles: self.triangles.clone(),
        };
        // A mirroring scale would flip orientation; scales are positive so
        // this never happens, but keep the winding outward regardless.
        if pose.scale.x * pose.scale.y * pose.scale.z < 0.0 {
            for t in &mut out.triangles {
                t.swap(1, 2);
            }
        }
        out
    }

    pub fn triangle(&self, k: usize) -> [Vec3; 3] {
        self.triangles[k].map(|i| self.vertices[i as usize])
    }

    pub fn aabb(&self) -> (Vec3, Vec3) {
        let mut lo = Vec3::repeat(f64::INFINITY);
        let mut hi = Vec3::repeat(f64::NEG_INFINITY);
        for v in &self.vertices {
            lo = lo.inf(v);
            hi = hi.sup(v);
        }
        (lo, hi)
    }

    pub fn area(&self) -> f64 {
        (0..self.triangles.len())
            .map(|k| {
                let [a, b, c] = self.triangle(k);
                0.5 * (b - a).cross(&(c - a)).norm()
            })
            .sum()
    }

    /// Signed enclosed volume; positive for outward winding.
    pub fn volume(&self) -> f64 {
        (0..self.triangles.len())
            .map(|k| {
                let [a, b, c] = self.triangle(k);
                a.dot(&b.cross(&c)) / 6.0
            })
            .sum()
    }

    /// Every edge is shared by an even number of triangles, after welding
    /// coincident vertices.
    pub fn is_closed(&self) -> bool {
        self.welded().is_closed_exact()
    }

    fn is_closed_exact(&self) -> bool {
        let mut counts: HashMap<(u32, u32), i32> = HashMap::new();
        for t in &self.triangles {
            for e in 0..3 {
                let (a, b) = (t[e], t[(e + 1) % 3]);
                *counts.entry((a.min(b), a.max(b))).or_insert(0) += 1;
            }
        }
        counts.values().all(|c| c % 2 == 0)
    }

    fn welded(&self) -> Self {
        let mut map: HashMap<[u64; 3], u32> = HashMap::new();
        let mut remap = Vec::with_capacity(self.vertices.len());
        let mut vertices = Vec::new();
        for v in &self.vertices {
            let key = [v.x.to_bits(), v.y.to_bits(), v.z.to_bits()];
            let id = *map.entry(key).or_insert_with(|| {
                vertices.push(*v);
                (vertices.len() - 1) as u32
            });
            remap.push(id);
        }
        Self {
            vertices,
            triangles: self
                .triangles
                .iter()
                .map(|t| t.map(|i| remap[i as usize]))
                .collect(),
        }
    }

    /// Area-weighted uniform surface samples.
    pub fn sample_surface<R: Rng>(&self, count: usize, rng: &mut R) -> Vec<Vec3> {
        let mut cdf = Vec::with_capacity(self.triangles.len());
        let mut total = 0.0;
        for k in 0..self.triangles.len() {
            let [a, b, c] = self.triangle(k);
            total += 0.5 * (b - a).cross(&(c - a)).norm();
            cdf.push(total);
        }
        if total <= 0.0 {
            return Vec::new();
        }
        (0..count)
            .map(|_| {
                let r = rng.random::<f64>() * total;
                let k = cdf.partition_point(|&c| c < r).min(cdf.len() - 1);
                let [a, b, c] = self.triangle(k);
                let (mut u, mut v) = (rng.random::<f64>(), rng.random::<f64>());
                if u + v > 1.0 {
                    u = 1.0 - u;
                    v = 1.0 - v;
                }
                a + (b - a) * u + (c - a) * v
            })
            .collect()
    }
}
