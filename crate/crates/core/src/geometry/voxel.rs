use super::{RigidPoseScale, TriangleMesh, Vec3};
use crate::error::{Error, Result};

/// Dense occupancy grid on the global lattice `index * voxel_size`.
///
/// Voxel `(i, j, k)` spans `[(origin + ijk) * s, (origin + ijk + 1) * s)`.
#[derive(Clone, Debug, PartialEq)]
pub struct VoxelGrid {
    pub origin_index: [i64; 3],
    pub voxel_size: f64,
    pub dims: [usize; 3],
    pub occupancy: Vec<bool>,
    occupied: usize,
}

impl VoxelGrid {
    pub fn empty(origin_index: [i64; 3], voxel_size: f64, dims: [usize; 3]) -> Self {
        Self {
            origin_index,
            voxel_size,
            dims,
            occupancy: vec![false; dims[0] * dims[1] * dims[2]],
            occupied: 0,
        }
    }

    pub fn origin(&self) -> Vec3 {
        Vec3::new(
            self.origin_index[0] as f64,
            self.origin_index[1] as f64,
            self.origin_index[2] as f64,
        ) * self.voxel_size
    }

    pub fn occupied_count(&self) -> usize {
        self.occupied
    }

    pub fn volume(&self) -> f64 {
        self.occupied as f64 * self.voxel_size.powi(3)
    }

    fn flat(&self, i: usize, j: usize, k: usize) -> usize {
        (k * self.dims[1] + j) * self.dims[0] + i
    }

    pub fn set(&mut self, i: usize, j: usize, k: usize, value: bool) {
        let f = self.flat(i, j, k);
        if self.occupancy[f] != value {
            self.occupancy[f] = value;
            if value {
                self.occupied += 1;
            } else {
                self.occupied -= 1;
            }
        }
    }

    pub fn get(&self, i: usize, j: usize, k: usize) -> bool {
        self.occupancy[self.flat(i, j, k)]
    }

    /// Occupancy at a global lattice index; outside the grid is empty.
    pub fn get_global(&self, g: [i64; 3]) -> bool {
        let mut local = [0usize; 3];
        for a in 0..3 {
            let d = g[a] - self.origin_index[a];
            if d < 0 || d >= self.dims[a] as i64 {
                return false;
            }
            local[a] = d as usize;
        }
        self.get(local[0], local[1], local[2])
    }

    pub fn center_of_global(&self, g: [i64; 3]) -> Vec3 {
        Vec3::new(
            (g[0] as f64 + 0.5) * self.voxel_size,
            (g[1] as f64 + 0.5) * self.voxel_size,
            (g[2] as f64 + 0.5) * self.voxel_size,
        )
    }

    /// Global indices of occupied voxels, x fastest.
    pub fn occupied_indices(&self) -> impl Iterator<Item = [i64; 3]> + '_ {
        let [dx, dy, _] = self.dims;
        self.occupancy
            .iter()
            .enumerate()
            .filter(|(_, &o)| o)
            .map(move |(f, _)| {
                let i = f % dx;
                let j = (f / dx) % dy;
                let k = f / (dx * dy);
                [
                    self.origin_index[0] + i as i64,
                    self.origin_index[1] + j as i64,
                    self.origin_index[2] + k as i64,
                ]
            })
    }

    pub fn occupied_centers(&self) -> impl Iterator<Item = Vec3> + '_ {
        self.occupied_indices().map(|g| self.center_of_global(g))
    }

    /// Global index ranges `[lo, hi)` shared by both grids, if any.
    fn overlap(&self, other: &VoxelGrid) -> Option<[(i64, i64); 3]> {
        let mut out = [(0, 0); 3];
        for a in 0..3 {
            let lo = self.origin_index[a].max(other.origin_index[a]);
            let hi = (self.origin_index[a] + self.dims[a] as i64)
                .min(other.origin_index[a] + other.dims[a] as i64);
            if lo >= hi {
                return None;
            }
            out[a] = (lo, hi);
        }
        Some(out)
    }

    /// Global indices occupied in both grids.
    pub fn intersection_indices(&self, other: &VoxelGrid) -> Vec<[i64; 3]> {
        let mut out = Vec::new();
        let Some(r) = self.overlap(other) else {
            return out;
        };
        for k in r[2].0..r[2].1 {
            for j in r[1].0..r[1].1 {
                for i in r[0].0..r[0].1 {
                    if self.get_global([i, j, k]) && other.get_global([i, j, k]) {
                        out.push([i, j, k]);
                    }
                }
            }
        }
        out
    }

    pub fn intersection_count(&self, other: &VoxelGrid) -> usize {
        let Some(r) = self.overlap(other) else {
            return 0;
        };
        let mut n = 0;
        for k in r[2].0..r[2].1 {
            for j in r[1].0..r[1].1 {
                for i in r[0].0..r[0].1 {
                    if self.get_global([i, j, k]) && other.get_global([i, j, k]) {
                        n += 1;
                    }
                }
            }
        }
        n
    }
}

/// Rasterizes a posed mesh into a lattice-aligned occupancy grid.
///
/// Closed meshes: a voxel is occupied when its center has non-zero winding
/// number along a vertical ray. Open meshes fall back to a surface shell.
pub fn voxelize(mesh: &TriangleMesh, pose: &RigidPoseScale, voxel_size: f64) -> Result<VoxelGrid> {
    if !(voxel_size.is_finite() && voxel_size > 0.0) {
        return Err(Error::Config(format!("voxel size {voxel_size} must be positive")));
    }
    if mesh.triangles.is_empty() || mesh.vertices.is_empty() {
        return Err(Error::DegenerateMesh("mesh has no triangles".into()));
    }
    let posed = mesh.transformed(pose);
    let (lo, hi) = posed.aabb();
    let lo_idx = [0, 1, 2].map(|a| ((lo[a] / voxel_size).floor() as i64).saturating_sub(1));
    let hi_idx = [0, 1, 2].map(|a| ((hi[a] / voxel_size).floor() as i64).saturating_add(1));
    let span = [0, 1, 2].map(|a| hi_idx[a] as i128 - lo_idx[a] as i128 + 1);
    let cells: f64 = span.iter().map(|&d| d as f64).product();
    let dims = span.map(|d| d.clamp(0, MAX_CELLS as i128) as usize);
    if cells > MAX_CELLS as f64 {
        return Err(Error::Config(format!(
            "voxel grid {dims:?} at size {voxel_size} exceeds {MAX_CELLS} cells"
        )));
    }
    let mut grid = VoxelGrid::empty(lo_idx, voxel_size, dims);
    if posed.is_closed() {
        fill_winding(&posed, &mut grid);
    } else {
        fill_shell(&posed, &mut grid);
    }
    Ok(grid)
}

/// Largest grid `voxelize` will allocate.
pub const MAX_CELLS: usize = 1 << 27;

// Irrational offsets keep rays off shared edges and vertices.
const RAY_JITTER: [f64; 2] = [1.234_567e-7, 0.765_432_1e-7];

fn fill_winding(mesh: &TriangleMesh, grid: &mut VoxelGrid) {
    let s = grid.voxel_size;
    let [dx, dy, dz] = grid.dims;
    let [ox, oy, oz] = grid.origin_index;
    // Per column: (z, +1 entering / -1 leaving) crossings.
    let mut columns: Vec<Vec<(f64, i32)>> = vec![Vec::new(); dx * dy];
    for t in 0..mesh.triangles.len() {
        let [a, b, c] = mesh.triangle(t);
        let area2 = (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x);
        if area2 == 0.0 {
            continue;
        }
        // Normal z has the sign of area2; a downward face is an entry.
        let sign = if area2 < 0.0 { 1 } else { -1 };
        let xmin = a.x.min(b.x).min(c.x);
        let xmax = a.x.max(b.x).max(c.x);
        let ymin = a.y.min(b.y).min(c.y);
        let ymax = a.y.max(b.y).max(c.y);
        let i0 = ((xmin / s - 0.5).floor() as i64 - ox).max(0);
        let i1 = ((xmax / s - 0.5).ceil() as i64 - ox).min(dx as i64 - 1);
        let j0 = ((ymin / s - 0.5).floor() as i64 - oy).max(0);
        let j1 = ((ymax / s - 0.5).ceil() as i64 - oy).min(dy as i64 - 1);
        for j in j0..=j1 {
            let py = (oy + j) as f64 * s + 0.5 * s + RAY_JITTER[1] * s;
            for i in i0..=i1 {
                let px = (ox + i) as f64 * s + 0.5 * s + RAY_JITTER[0] * s;
                let w0 = (b.x - px) * (c.y - py) - (b.y - py) * (c.x - px);
                let w1 = (c.x - px) * (a.y - py) - (c.y - py) * (a.x - px);
                let w2 = (a.x - px) * (b.y - py) - (a.y - py) * (b.x - px);
                let inside = if area2 > 0.0 {
                    w0 >= 0.0 && w1 >= 0.0 && w2 >= 0.0
                } else {
                    w0 <= 0.0 && w1 <= 0.0 && w2 <= 0.0
                };
                if inside {
                    let z = (w0 * a.z + w1 * b.z + w2 * c.z) / area2;
                    columns[j as usize * dx + i as usize].push((z, sign));
                }
            }
        }
    }
    for j in 0..dy {
        for i in 0..dx {
            let col = &mut columns[j * dx + i];
            if col.is_empty() {
                continue;
            }
            col.sort_by(|p, q| p.0.total_cmp(&q.0));
            let mut winding = 0;
            let mut next = 0;
            for k in 0..dz {
                let zc = (oz + k as i64) as f64 * s + 0.5 * s;
                while next < col.len() && col[next].0 < zc {
                    winding += col[next].1;
                    next += 1;
                }
                if winding != 0 {
                    grid.set(i, j, k, true);
                }
            }
        }
    }
}

fn fill_shell(mesh: &TriangleMesh, grid: &mut VoxelGrid) {
    let s = grid.voxel_size;
    let step = s / 3.0;
    for t in 0..mesh.triangles.len() {
        let [a, b, c] = mesh.triangle(t);
        let n = (((b - a).norm().max((c - a).norm())) / step).ceil().max(1.0) as usize;
        for u in 0..=n {
            for v in 0..=(n - u) {
                let p = a + (b - a) * (u as f64 / n as f64) + (c - a) * (v as f64 / n as f64);
                let g = [0, 1, 2].map(|ax| (p[ax] / s).floor() as i64);
                let local = [0, 1, 2].map(|ax| g[ax] - grid.origin_index[ax]);
                if (0..3).all(|ax| local[ax] >= 0 && local[ax] < grid.dims[ax] as i64) {
                    grid.set(local[0] as usize, local[1] as usize, local[2] as usize, true);
                }
            }
        }
    }
}

/// `|A ∩ B| / |A ∪ B|` on a shared lattice.
pub fn voxel_iou(a: &VoxelGrid, b: &VoxelGrid) -> Result<f64> {
    if (a.voxel_size - b.voxel_size).abs() > 1e-9 {
        return Err(Error::GridMismatch(a.voxel_size, b.voxel_size));
    }
    let inter = a.intersection_count(b);
    let union = a.occupied + b.occupied - inter;
    if union == 0 {
        return Err(Error::EmptyUnion);
    }
    Ok(inter as f64 / union as f64)
}
