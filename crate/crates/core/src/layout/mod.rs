//! Layout proposal generation: planes, then corners from plane triples,
//! edges between corners sharing two planes, and wall polygons from cycles.

mod ransac;

pub use ransac::{detect_planes, DetectedPlane, PlaneSet, RansacParams, StageParams};

use crate::error::{Error, Result};
use crate::geometry::{gravity_up, intersect_three_planes, Plane, Polygon3D, Vec2, Vec3};
use crate::io::CloudPoint;
use crate::proposals::{Category, LayoutProposal};

/// Margin around the cloud bounds inside which corners are kept.
pub const CORNER_MARGIN: f64 = 0.5;
/// Longest wall cycle considered.
pub const MAX_CYCLE: usize = 8;
/// Smallest wall polygon area, m².
pub const MIN_POLYGON_AREA: f64 = 0.05;
/// Gap closed when chaining wall base edges into a floor loop.
pub const FLOOR_GAP: f64 = 0.05;

const FACE_DEDUP_DEG: f64 = 5.0;
const FACE_DEDUP_DIST: f64 = 0.15;
const CORNER_MERGE: f64 = 1e-3;

#[derive(Clone, Debug, PartialEq)]
pub struct Corner {
    pub position: Vec3,
    /// Sorted plane indices meeting here.
    pub planes: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Edge {
    pub a: usize,
    pub b: usize,
    /// Sorted planes shared by both corners.
    pub planes: Vec<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PlaneRole {
    Wall,
    Floor,
    /// Bounding-box top face.
    Ceiling,
}

/// Every plane used to build corners, with its role.
#[derive(Clone, Debug, PartialEq)]
pub struct LayoutPlanes {
    pub planes: Vec<Plane>,
    pub roles: Vec<PlaneRole>,
}

pub fn cloud_bounds(cloud: &[CloudPoint]) -> Option<(Vec3, Vec3)> {
    let first = cloud.first()?.position;
    Some(cloud.iter().fold((first, first), |(lo, hi), p| {
        (lo.inf(&p.position), hi.sup(&p.position))
    }))
}

/// Detected planes plus bounding-box faces not already covered by one.
pub fn with_bounding_faces(set: &PlaneSet, lo: &Vec3, hi: &Vec3) -> LayoutPlanes {
    let floor_cos = 15f64.to_radians().cos();
    let mut planes = Vec::new();
    let mut roles = Vec::new();
    for (k, d) in set.planes.iter().enumerate() {
        planes.push(d.plane);
        roles.push(if Some(k) == set.floor {
            PlaneRole::Floor
        } else if d.plane.normal.dot(&gravity_up()).abs() >= floor_cos {
            PlaneRole::Ceiling
        } else {
            PlaneRole::Wall
        });
    }
    let center = (lo + hi) * 0.5;
    let dedup_cos = FACE_DEDUP_DEG.to_radians().cos();
    for axis in 0..3 {
        for (side, value) in [(-1.0, lo[axis]), (1.0, hi[axis])] {
            let mut normal = Vec3::zeros();
            normal[axis] = side;
            let mut face_center = center;
            face_center[axis] = value;
            let covered = planes
                .iter()
                .any(|p| p.normal.dot(&normal).abs() >= dedup_cos && p.distance(&face_center) <= FACE_DEDUP_DIST);
            if covered {
                continue;
            }
            let role = match (axis, side > 0.0) {
                (2, true) => PlaneRole::Ceiling,
                (2, false) if !roles.contains(&PlaneRole::Floor) => PlaneRole::Floor,
                (2, false) => continue,
                _ => PlaneRole::Wall,
            };
            planes.push(Plane {
                normal,
                offset: side * value,
            });
            roles.push(role);
        }
    }
    LayoutPlanes { planes, roles }
}

/// Intersections of plane triples inside the bounds grown by [`CORNER_MARGIN`].
pub fn build_corners(planes: &[Plane], lo: &Vec3, hi: &Vec3) -> Vec<Corner> {
    let lo = lo - Vec3::repeat(CORNER_MARGIN);
    let hi = hi + Vec3::repeat(CORNER_MARGIN);
    let mut corners: Vec<Corner> = Vec::new();
    let n = planes.len();
    for i in 0..n {
        for j in (i + 1)..n {
            for k in (j + 1)..n {
                let Some(p) = intersect_three_planes(&planes[i], &planes[j], &planes[k]) else {
                    continue;
                };
                if (0..3).any(|a| p[a] < lo[a] || p[a] > hi[a]) {
                    continue;
                }
                match corners.iter_mut().find(|c| (c.position - p).norm() <= CORNER_MERGE) {
                    Some(c) => {
                        for id in [i, j, k] {
                            if !c.planes.contains(&id) {
                                c.planes.push(id);
                            }
                        }
                        c.planes.sort_unstable();
                    }
                    None => corners.push(Corner {
                        position: p,
                        planes: vec![i, j, k],
                    }),
                }
            }
        }
    }
    corners
}

/// One edge per corner pair sharing at least two planes.
pub fn build_edges(corners: &[Corner]) -> Vec<Edge> {
    let mut edges = Vec::new();
    for a in 0..corners.len() {
        for b in (a + 1)..corners.len() {
            let shared: Vec<usize> = corners[a]
                .planes
                .iter()
                .copied()
                .filter(|p| corners[b].planes.contains(p))
                .collect();
            if shared.len() >= 2 && (corners[a].position - corners[b].position).norm() > CORNER_MERGE {
                edges.push(Edge { a, b, planes: shared });
            }
        }
    }
    edges
}

/// Simple cycles of length `3..=max_len` in an undirected graph over
/// `0..n`, each reported once starting at its smallest vertex.
pub fn simple_cycles(n: usize, adj: &[Vec<usize>], max_len: usize) -> Vec<Vec<usize>> {
    fn dfs(
        start: usize,
        adj: &[Vec<usize>],
        max_len: usize,
        path: &mut Vec<usize>,
        on_path: &mut [bool],
        out: &mut Vec<Vec<usize>>,
    ) {
        let v = *path.last().expect("nonempty path");
        for &w in &adj[v] {
            if w == start && path.len() >= 3 && path[1] < path[path.len() - 1] {
                out.push(path.clone());
            } else if w > start && !on_path[w] && path.len() < max_len {
                on_path[w] = true;
                path.push(w);
                dfs(start, adj, max_len, path, on_path, out);
                path.pop();
                on_path[w] = false;
            }
        }
    }
    let mut out = Vec::new();
    let mut on_path = vec![false; n];
    for s in 0..n {
        on_path[s] = true;
        let mut path = vec![s];
        dfs(s, adj, max_len, &mut path, &mut on_path, &mut out);
        on_path[s] = false;
    }
    out
}

fn has_collinear_run(pts: &[Vec2]) -> bool {
    let n = pts.len();
    (0..n).any(|i| {
        let a = pts[(i + n - 1) % n];
        let b = pts[i];
        let c = pts[(i + 1) % n];
        let (u, v) = (b - a, c - b);
        let cross = u.x * v.y - u.y * v.x;
        cross.abs() <= 1e-6 * u.norm() * v.norm()
    })
}

/// Wall polygons from the cycles of each wall plane's edge graph.
pub fn build_polygons(planes: &LayoutPlanes, corners: &[Corner], edges: &[Edge]) -> Vec<LayoutProposal> {
    let mut out = Vec::new();
    for (pid, plane) in planes.planes.iter().enumerate() {
        if planes.roles[pid] != PlaneRole::Wall {
            continue;
        }
        let local: Vec<usize> = (0..corners.len()).filter(|&c| corners[c].planes.contains(&pid)).collect();
        let index_of = |c: usize| local.binary_search(&c).ok();
        let mut adj = vec![Vec::new(); local.len()];
        let mut edge_at = std::collections::HashMap::new();
        for (eid, e) in edges.iter().enumerate() {
            if !e.planes.contains(&pid) {
                continue;
            }
            if let (Some(a), Some(b)) = (index_of(e.a), index_of(e.b)) {
                adj[a].push(b);
                adj[b].push(a);
                edge_at.insert((a.min(b), a.max(b)), eid);
            }
        }
        for a in &mut adj {
            a.sort_unstable();
        }
        for cycle in simple_cycles(local.len(), &adj, MAX_CYCLE) {
            let verts: Vec<Vec3> = cycle.iter().map(|&l| plane.project(&corners[local[l]].position)).collect();
            let flat: Vec<Vec2> = verts.iter().map(|v| plane.to_2d(v)).collect();
            if has_collinear_run(&flat) {
                continue;
            }
            let Ok(polygon) = Polygon3D::new(*plane, verts) else { continue };
            if polygon.area() < MIN_POLYGON_AREA {
                continue;
            }
            let m = cycle.len();
            let edge_ids: Vec<usize> = (0..m)
                .map(|i| {
                    let (a, b) = (cycle[i], cycle[(i + 1) % m]);
                    edge_at[&(a.min(b), a.max(b))]
                })
                .collect();
            if let Ok(l) = LayoutProposal::new(Category::Wall, polygon, pid, edge_ids) {
                out.push(l);
            }
        }
    }
    out
}

/// Everything the layout pipeline derives from one cloud.
#[derive(Clone, Debug)]
pub struct LayoutCandidates {
    pub detected: PlaneSet,
    pub planes: LayoutPlanes,
    pub corners: Vec<Corner>,
    pub edges: Vec<Edge>,
    pub walls: Vec<LayoutProposal>,
}

/// Layout points only: wall and floor labels, or every point when unlabeled.
pub fn layout_points(cloud: &[CloudPoint]) -> Vec<CloudPoint> {
    cloud
        .iter()
        .filter(|p| match p.label.and_then(|l| usize::try_from(l).ok()).and_then(Category::from_index) {
            Some(c) => c.is_layout(),
            None => p.label.is_none(),
        })
        .cloned()
        .collect()
}

/// Planes, corners, edges and wall polygons from a labeled cloud.
pub fn layout_candidates(cloud: &[CloudPoint], params: &RansacParams, seed: u64) -> Result<LayoutCandidates> {
    let points = layout_points(cloud);
    let (lo, hi) = cloud_bounds(&points).ok_or(Error::EmptyInput("layout point cloud"))?;
    let detected = detect_planes(&points, params, seed)?;
    let planes = with_bounding_faces(&detected, &lo, &hi);
    let corners = build_corners(&planes.planes, &lo, &hi);
    let edges = build_edges(&corners);
    let walls = build_polygons(&planes, &corners, &edges);
    Ok(LayoutCandidates {
        detected,
        planes,
        corners,
        edges,
        walls,
    })
}

/// Endpoints of the wall's edge lying on the floor plane, if any.
fn base_segment(wall: &LayoutProposal, floor: &Plane) -> Option<(Vec3, Vec3)> {
    let near: Vec<Vec3> = wall
        .polygon
        .vertices
        .iter()
        .filter(|v| floor.distance(v) <= FLOOR_GAP)
        .map(|v| floor.project(v))
        .collect();
    let (u, _) = wall.polygon.plane.basis();
    let lo = near.iter().min_by(|a, b| u.dot(a).total_cmp(&u.dot(b)))?;
    let hi = near.iter().max_by(|a, b| u.dot(a).total_cmp(&u.dot(b)))?;
    ((hi - lo).norm() > FLOOR_GAP).then_some((*lo, *hi))
}

/// Floor polygon bounded by the base edges of `walls`, which must chain
/// into one closed loop within [`FLOOR_GAP`].
pub fn floor_from_walls(walls: &[&LayoutProposal], floor: &Plane, plane_id: usize) -> Result<LayoutProposal> {
    if walls.len() < 3 {
        return Err(Error::UnclosedWallLoop { gap: f64::INFINITY });
    }
    let mut segs = Vec::with_capacity(walls.len());
    for w in walls {
        segs.push(base_segment(w, floor).ok_or(Error::UnclosedWallLoop { gap: f64::INFINITY })?);
    }
    let mut used = vec![false; segs.len()];
    used[0] = true;
    let start = segs[0].0;
    let mut end = segs[0].1;
    let mut junctions = Vec::with_capacity(segs.len());
    for _ in 1..segs.len() {
        let mut best: Option<(usize, bool, f64)> = None;
        for (k, (a, b)) in segs.iter().enumerate() {
            if used[k] {
                continue;
            }
            for (flip, p) in [(false, a), (true, b)] {
                let d = (p - end).norm();
                if best.is_none_or(|(_, _, bd)| d < bd) {
                    best = Some((k, flip, d));
                }
            }
        }
        let (k, flip, d) = best.expect("unused segment remains");
        if d > FLOOR_GAP {
            return Err(Error::UnclosedWallLoop { gap: d });
        }
        used[k] = true;
        let (a, b) = if flip { (segs[k].1, segs[k].0) } else { segs[k] };
        junctions.push((end + a) * 0.5);
        end = b;
    }
    let gap = (end - start).norm();
    if gap > FLOOR_GAP {
        return Err(Error::UnclosedWallLoop { gap });
    }
    junctions.push((end + start) * 0.5);
    let verts: Vec<Vec3> = junctions.iter().map(|p| floor.project(p)).collect();
    let polygon = Polygon3D::new(*floor, verts)?;
    let mut edge_ids: Vec<usize> = walls.iter().flat_map(|w| w.edge_ids.iter().copied()).collect();
    edge_ids.sort_unstable();
    edge_ids.dedup();
    LayoutProposal::new(Category::Floor, polygon, plane_id, edge_ids)
}

/// Distinct polygon vertices of `layouts`, merged within 1 cm.
pub fn layout_corners(layouts: &[&LayoutProposal]) -> Vec<Vec3> {
    let mut out: Vec<Vec3> = Vec::new();
    for l in layouts {
        for v in &l.polygon.vertices {
            if !out.iter().any(|c| (c - v).norm() <= 0.01) {
                out.push(*v);
            }
        }
    }
    out
}
