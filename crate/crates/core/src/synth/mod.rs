//! Synthetic scenes with known ground truth: rooms, furniture, camera
//! rings, rendered observations, noisy proposal pools and labeled clouds.

mod brute;
mod models;

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::Path;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

pub use brute::{brute_force, MAX_BRUTE_POOL};
pub use models::{bed, chair, model_library, models_of, sofa, table, Model};

use crate::error::{Error, Result};
use crate::geometry::{
    point_in_polygon, segment_distance, signed_area, OrientedBox, Plane, Polygon3D, RigidPoseScale, TriangleMesh,
    Vec2, Vec3,
};
use crate::io::{write_obj, write_ply, CloudPoint};
use crate::layout::{build_corners, build_edges, build_polygons, layout_corners, with_bounding_faces, DetectedPlane, PlaneSet};
use crate::metrics::polygon_iou;
use crate::proposals::{
    object_object_compat, Category, CompatParams, Compatibility, LayoutProposal, MemberSet, ObjectProposal,
    ProposalId, ProposalKind, ProposalPool,
};
use crate::render::{composite, prerender_pool, ProposalRender, View};
use crate::scoring::ObservationSet;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RoomShape {
    Cuboid,
    L,
    U,
    Polygon,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RoomConfig {
    pub shape: RoomShape,
    pub width: f64,
    pub depth: f64,
    pub height: f64,
    /// Notch size as fractions of width and depth (L and U rooms).
    pub notch: [f64; 2],
    /// Floor outline for `polygon` rooms.
    pub polygon: Vec<[f64; 2]>,
}

impl Default for RoomConfig {
    fn default() -> Self {
        Self {
            shape: RoomShape::Cuboid,
            width: 5.0,
            depth: 4.0,
            height: 2.6,
            notch: [0.4, 0.4],
            polygon: Vec::new(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ObjectCounts {
    pub chair: usize,
    pub table: usize,
    pub sofa: usize,
    pub bed: usize,
}

impl Default for ObjectCounts {
    fn default() -> Self {
        Self {
            chair: 2,
            table: 1,
            sofa: 0,
            bed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct JitterConfig {
    /// Horizontal position σ, meters.
    pub position: f64,
    pub yaw_deg: f64,
    /// Relative per-axis scale σ.
    pub scale: f64,
}

impl Default for JitterConfig {
    fn default() -> Self {
        Self {
            position: 0.08,
            yaw_deg: 8.0,
            scale: 0.08,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LayoutPoolMode {
    /// Wall polygons from the corner/edge/cycle pipeline on exact planes.
    Exact,
    /// Ground-truth walls only.
    Gt,
    None,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ViewConfig {
    pub count: usize,
    /// Ring radius as a fraction of the shorter room side.
    pub radius_fraction: f64,
    pub eye_height: f64,
    pub target_height: f64,
    pub width: usize,
    pub height: usize,
    pub hfov_deg: f64,
}

impl Default for ViewConfig {
    fn default() -> Self {
        Self {
            count: 8,
            radius_fraction: 0.3,
            eye_height: 1.6,
            target_height: 0.5,
            width: 160,
            height: 120,
            hfov_deg: 75.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseConfig {
    /// Upper bound on the fraction of pixels per view masked as depth holes.
    pub depth_holes: f64,
    /// Per-pixel probability of relabeling to another category.
    pub label_flip: f64,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        Self {
            depth_holes: 0.0,
            label_flip: 0.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CloudConfig {
    /// Points per square meter of layout surface.
    pub density: f64,
    pub min_per_plane: usize,
    /// Isotropic position noise σ, meters.
    pub noise: f64,
    /// Normal perturbation σ, degrees (applied only when `noise > 0`).
    pub normal_noise_deg: f64,
}

impl Default for CloudConfig {
    fn default() -> Self {
        Self {
            density: 500.0,
            min_per_plane: 6000,
            noise: 0.0,
            normal_noise_deg: 1.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub seed: u64,
    pub voxel_size: f64,
    pub room: RoomConfig,
    pub objects: ObjectCounts,
    pub jitter: JitterConfig,
    /// Jittered copies per ground-truth object.
    pub jitter_copies: usize,
    /// Chance per object of a wrong-model or wrong-category proposal at its pose.
    pub swap_probability: f64,
    /// Random objects at empty locations.
    pub decoys: usize,
    /// Objects half inside a wall, backed by hallucinated segmentation.
    pub wall_decoys: usize,
    pub layout_pool: LayoutPoolMode,
    pub views: ViewConfig,
    pub noise: NoiseConfig,
    pub cloud: CloudConfig,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            voxel_size: 0.05,
            room: RoomConfig::default(),
            objects: ObjectCounts::default(),
            jitter: JitterConfig::default(),
            jitter_copies: 1,
            swap_probability: 0.3,
            decoys: 2,
            wall_decoys: 0,
            layout_pool: LayoutPoolMode::Exact,
            views: ViewConfig::default(),
            noise: NoiseConfig::default(),
            cloud: CloudConfig::default(),
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let r = &self.room;
        let pos = |v: f64| v.is_finite() && v > 0.0;
        if !(pos(r.width) && pos(r.depth) && pos(r.height) && pos(self.voxel_size)) {
            return Err(Error::Config("room dimensions and voxel size must be positive".into()));
        }
        if r.notch.iter().any(|f| !(*f > 0.0 && *f < 1.0)) {
            return Err(Error::Config("notch fractions must be in (0, 1)".into()));
        }
        let prob = |p: f64| (0.0..=1.0).contains(&p);
        if !(prob(self.swap_probability) && prob(self.noise.label_flip) && prob(self.noise.depth_holes)) {
            return Err(Error::Config("probabilities must be in [0, 1]".into()));
        }
        let j = &self.jitter;
        if [j.position, j.yaw_deg, j.scale, self.cloud.noise, self.cloud.normal_noise_deg]
            .iter()
            .any(|v| !(v.is_finite() && *v >= 0.0))
        {
            return Err(Error::Config("noise levels must be nonnegative".into()));
        }
        let v = &self.views;
        if v.count == 0 || !(v.radius_fraction >= 0.0 && v.radius_fraction < 0.5) || !(v.hfov_deg > 1.0 && v.hfov_deg < 170.0) {
            return Err(Error::Config("need at least one view, radius fraction in [0, 0.5), sane fov".into()));
        }
        if !(v.eye_height > 0.0 && v.eye_height < r.height) {
            return Err(Error::Config("eye height must be inside the room".into()));
        }
        if !(self.cloud.density.is_finite() && self.cloud.density >= 0.0) {
            return Err(Error::Config("cloud density must be nonnegative".into()));
        }
        Ok(())
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let c: Self = toml::from_str(text)?;
        c.validate()?;
        Ok(c)
    }
}

/// Counter-clockwise floor outline.
pub fn room_outline(room: &RoomConfig) -> Result<Vec<Vec2>> {
    let (w, d) = (room.width, room.depth);
    let pts: Vec<Vec2> = match room.shape {
        RoomShape::Cuboid => vec![[0.0, 0.0], [w, 0.0], [w, d], [0.0, d]],
        RoomShape::L => {
            let nx = w * (1.0 - room.notch[0]);
            let ny = d * (1.0 - room.notch[1]);
            vec![[0.0, 0.0], [w, 0.0], [w, ny], [nx, ny], [nx, d], [0.0, d]]
        }
        RoomShape::U => {
            let a = w * (1.0 - room.notch[0]) / 2.0;
            let b = w - a;
            let ny = d * (1.0 - room.notch[1]);
            vec![[0.0, 0.0], [w, 0.0], [w, d], [b, d], [b, ny], [a, ny], [a, d], [0.0, d]]
        }
        RoomShape::Polygon => room.polygon.clone(),
    }
    .into_iter()
    .map(|[x, y]| Vec2::new(x, y))
    .collect();
    if pts.len() < 3 || pts.iter().any(|p| !(p.x.is_finite() && p.y.is_finite())) {
        return Err(Error::InvalidPolygon("room outline needs 3 finite points".into()));
    }
    let mut pts = pts;
    if signed_area(&pts) < 0.0 {
        pts.reverse();
    }
    // Validated as a floor polygon, which also rejects self-intersections.
    let floor = Plane::new(Vec3::new(0.0, 0.0, 1.0), 0.0)?;
    Polygon3D::new(floor, pts.iter().map(|p| Vec3::new(p.x, p.y, 0.0)).collect())?;
    let n = pts.len();
    for i in 0..n {
        let (a, b, c) = (pts[(i + n - 1) % n], pts[i], pts[(i + 1) % n]);
        let (u, v) = (b - a, c - b);
        if (u.x * v.y - u.y * v.x).abs() <= 1e-9 * u.norm() * v.norm() {
            return Err(Error::InvalidPolygon("room outline has collinear or repeated vertices".into()));
        }
    }
    Ok(pts)
}

/// Wall rectangle above outline edge `i`, normal pointing into the room.
pub fn wall_polygon(outline: &[Vec2], i: usize, height: f64) -> Result<Polygon3D> {
    let a = outline[i];
    let b = outline[(i + 1) % outline.len()];
    let d = b - a;
    let plane = Plane::through_point(Vec3::new(-d.y, d.x, 0.0), &Vec3::new(a.x, a.y, 0.0))?;
    Polygon3D::new(
        plane,
        vec![
            Vec3::new(a.x, a.y, 0.0),
            Vec3::new(b.x, b.y, 0.0),
            Vec3::new(b.x, b.y, height),
            Vec3::new(a.x, a.y, height),
        ],
    )
}

pub fn floor_polygon(outline: &[Vec2]) -> Result<Polygon3D> {
    Polygon3D::new(
        Plane::new(Vec3::new(0.0, 0.0, 1.0), 0.0)?,
        outline.iter().map(|p| Vec3::new(p.x, p.y, 0.0)).collect(),
    )
}

/// Walls from the corner pipeline on exact planes, the ground-truth walls
/// matched among them, and the floor sharing every floor-plane edge.
struct ExactLayout {
    candidates: Vec<LayoutProposal>,
    gt_walls: Vec<usize>,
    floor: LayoutProposal,
}

fn exact_layout(outline: &[Vec2], height: f64) -> Result<ExactLayout> {
    let walls: Vec<Polygon3D> = (0..outline.len())
        .map(|i| wall_polygon(outline, i, height))
        .collect::<Result<_>>()?;
    let floor = floor_polygon(outline)?;
    let mut set = PlaneSet::default();
    for w in &walls {
        set.planes.push(DetectedPlane {
            plane: w.plane,
            inliers: Vec::new(),
            stage: 1,
        });
    }
    set.floor = Some(set.planes.len());
    set.planes.push(DetectedPlane {
        plane: floor.plane,
        inliers: Vec::new(),
        stage: 1,
    });
    let lo = outline.iter().fold(Vec3::repeat(f64::INFINITY), |m, p| m.inf(&Vec3::new(p.x, p.y, 0.0)));
    let hi = outline
        .iter()
        .fold(Vec3::repeat(f64::NEG_INFINITY), |m, p| m.sup(&Vec3::new(p.x, p.y, height)));
    let planes = with_bounding_faces(&set, &lo, &hi);
    let corners = build_corners(&planes.planes, &lo, &hi);
    let edges = build_edges(&corners);
    let candidates = build_polygons(&planes, &corners, &edges);
    let mut gt_walls = Vec::with_capacity(walls.len());
    for (k, w) in walls.iter().enumerate() {
        let best = candidates
            .iter()
            .enumerate()
            .filter(|(_, c)| c.plane_id == k)
            .map(|(i, c)| (i, polygon_iou(&c.polygon, w)))
            .filter(|(_, iou)| *iou >= 0.999)
            .max_by(|a, b| a.1.total_cmp(&b.1).then(b.0.cmp(&a.0)))
            .ok_or_else(|| Error::InvalidPolygon(format!("wall {k} missing from the layout candidates")))?;
        gt_walls.push(best.0);
    }
    let floor_id = set.floor.expect("floor plane set");
    let floor_edges: Vec<usize> = edges
        .iter()
        .enumerate()
        .filter(|(_, e)| e.planes.contains(&floor_id))
        .map(|(i, _)| i)
        .collect();
    let floor = LayoutProposal::new(Category::Floor, floor, floor_id, floor_edges)?;
    Ok(ExactLayout {
        candidates,
        gt_walls,
        floor,
    })
}

/// A placed ground-truth object.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GtObject {
    pub category: Category,
    pub model: String,
    /// Row-major 4x4 rotation and translation.
    pub pose: [f64; 16],
    pub scale: [f64; 3],
    pub bbox: OrientedBox,
    pub pool_id: ProposalId,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub outline: Vec<[f64; 2]>,
    pub height: f64,
    pub walls: Vec<Polygon3D>,
    pub floor: Polygon3D,
    pub objects: Vec<GtObject>,
    /// Pool ids of the ground-truth layouts and objects.
    pub pool_ids: Vec<ProposalId>,
    /// Pool ids whose footprint is labeled in the observations without
    /// existing in depth.
    pub hallucinated: Vec<ProposalId>,
}

impl GroundTruth {
    /// Distinct corners of walls and floor.
    pub fn corners(&self) -> Vec<Vec3> {
        let layouts: Vec<LayoutProposal> = self
            .walls
            .iter()
            .map(|w| LayoutProposal {
                category: Category::Wall,
                polygon: w.clone(),
                plane_id: 0,
                edge_ids: Vec::new(),
            })
            .collect();
        let refs: Vec<&LayoutProposal> = layouts.iter().collect();
        layout_corners(&refs)
    }

    pub fn boxes(&self) -> Vec<(OrientedBox, Category)> {
        self.objects.iter().map(|o| (o.bbox.clone(), o.category)).collect()
    }
}

/// A generated scene with everything needed to search and evaluate it.
pub struct SynthScene {
    pub config: SynthConfig,
    pub gt: GroundTruth,
    pub pool: ProposalPool,
    pub renders: Vec<ProposalRender>,
    pub obs: ObservationSet,
    pub cloud: Vec<CloudPoint>,
    pub models: BTreeMap<String, Arc<TriangleMesh>>,
}

fn model_path(name: &str) -> String {
    format!("mesh/{name}.obj")
}

struct Library {
    models: Vec<Model>,
    meshes: Vec<Arc<TriangleMesh>>,
}

impl Library {
    fn new() -> Self {
        let models = model_library();
        let meshes = models.iter().map(|m| Arc::new(m.mesh.clone())).collect();
        Self { models, meshes }
    }

    fn index_of(&self, category: Category, rng: &mut ChaCha8Rng) -> usize {
        let idx: Vec<usize> = (0..self.models.len()).filter(|&i| self.models[i].category == category).collect();
        idx[rng.random_range(0..idx.len())]
    }

    fn place(&self, k: usize, yaw: f64, xy: Vec2, scale: Vec3, voxel: f64) -> Result<ObjectProposal> {
        let m = &self.models[k];
        let pose = RigidPoseScale::from_yaw(yaw, Vec3::new(xy.x, xy.y, 0.0), scale);
        let surface = m.surface.as_ref().map(|s| s.transformed(&pose));
        ObjectProposal::new(m.category, model_path(m.name), self.meshes[k].clone(), pose, surface, voxel)
    }
}

/// Footprint inside the outline, at least `margin` from every wall.
fn footprint_inside(o: &ObjectProposal, outline: &[Vec2], margin: f64) -> bool {
    let n = outline.len();
    o.bbox.corners().iter().take(4).all(|c| {
        let p = Vec2::new(c.x, c.y);
        point_in_polygon(&p, outline) && (0..n).all(|i| segment_distance(&p, &outline[i], &outline[(i + 1) % n]) >= margin)
    })
}

fn compatible_with_all(o: &ObjectProposal, others: &[ObjectProposal], params: &CompatParams) -> bool {
    others
        .iter()
        .all(|p| object_object_compat(o, p, params) == Compatibility::Compatible)
}

fn random_in_bounds(outline: &[Vec2], rng: &mut ChaCha8Rng) -> Vec2 {
    let lo = outline.iter().fold(Vec2::repeat(f64::INFINITY), |m, p| m.inf(p));
    let hi = outline.iter().fold(Vec2::repeat(f64::NEG_INFINITY), |m, p| m.sup(p));
    Vec2::new(rng.random_range(lo.x..hi.x), rng.random_range(lo.y..hi.y))
}

const PLACEMENT_TRIES: usize = 1000;

fn place_free(
    lib: &Library,
    category: Category,
    outline: &[Vec2],
    avoid: &[ObjectProposal],
    config: &SynthConfig,
    compat: &CompatParams,
    rng: &mut ChaCha8Rng,
) -> Result<ObjectProposal> {
    for _ in 0..PLACEMENT_TRIES {
        let k = lib.index_of(category, rng);
        let yaw = rng.random_range(0.0..2.0 * PI);
        let xy = random_in_bounds(outline, rng);
        let o = lib.place(k, yaw, xy, Vec3::repeat(1.0), config.voxel_size)?;
        if footprint_inside(&o, outline, 0.05) && compatible_with_all(&o, avoid, compat) {
            return Ok(o);
        }
    }
    Err(Error::Placement {
        what: category.name().to_string(),
        tries: PLACEMENT_TRIES,
    })
}

fn jittered(lib: &Library, gt: &ObjectProposal, config: &SynthConfig, rng: &mut ChaCha8Rng) -> Result<ObjectProposal> {
    let k = lib
        .models
        .iter()
        .position(|m| model_path(m.name) == gt.model)
        .expect("ground truth uses a library model");
    let j = &config.jitter;
    let gauss = |rng: &mut ChaCha8Rng, s: f64| if s > 0.0 { Normal::new(0.0, s).expect("valid sigma").sample(rng) } else { 0.0 };
    let xy = Vec2::new(
        gt.pose.translation.x + gauss(rng, j.position),
        gt.pose.translation.y + gauss(rng, j.position),
    );
    let yaw = gt.pose.yaw() + gauss(rng, j.yaw_deg.to_radians());
    let scale = Vec3::from_fn(|_, _| (1.0 + gauss(rng, j.scale)).clamp(0.7, 1.3));
    lib.place(k, yaw, xy, scale, config.voxel_size)
}

fn swapped(lib: &Library, gt: &ObjectProposal, config: &SynthConfig, rng: &mut ChaCha8Rng) -> Result<ObjectProposal> {
    let same: Vec<usize> = (0..lib.models.len())
        .filter(|&i| lib.models[i].category == gt.category && model_path(lib.models[i].name) != gt.model)
        .collect();
    let other: Vec<usize> = (0..lib.models.len()).filter(|&i| lib.models[i].category != gt.category).collect();
    let k = if rng.random_bool(0.5) && !same.is_empty() {
        same[rng.random_range(0..same.len())]
    } else {
        other[rng.random_range(0..other.len())]
    };
    let xy = Vec2::new(gt.pose.translation.x, gt.pose.translation.y);
    lib.place(k, gt.pose.yaw(), xy, Vec3::repeat(1.0), config.voxel_size)
}

/// Object whose back half sits inside wall `w`.
fn wall_decoy(
    lib: &Library,
    wall: &Polygon3D,
    avoid: &[ObjectProposal],
    config: &SynthConfig,
    compat: &CompatParams,
    rng: &mut ChaCha8Rng,
) -> Result<ObjectProposal> {
    let (a, b) = (wall.vertices[0], wall.vertices[1]);
    let n = wall.plane.normal;
    let yaw = n.x.atan2(-n.y);
    for _ in 0..PLACEMENT_TRIES {
        let category = [Category::Chair, Category::Sofa, Category::Table][rng.random_range(0..3)];
        let k = lib.index_of(category, rng);
        let t = rng.random_range(0.3..0.7);
        let p = a + (b - a) * t;
        let o = lib.place(k, yaw, Vec2::new(p.x, p.y), Vec3::repeat(1.0), config.voxel_size)?;
        if compatible_with_all(&o, avoid, compat) {
            return Ok(o);
        }
    }
    Err(Error::Placement {
        what: "wall decoy".into(),
        tries: PLACEMENT_TRIES,
    })
}

/// Camera ring around the outline centroid, each looking across the room.
pub fn ring_views(outline: &[Vec2], config: &ViewConfig) -> Result<Vec<View>> {
    let pts: Vec<Vec3> = outline.iter().map(|p| Vec3::new(p.x, p.y, 0.0)).collect();
    let area = signed_area(outline);
    let n = outline.len();
    let mut c = Vec2::zeros();
    for i in 0..n {
        let (p, q) = (outline[i], outline[(i + 1) % n]);
        let cross = p.x * q.y - q.x * p.y;
        c += (p + q) * cross;
    }
    let c = c / (6.0 * area);
    let lo = pts.iter().fold(Vec3::repeat(f64::INFINITY), |m, p| m.inf(p));
    let hi = pts.iter().fold(Vec3::repeat(f64::NEG_INFINITY), |m, p| m.sup(p));
    let r = config.radius_fraction * (hi.x - lo.x).min(hi.y - lo.y);
    let mut views = Vec::with_capacity(config.count);
    for i in 0..config.count {
        let ang = 2.0 * PI * i as f64 / config.count as f64 + 0.1;
        let dir = Vec2::new(ang.cos(), ang.sin());
        let mut radius = r;
        let inside = |rad: f64| {
            let e = c + dir * rad;
            point_in_polygon(&e, outline)
                && (0..n).all(|k| segment_distance(&e, &outline[k], &outline[(k + 1) % n]) >= 0.2)
        };
        while radius > 1e-3 && !inside(radius) {
            radius *= 0.5;
        }
        let eye2 = c + dir * radius;
        let target2 = c - dir * r.max(0.5);
        views.push(View::look_at(
            Vec3::new(eye2.x, eye2.y, config.eye_height),
            Vec3::new(target2.x, target2.y, config.target_height),
            config.width,
            config.height,
            config.hfov_deg,
        )?);
    }
    Ok(views)
}

/// Observations rendered from the ground-truth members of `pool`, with
/// hallucinated labels, label flips and depth holes.
pub fn render_observations(
    pool: &ProposalPool,
    renders: &[ProposalRender],
    views: &[View],
    gt_ids: &[ProposalId],
    hallucinated: &[ProposalId],
    noise: &NoiseConfig,
    rng: &mut ChaCha8Rng,
) -> Result<ObservationSet> {
    let gt = MemberSet::from_ids(pool.len(), gt_ids.iter().copied());
    let mut depth_maps = Vec::with_capacity(views.len());
    let mut conf_maps = Vec::with_capacity(views.len());
    for (k, view) in views.iter().enumerate() {
        let base = composite(renders, &gt, view, k);
        let mut label: Vec<Option<Category>> = (0..view.pixel_count()).map(|i| base.category_at(i, renders)).collect();
        for &h in hallucinated {
            let mut with = gt.clone();
            with.insert(h);
            let c = composite(renders, &with, view, k);
            for (i, o) in c.owner.iter().enumerate() {
                if *o as usize == h {
                    label[i] = Some(pool.get(h).category());
                }
            }
        }
        let mut depth: Vec<f64> = base.depth.iter().map(|&d| d as f64).collect();
        if noise.label_flip > 0.0 {
            for l in label.iter_mut().flatten() {
                if rng.random_bool(noise.label_flip) {
                    let shift = rng.random_range(1..Category::COUNT);
                    *l = Category::from_index((l.index() + shift) % Category::COUNT).expect("index in range");
                }
            }
        }
        if noise.depth_holes > 0.0 {
            let target = rng.random_range(0.0..=noise.depth_holes) * view.pixel_count() as f64;
            let mut holes = 0usize;
            let mut guard = 0;
            while (holes as f64) < target && guard < 1000 {
                guard += 1;
                let w = rng.random_range(view.width / 20..=view.width / 4).max(1);
                let h = rng.random_range(view.height / 20..=view.height / 4).max(1);
                let x0 = rng.random_range(0..=view.width - w);
                let y0 = rng.random_range(0..=view.height - h);
                for y in y0..y0 + h {
                    for x in x0..x0 + w {
                        let d = &mut depth[y * view.width + x];
                        if d.is_finite() {
                            holes += 1;
                        }
                        *d = f64::INFINITY;
                    }
                }
            }
        }
        let mut conf = vec![0.0; view.pixel_count() * Category::COUNT];
        for (i, l) in label.iter().enumerate() {
            if let Some(c) = l {
                conf[i * Category::COUNT + c.index()] = 1.0;
            }
        }
        depth_maps.push(depth);
        conf_maps.push(conf);
    }
    ObservationSet::from_raw(views.to_vec(), depth_maps, conf_maps)
}

/// Points sampled on the layout surfaces, normals into the room.
pub fn layout_cloud(walls: &[Polygon3D], floor: &Polygon3D, config: &CloudConfig, rng: &mut ChaCha8Rng) -> Vec<CloudPoint> {
    let mut out = Vec::new();
    let pos_noise = (config.noise > 0.0).then(|| Normal::new(0.0, config.noise).expect("valid sigma"));
    let normal_noise =
        (config.noise > 0.0 && config.normal_noise_deg > 0.0).then(|| Normal::new(0.0, config.normal_noise_deg.to_radians()).expect("valid sigma"));
    let surfaces = walls.iter().map(|w| (w, Category::Wall)).chain([(floor, Category::Floor)]);
    for (poly, category) in surfaces {
        let tris: Vec<[u32; 3]> = poly.triangles().iter().map(|t| t.map(|i| i as u32)).collect();
        let Ok(mesh) = TriangleMesh::new(poly.vertices.clone(), tris) else { continue };
        let count = ((config.density * poly.area()).ceil() as usize).max(config.min_per_plane);
        for p in mesh.sample_surface(count, rng) {
            let mut position = p;
            let mut normal = poly.plane.normal;
            if let Some(d) = &pos_noise {
                position += Vec3::new(d.sample(rng), d.sample(rng), d.sample(rng));
            }
            if let Some(d) = &normal_noise {
                normal = (normal + Vec3::new(d.sample(rng), d.sample(rng), d.sample(rng))).normalize();
            }
            out.push(CloudPoint {
                position,
                normal,
                label: Some(category.index() as i32),
            });
        }
    }
    out
}

/// Builds a full synthetic scene.
pub fn generate(config: &SynthConfig, compat: &CompatParams) -> Result<SynthScene> {
    config.validate()?;
    compat.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let outline = room_outline(&config.room)?;
    let height = config.room.height;
    let lib = Library::new();

    let mut gt_objects: Vec<ObjectProposal> = Vec::new();
    let counts = [
        (Category::Chair, config.objects.chair),
        (Category::Table, config.objects.table),
        (Category::Sofa, config.objects.sofa),
        (Category::Bed, config.objects.bed),
    ];
    for (category, count) in counts {
        for _ in 0..count {
            let o = place_free(&lib, category, &outline, &gt_objects, config, compat, &mut rng)?;
            gt_objects.push(o);
        }
    }

    let mut kinds: Vec<ProposalKind> = Vec::new();
    let mut gt_ids = Vec::new();
    let mut gt_records = Vec::new();
    let mut distractors = Vec::new();
    for o in &gt_objects {
        gt_ids.push(kinds.len());
        gt_records.push(GtObject {
            category: o.category,
            model: o.model.clone(),
            pose: o.pose.to_row_major(),
            scale: o.pose.scale.into(),
            bbox: o.bbox.clone(),
            pool_id: kinds.len(),
        });
        kinds.push(ProposalKind::Object(o.clone()));
        for _ in 0..config.jitter_copies {
            distractors.push(jittered(&lib, o, config, &mut rng)?);
        }
        if rng.random_bool(config.swap_probability) {
            distractors.push(swapped(&lib, o, config, &mut rng)?);
        }
    }
    for _ in 0..config.decoys {
        let category = [Category::Chair, Category::Table, Category::Sofa, Category::Bed][rng.random_range(0..4)];
        let mut avoid = gt_objects.clone();
        avoid.extend(distractors.iter().cloned());
        // Beds rarely fit next to other furniture; fall back to chairs.
        let d = match place_free(&lib, category, &outline, &avoid, config, compat, &mut rng) {
            Ok(d) => d,
            Err(_) => place_free(&lib, Category::Chair, &outline, &avoid, config, compat, &mut rng)?,
        };
        distractors.push(d);
    }
    let walls: Vec<Polygon3D> = (0..outline.len())
        .map(|i| wall_polygon(&outline, i, height))
        .collect::<Result<_>>()?;
    let mut hallucinated = Vec::new();
    for _ in 0..config.wall_decoys {
        let w = rng.random_range(0..walls.len());
        let d = wall_decoy(&lib, &walls[w], &gt_objects, config, compat, &mut rng)?;
        hallucinated.push(kinds.len() + distractors.len());
        distractors.push(d);
    }
    kinds.extend(distractors.into_iter().map(ProposalKind::Object));

    let mut gt_walls = Vec::new();
    let mut gt_floor = floor_polygon(&outline)?;
    if config.layout_pool != LayoutPoolMode::None {
        let exact = exact_layout(&outline, height)?;
        let base = kinds.len();
        match config.layout_pool {
            LayoutPoolMode::Exact => {
                for &w in &exact.gt_walls {
                    gt_ids.push(base + w);
                }
                kinds.extend(exact.candidates.iter().cloned().map(ProposalKind::Layout));
            }
            _ => {
                for (k, &w) in exact.gt_walls.iter().enumerate() {
                    gt_ids.push(base + k);
                    kinds.push(ProposalKind::Layout(exact.candidates[w].clone()));
                }
            }
        }
        gt_walls = exact.gt_walls.iter().map(|&w| exact.candidates[w].polygon.clone()).collect();
        gt_ids.push(kinds.len());
        gt_floor = exact.floor.polygon.clone();
        kinds.push(ProposalKind::Layout(exact.floor));
    }
    if gt_walls.is_empty() {
        gt_walls = walls.clone();
    }

    let pool = ProposalPool::new(kinds, config.voxel_size, compat.clone());
    let views = ring_views(&outline, &config.views)?;
    let renders = prerender_pool(&pool, &views);
    let mut noise_rng = ChaCha8Rng::seed_from_u64(config.seed ^ 0x9e37_79b9_7f4a_7c15);
    let obs = render_observations(&pool, &renders, &views, &gt_ids, &hallucinated, &config.noise, &mut noise_rng)?;
    let mut cloud_rng = ChaCha8Rng::seed_from_u64(config.seed ^ 0x5851_f42d_4c95_7f2d);
    let cloud = layout_cloud(&gt_walls, &gt_floor, &config.cloud, &mut cloud_rng);

    let mut models = BTreeMap::new();
    for p in pool.proposals() {
        if let Some(o) = p.as_object() {
            models.entry(o.model.clone()).or_insert_with(|| o.mesh.clone());
        }
    }
    let gt = GroundTruth {
        outline: outline.iter().map(|p| [p.x, p.y]).collect(),
        height,
        walls: gt_walls,
        floor: gt_floor,
        objects: gt_records,
        pool_ids: gt_ids,
        hallucinated,
    };
    Ok(SynthScene {
        config: config.clone(),
        gt,
        pool,
        renders,
        obs,
        cloud,
        models,
    })
}

/// Two chairs side by side and one oversized chair spanning both, seen
/// against a floor and back wall that are not in the pool.
pub fn trap_scene(voxel_size: f64) -> Result<SynthScene> {
    let lib = Library::new();
    let k = lib.models.iter().position(|m| m.name == "chair_a").expect("chair_a exists");
    let yaw = 0.0;
    let y = 3.0;
    let a1 = lib.place(k, yaw, Vec2::new(2.2, y), Vec3::repeat(1.0), voxel_size)?;
    let a2 = lib.place(k, yaw, Vec2::new(2.8, y), Vec3::repeat(1.0), voxel_size)?;
    let big = lib.place(k, yaw, Vec2::new(2.5, y), Vec3::new(1.05 / 0.45, 1.0, 1.0), voxel_size)?;
    let outline = room_outline(&RoomConfig {
        shape: RoomShape::Cuboid,
        width: 5.0,
        depth: 4.0,
        ..RoomConfig::default()
    })?;
    let floor = floor_polygon(&outline)?;
    let back = wall_polygon(&outline, 2, 2.6)?;
    let layout = |poly: Polygon3D, category, plane_id| LayoutProposal::new(category, poly, plane_id, Vec::new());
    let kinds = vec![
        ProposalKind::Object(a1.clone()),
        ProposalKind::Object(a2.clone()),
        ProposalKind::Object(big),
        ProposalKind::Layout(layout(floor.clone(), Category::Floor, 0)?),
        ProposalKind::Layout(layout(back.clone(), Category::Wall, 1)?),
    ];
    let full = ProposalPool::new(kinds, voxel_size, CompatParams::default());
    let mut views = Vec::new();
    for i in 0..5 {
        let x = 1.0 + 0.75 * i as f64;
        views.push(View::look_at(
            Vec3::new(x, 0.8, 1.5),
            Vec3::new(2.5, y, 0.4),
            80,
            60,
            60.0,
        )?);
    }
    let renders_full = prerender_pool(&full, &views);
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let obs = render_observations(&full, &renders_full, &views, &[0, 1, 3, 4], &[], &NoiseConfig::default(), &mut rng)?;
    // The pool offered to search holds only the three chairs.
    let pool = ProposalPool::new(
        full.proposals()[..3].iter().map(|p| p.kind.clone()).collect(),
        voxel_size,
        CompatParams::default(),
    );
    let renders = renders_full[..3].to_vec();
    let record = |o: &ObjectProposal, id| GtObject {
        category: o.category,
        model: o.model.clone(),
        pose: o.pose.to_row_major(),
        scale: o.pose.scale.into(),
        bbox: o.bbox.clone(),
        pool_id: id,
    };
    let mut models = BTreeMap::new();
    models.insert(a1.model.clone(), a1.mesh.clone());
    Ok(SynthScene {
        config: SynthConfig::default(),
        gt: GroundTruth {
            outline: outline.iter().map(|p| [p.x, p.y]).collect(),
            height: 2.6,
            walls: vec![back],
            floor,
            objects: vec![record(&a1, 0), record(&a2, 1)],
            pool_ids: vec![0, 1],
            hallucinated: Vec::new(),
        },
        pool,
        renders,
        obs,
        cloud: Vec::new(),
        models,
    })
}

impl SynthScene {
    /// Writes `gt.json`, `pool.json`, `views.json`, `obs/`, `mesh/` and
    /// `cloud.ply` into `dir`.
    pub fn save(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir.join("mesh"))?;
        for (path, mesh) in &self.models {
            std::fs::write(dir.join(path), write_obj(mesh))?;
        }
        std::fs::write(dir.join("pool.json"), self.pool.to_json())?;
        std::fs::write(dir.join("gt.json"), serde_json::to_string_pretty(&self.gt)?)?;
        self.obs.save(dir)?;
        if !self.cloud.is_empty() {
            std::fs::write(dir.join("cloud.ply"), write_ply(&self.cloud))?;
        }
        Ok(())
    }
}

/// A scene read back from disk.
pub struct SceneBundle {
    pub gt: Option<GroundTruth>,
    pub pool: ProposalPool,
    pub obs: ObservationSet,
}

impl SceneBundle {
    /// `gt.json` is optional; pool, views and observations are required.
    pub fn load(dir: &Path) -> Result<Self> {
        if !dir.is_dir() {
            return Err(Error::Io(std::io::Error::new(
                std::io::ErrorKind::NotFound,
                format!("bundle directory {} not found", dir.display()),
            )));
        }
        let pool = ProposalPool::load(&dir.join("pool.json"))?;
        let obs = ObservationSet::load(dir)?;
        let gt_path = dir.join("gt.json");
        let gt = if gt_path.exists() {
            Some(serde_json::from_str(&std::fs::read_to_string(gt_path)?)?)
        } else {
            None
        };
        Ok(Self { gt, pool, obs })
    }
}

/// Scene recipes shared by the ablation commands and the test suites.
pub mod presets {
    use super::*;

    fn small_views(count: usize) -> ViewConfig {
        ViewConfig {
            count,
            width: 128,
            height: 96,
            ..ViewConfig::default()
        }
    }

    /// At most 12 proposals: three objects, one jittered copy each, one
    /// decoy, four walls and a floor.
    pub fn oracle(seed: u64) -> SynthConfig {
        SynthConfig {
            seed,
            objects: ObjectCounts {
                chair: 2,
                table: 1,
                sofa: 0,
                bed: 0,
            },
            jitter_copies: 1,
            swap_probability: 0.0,
            decoys: 1,
            layout_pool: LayoutPoolMode::Gt,
            views: small_views(4),
            ..SynthConfig::default()
        }
    }

    /// Nine objects with three jittered copies each, frequent swaps and a
    /// decoy, in a larger room: 40 to 55 proposals.
    pub fn crowded(seed: u64) -> SynthConfig {
        SynthConfig {
            seed,
            room: RoomConfig {
                width: 7.0,
                depth: 6.0,
                ..RoomConfig::default()
            },
            objects: ObjectCounts {
                chair: 6,
                table: 2,
                sofa: 1,
                bed: 0,
            },
            jitter_copies: 3,
            swap_probability: 0.8,
            decoys: 1,
            layout_pool: LayoutPoolMode::Gt,
            views: small_views(6),
            ..SynthConfig::default()
        }
    }

    /// Three objects half inside walls, labeled in segmentation only.
    pub fn wall_decoys(seed: u64) -> SynthConfig {
        SynthConfig {
            seed,
            decoys: 1,
            wall_decoys: 3,
            views: small_views(6),
            ..SynthConfig::default()
        }
    }

    /// Layout-only room for plane and polygon recovery.
    pub fn room(seed: u64, shape: RoomShape, noise: f64) -> SynthConfig {
        SynthConfig {
            seed,
            room: RoomConfig {
                shape,
                ..RoomConfig::default()
            },
            cloud: CloudConfig {
                noise,
                ..CloudConfig::default()
            },
            views: small_views(6),
            ..SynthConfig::default()
        }
    }
}
