//! Small hand-built scenes for unit tests. The camera is the identity
//! pose, so world coordinates are camera coordinates (x right, y down,
//! z forward).

use std::sync::Arc;

use crate::geometry::{Mat3, Plane, Polygon3D, RigidPoseScale, TriangleMesh, Vec3};
use crate::proposals::{Category, CompatParams, LayoutProposal, ObjectProposal, ProposalKind, ProposalPool};
use crate::render::{composite, prerender_pool, ProposalRender, View};
use crate::scoring::ObservationSet;
use crate::proposals::MemberSet;

pub const VOXEL: f64 = 0.05;

/// 32x24 pinhole at the origin looking down +z, focal length 16 px.
pub fn canonical_view() -> View {
    View::new(32, 24, 16.0, 16.0, 16.0, 12.0, Mat3::identity(), Vec3::zeros()).unwrap()
}

/// Axis-aligned rectangle on the plane `z = depth`.
pub fn rect(depth: f64, x0: f64, x1: f64, y0: f64, y1: f64) -> Polygon3D {
    let plane = Plane::new(Vec3::new(0.0, 0.0, 1.0), depth).unwrap();
    Polygon3D::new(
        plane,
        vec![
            Vec3::new(x0, y0, depth),
            Vec3::new(x1, y0, depth),
            Vec3::new(x1, y1, depth),
            Vec3::new(x0, y1, depth),
        ],
    )
    .unwrap()
}

pub fn layout(category: Category, polygon: Polygon3D, plane_id: usize, edges: Vec<usize>) -> ProposalKind {
    ProposalKind::Layout(LayoutProposal::new(category, polygon, plane_id, edges).unwrap())
}

/// Unit-pose cuboid object spanning `min..max`.
pub fn cuboid(category: Category, min: Vec3, max: Vec3) -> ProposalKind {
    let mesh = Arc::new(TriangleMesh::cuboid(min, max));
    ProposalKind::Object(
        ObjectProposal::new(category, "cuboid", mesh, RigidPoseScale::identity(), None, VOXEL).unwrap(),
    )
}

pub fn pool(kinds: Vec<ProposalKind>) -> ProposalPool {
    ProposalPool::new(kinds, VOXEL, CompatParams::default())
}

/// Observations rendered exactly from `members`: their composite depth and
/// confidence 1 for the front-most category.
pub fn observe(renders: &[ProposalRender], views: &[View], members: &MemberSet) -> ObservationSet {
    let mut depth = Vec::new();
    let mut confidence = Vec::new();
    for (k, v) in views.iter().enumerate() {
        let c = composite(renders, members, v, k);
        depth.push(c.depth.iter().map(|&d| d as f64).collect());
        let mut conf = vec![0.0; v.pixel_count() * Category::COUNT];
        for i in 0..v.pixel_count() {
            if let Some(cat) = c.category_at(i, renders) {
                conf[i * Category::COUNT + cat.index()] = 1.0;
            }
        }
        confidence.push(conf);
    }
    ObservationSet::from_raw(views.to_vec(), depth, confidence).unwrap()
}

/// A pool with its prerenders and observations of `truth`.
pub struct Fixture {
    pub pool: ProposalPool,
    pub renders: Vec<ProposalRender>,
    pub obs: ObservationSet,
}

pub fn fixture(kinds: Vec<ProposalKind>, views: Vec<View>, truth: &[usize]) -> Fixture {
    let pool = pool(kinds);
    let renders = prerender_pool(&pool, &views);
    let obs = observe(&renders, &views, &MemberSet::from_ids(pool.len(), truth.iter().copied()));
    Fixture { pool, renders, obs }
}

/// A second 32x24 camera looking at the room from the side.
pub fn side_view() -> View {
    View::look_at(Vec3::new(0.5, -0.2, 0.0), Vec3::new(0.0, 0.0, 3.0), 32, 24, 90.0).unwrap()
}

/// 0 wall filling the canonical view, 1 chair, 2 table, 3 chair decoy
/// overlapping 1, 4 bed behind the camera. Observed truth is {0, 1, 2}.
pub fn room(views: Vec<View>) -> Fixture {
    fixture(
        vec![
            layout(Category::Wall, rect(4.0, -5.0, 5.0, -4.0, 4.0), 0, vec![]),
            cuboid(Category::Chair, Vec3::new(-0.6, -0.3, 2.0), Vec3::new(0.2, 0.5, 2.6)),
            cuboid(Category::Table, Vec3::new(0.3, -0.2, 2.5), Vec3::new(1.0, 0.4, 3.0)),
            cuboid(Category::Chair, Vec3::new(-0.4, -0.3, 1.5), Vec3::new(0.4, 0.5, 2.1)),
            cuboid(Category::Bed, Vec3::new(-0.5, -0.5, -3.0), Vec3::new(0.5, 0.5, -2.0)),
        ],
        views,
        &[0, 1, 2],
    )
}

impl Fixture {
    pub fn set(&self, ids: &[usize]) -> MemberSet {
        MemberSet::from_ids(self.pool.len(), ids.iter().copied())
    }
}
