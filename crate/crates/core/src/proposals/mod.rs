//! Scene-element proposals, their pairwise compatibility and the pool.

mod compat;
mod pool;
mod set;

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

pub use compat::{
    horizontal_surface_ratio, layout_layout_compat, object_distance, object_layout_compat,
    object_object_compat, CompatParams, Compatibility,
};
pub use pool::{ProposalPool, MAX_POOL};
pub use set::MemberSet;

use crate::error::{Error, Result};
use crate::geometry::{
    voxelize, HorizontalSurface, OrientedBox, Plane, Polygon3D, RigidPoseScale, TriangleMesh, Vec3,
    VoxelGrid,
};

pub type ProposalId = usize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Category {
    Wall,
    Floor,
    Chair,
    Table,
    Sofa,
    Bed,
}

impl Category {
    pub const ALL: [Category; 6] = [
        Category::Wall,
        Category::Floor,
        Category::Chair,
        Category::Table,
        Category::Sofa,
        Category::Bed,
    ];
    pub const COUNT: usize = 6;

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    pub fn is_layout(self) -> bool {
        matches!(self, Category::Wall | Category::Floor)
    }

    pub fn name(self) -> &'static str {
        match self {
            Category::Wall => "wall",
            Category::Floor => "floor",
            Category::Chair => "chair",
            Category::Table => "table",
            Category::Sofa => "sofa",
            Category::Bed => "bed",
        }
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Category {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::Pool(format!("unknown category {s:?}")))
    }
}

/// A posed object model.
#[derive(Clone, Debug)]
pub struct ObjectProposal {
    pub category: Category,
    /// Model reference, typically an OBJ path relative to the bundle.
    pub model: String,
    /// Model geometry in its local frame.
    pub mesh: Arc<TriangleMesh>,
    pub pose: RigidPoseScale,
    pub bbox: OrientedBox,
    pub voxels: VoxelGrid,
    /// Table top or sofa seat, in world frame.
    pub surface: Option<HorizontalSurface>,
}

impl ObjectProposal {
    pub fn new(
        category: Category,
        model: impl Into<String>,
        mesh: Arc<TriangleMesh>,
        pose: RigidPoseScale,
        surface: Option<HorizontalSurface>,
        voxel_size: f64,
    ) -> Result<Self> {
        if category.is_layout() {
            return Err(Error::Pool(format!("{category} is not an object category")));
        }
        let (lo, hi) = mesh.aabb();
        if lo.iter().chain(hi.iter()).any(|c| !c.is_finite()) {
            return Err(Error::DegenerateMesh("mesh has no vertices".into()));
        }
        let half = ((hi - lo) * 0.5).component_mul(&pose.scale);
        let half = half.map(|h| h.max(1e-6));
        let local_center = (lo + hi) * 0.5;
        let bbox = OrientedBox::new(pose.apply(&local_center), half, pose.yaw())?;
        let voxels = voxelize(&mesh, &pose, voxel_size)?;
        Ok(Self {
            category,
            model: model.into(),
            mesh,
            pose,
            bbox,
            voxels,
            surface,
        })
    }

    pub fn posed_mesh(&self) -> TriangleMesh {
        self.mesh.transformed(&self.pose)
    }
}

/// A planar wall or floor polygon.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LayoutProposal {
    pub category: Category,
    pub polygon: Polygon3D,
    pub plane_id: usize,
    /// Sorted ids of boundary edges; shared ids mark adjacency.
    pub edge_ids: Vec<usize>,
}

impl LayoutProposal {
    pub fn new(
        category: Category,
        polygon: Polygon3D,
        plane_id: usize,
        mut edge_ids: Vec<usize>,
    ) -> Result<Self> {
        if !category.is_layout() {
            return Err(Error::Pool(format!("{category} is not a layout category")));
        }
        edge_ids.sort_unstable();
        edge_ids.dedup();
        Ok(Self {
            category,
            polygon,
            plane_id,
            edge_ids,
        })
    }

    pub fn plane(&self) -> &Plane {
        &self.polygon.plane
    }

    pub fn shares_edge(&self, other: &LayoutProposal) -> bool {
        let (mut i, mut j) = (0, 0);
        while i < self.edge_ids.len() && j < other.edge_ids.len() {
            match self.edge_ids[i].cmp(&other.edge_ids[j]) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => return true,
            }
        }
        false
    }
}

#[derive(Clone, Debug)]
pub enum ProposalKind {
    Object(ObjectProposal),
    Layout(LayoutProposal),
}

#[derive(Clone, Debug)]
pub struct Proposal {
    pub id: ProposalId,
    pub kind: ProposalKind,
}

impl Proposal {
    pub fn category(&self) -> Category {
        match &self.kind {
            ProposalKind::Object(o) => o.category,
            ProposalKind::Layout(l) => l.category,
        }
    }

    pub fn is_layout(&self) -> bool {
        matches!(self.kind, ProposalKind::Layout(_))
    }

    pub fn as_object(&self) -> Option<&ObjectProposal> {
        match &self.kind {
            ProposalKind::Object(o) => Some(o),
            ProposalKind::Layout(_) => None,
        }
    }

    pub fn as_layout(&self) -> Option<&LayoutProposal> {
        match &self.kind {
            ProposalKind::Layout(l) => Some(l),
            ProposalKind::Object(_) => None,
        }
    }

    /// Bounding-box center for objects, vertex centroid for layouts.
    pub fn center(&self) -> Vec3 {
        match &self.kind {
            ProposalKind::Object(o) => o.bbox.center,
            ProposalKind::Layout(l) => {
                let v = &l.polygon.vertices;
                v.iter().sum::<Vec3>() / v.len() as f64
            }
        }
    }
}
