use std::collections::HashMap;
use std::path::Path;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    layout_layout_compat, object_layout_compat, object_object_compat, Category, CompatParams,
    Compatibility, LayoutProposal, MemberSet, ObjectProposal, Proposal, ProposalId, ProposalKind,
};
use crate::error::{Error, Result};
use crate::geometry::{HorizontalSurface, Plane, Polygon3D, RigidPoseScale, TriangleMesh, Vec3};
use crate::io::parse_obj;

/// Upper bound on proposals accepted from a pool file.
pub const MAX_POOL: usize = 20_000;

/// Immutable proposal set with pairwise caches.
#[derive(Clone, Debug)]
pub struct ProposalPool {
    proposals: Vec<Proposal>,
    voxel_size: f64,
    params: CompatParams,
    compat: Vec<Compatibility>,
    incompatible: Vec<MemberSet>,
    neighbors: Vec<MemberSet>,
    distance: Vec<f64>,
}

/// Pairwise relation computed from scratch, without the caches.
pub(crate) fn pair_compat(a: &Proposal, b: &Proposal, params: &CompatParams) -> Compatibility {
    match (&a.kind, &b.kind) {
        (ProposalKind::Object(x), ProposalKind::Object(y)) => object_object_compat(x, y, params),
        (ProposalKind::Object(o), ProposalKind::Layout(l))
        | (ProposalKind::Layout(l), ProposalKind::Object(o)) => object_layout_compat(o, l),
        (ProposalKind::Layout(x), ProposalKind::Layout(y)) => layout_layout_compat(x, y, params),
    }
}

impl ProposalPool {
    /// Assigns ids in order and fills every cache.
    pub fn new(kinds: Vec<ProposalKind>, voxel_size: f64, params: CompatParams) -> Self {
        let proposals: Vec<Proposal> = kinds
            .into_iter()
            .enumerate()
            .map(|(id, kind)| Proposal { id, kind })
            .collect();
        let n = proposals.len();
        let rows: Vec<Vec<Compatibility>> = (0..n)
            .into_par_iter()
            .map(|i| {
                (0..n)
                    .map(|j| {
                        if j <= i {
                            Compatibility::Compatible
                        } else {
                            pair_compat(&proposals[i], &proposals[j], &params)
                        }
                    })
                    .collect()
            })
            .collect();
        let mut compat = vec![Compatibility::Compatible; n * n];
        for i in 0..n {
            for j in (i + 1)..n {
                compat[i * n + j] = rows[i][j];
                compat[j * n + i] = rows[i][j];
            }
        }
        let mut incompatible = vec![MemberSet::new(n); n];
        let mut neighbors = vec![MemberSet::new(n); n];
        let mut distance = vec![0.0; n * n];
        let centers: Vec<Vec3> = proposals.iter().map(Proposal::center).collect();
        for i in 0..n {
            for j in 0..n {
                if i == j {
                    continue;
                }
                if compat[i * n + j].is_incompatible() {
                    incompatible[i].insert(j);
                }
                if let (Some(a), Some(b)) = (proposals[i].as_layout(), proposals[j].as_layout()) {
                    if a.plane_id != b.plane_id && a.shares_edge(b) {
                        neighbors[i].insert(j);
                    }
                }
                distance[i * n + j] = (centers[i] - centers[j]).norm();
            }
        }
        Self {
            proposals,
            voxel_size,
            params,
            compat,
            incompatible,
            neighbors,
            distance,
        }
    }

    pub fn len(&self) -> usize {
        self.proposals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.proposals.is_empty()
    }

    pub fn get(&self, id: ProposalId) -> &Proposal {
        &self.proposals[id]
    }

    pub fn proposals(&self) -> &[Proposal] {
        &self.proposals
    }

    pub fn voxel_size(&self) -> f64 {
        self.voxel_size
    }

    pub fn params(&self) -> &CompatParams {
        &self.params
    }

    pub fn compat(&self, a: ProposalId, b: ProposalId) -> Compatibility {
        self.compat[a * self.len() + b]
    }

    pub fn incompatible_with(&self, id: ProposalId) -> &MemberSet {
        &self.incompatible[id]
    }

    /// Layouts sharing an edge with `id` on a different plane.
    pub fn neighbors(&self, id: ProposalId) -> &MemberSet {
        &self.neighbors[id]
    }

    /// Center distance (bounding boxes for objects, centroids for layouts).
    pub fn distance(&self, a: ProposalId, b: ProposalId) -> f64 {
        self.distance[a * self.len() + b]
    }

    pub fn empty_set(&self) -> MemberSet {
        MemberSet::new(self.len())
    }

    pub fn object_ids(&self) -> MemberSet {
        MemberSet::from_ids(self.len(), self.proposals.iter().filter(|p| !p.is_layout()).map(|p| p.id))
    }

    pub fn layout_ids(&self, category: Option<Category>) -> MemberSet {
        MemberSet::from_ids(
            self.len(),
            self.proposals
                .iter()
                .filter(|p| p.is_layout() && category.is_none_or(|c| p.category() == c))
                .map(|p| p.id),
        )
    }

    /// No incompatible pair among `members`.
    pub fn is_feasible(&self, members: &MemberSet) -> bool {
        members.iter().all(|i| !self.incompatible[i].intersects(members))
    }

    /// Sum of tolerated IoUs over unordered member pairs.
    pub fn pair_penalty(&self, members: &MemberSet) -> f64 {
        let ids = members.to_vec();
        let mut total = 0.0;
        for (k, &i) in ids.iter().enumerate() {
            for &j in &ids[k + 1..] {
                total += self.compat(i, j).penalty();
            }
        }
        total
    }

    /// Recomputes every pairwise relation and compares it with the cache.
    pub fn verify_caches(&self) -> bool {
        let n = self.len();
        (0..n).all(|i| {
            (0..n).all(|j| {
                i == j || {
                    let c = pair_compat(&self.proposals[i], &self.proposals[j], &self.params);
                    c == self.compat(i, j)
                        && c.is_incompatible() == self.incompatible[i].contains(j)
                        && (self.proposals[i].center() - self.proposals[j].center()).norm()
                            == self.distance(i, j)
                }
            })
        })
    }

    pub fn to_json(&self) -> String {
        let file = PoolFile {
            voxel_size: self.voxel_size,
            compat: self.params.clone(),
            proposals: self.proposals.iter().map(record_of).collect(),
        };
        serde_json::to_string_pretty(&file).expect("pool serializes")
    }

    /// Decodes a pool, resolving model references through `load_mesh`.
    pub fn from_json(
        text: &str,
        load_mesh: &mut dyn FnMut(&str) -> Result<Arc<TriangleMesh>>,
    ) -> Result<Self> {
        let file: PoolFile = serde_json::from_str(text)?;
        if !(file.voxel_size.is_finite() && file.voxel_size > 0.0) {
            return Err(Error::Pool(format!("voxel_size {} must be positive", file.voxel_size)));
        }
        if file.proposals.len() > MAX_POOL {
            return Err(Error::Pool(format!("{} proposals exceed {MAX_POOL}", file.proposals.len())));
        }
        let mut kinds = Vec::with_capacity(file.proposals.len());
        for (k, rec) in file.proposals.into_iter().enumerate() {
            if rec.id() != k {
                return Err(Error::Pool(format!("proposal at position {k} has id {}", rec.id())));
            }
            kinds.push(kind_of(rec, file.voxel_size, load_mesh)?);
        }
        Ok(Self::new(kinds, file.voxel_size, file.compat))
    }

    /// Reads a pool file; OBJ paths resolve relative to its directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let base = path.parent().unwrap_or(Path::new("."));
        let mut cache: HashMap<String, Arc<TriangleMesh>> = HashMap::new();
        let mut loader = |model: &str| -> Result<Arc<TriangleMesh>> {
            if let Some(m) = cache.get(model) {
                return Ok(m.clone());
            }
            let mesh = Arc::new(parse_obj(&std::fs::read_to_string(base.join(model))?)?);
            cache.insert(model.to_string(), mesh.clone());
            Ok(mesh)
        };
        Self::from_json(&text, &mut loader)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PoolFile {
    voxel_size: f64,
    #[serde(default)]
    compat: CompatParams,
    proposals: Vec<ProposalRecord>,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
enum ProposalRecord {
    Object {
        id: usize,
        category: Category,
        model: String,
        /// Rotation and translation, row-major 4x4.
        pose: [f64; 16],
        scale: [f64; 3],
        #[serde(default)]
        surface: Option<HorizontalSurface>,
    },
    Layout {
        id: usize,
        category: Category,
        normal: [f64; 3],
        offset: f64,
        vertices: Vec<[f64; 3]>,
        plane_id: usize,
        edge_ids: Vec<usize>,
    },
}

impl ProposalRecord {
    fn id(&self) -> usize {
        match self {
            ProposalRecord::Object { id, .. } | ProposalRecord::Layout { id, .. } => *id,
        }
    }
}

fn record_of(p: &Proposal) -> ProposalRecord {
    match &p.kind {
        ProposalKind::Object(o) => ProposalRecord::Object {
            id: p.id,
            category: o.category,
            model: o.model.clone(),
            pose: o.pose.to_row_major(),
            scale: o.pose.scale.into(),
            surface: o.surface.clone(),
        },
        ProposalKind::Layout(l) => ProposalRecord::Layout {
            id: p.id,
            category: l.category,
            normal: l.polygon.plane.normal.into(),
            offset: l.polygon.plane.offset,
            vertices: l.polygon.vertices.iter().map(|v| (*v).into()).collect(),
            plane_id: l.plane_id,
            edge_ids: l.edge_ids.clone(),
        },
    }
}

fn kind_of(
    rec: ProposalRecord,
    voxel_size: f64,
    load_mesh: &mut dyn FnMut(&str) -> Result<Arc<TriangleMesh>>,
) -> Result<ProposalKind> {
    Ok(match rec {
        ProposalRecord::Object {
            category,
            model,
            pose,
            scale,
            surface,
            ..
        } => {
            let pose = RigidPoseScale::from_row_major(&pose, Vec3::from(scale))?;
            if let Some(s) = &surface {
                let finite = s.center.iter().chain(&s.half_extents).all(|v| v.is_finite()) && s.yaw.is_finite();
                if !finite || s.half_extents.iter().any(|h| *h <= 0.0) {
                    return Err(Error::Pool("invalid horizontal surface".into()));
                }
            }
            let mesh = load_mesh(&model)?;
            ProposalKind::Object(ObjectProposal::new(category, model, mesh, pose, surface, voxel_size)?)
        }
        ProposalRecord::Layout {
            category,
            normal,
            offset,
            vertices,
            plane_id,
            edge_ids,
            ..
        } => {
            let plane = Plane::new(Vec3::from(normal), offset)?;
            let polygon = Polygon3D::new(plane, vertices.into_iter().map(Vec3::from).collect())?;
            ProposalKind::Layout(LayoutProposal::new(category, polygon, plane_id, edge_ids)?)
        }
    })
}
