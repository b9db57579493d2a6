//! Software depth rasterizer and per-pixel compositing of proposal renders.
//!
//! Cameras follow the pinhole convention with `x` right, `y` down and `z`
//! forward; pixel `(u, v)` has its center at `(u + 0.5, v + 0.5)`.
//! Stored depth is camera-space `z`.

mod raster;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use raster::{rasterize, RenderTriangle};

use crate::error::{Error, Result};
use crate::geometry::{Mat3, Plane, Vec3};
use crate::proposals::{Category, MemberSet, Proposal, ProposalId, ProposalKind, ProposalPool};

/// Closest depth the rasterizer keeps.
pub const NEAR_PLANE: f64 = 0.05;

/// Pinhole camera with a world-to-camera transform.
#[derive(Clone, Debug, PartialEq)]
pub struct View {
    pub width: usize,
    pub height: usize,
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub rotation: Mat3,
    pub translation: Vec3,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ViewRecord {
    width: usize,
    height: usize,
    fx: f64,
    fy: f64,
    cx: f64,
    cy: f64,
    /// World-to-camera, row-major 4x4.
    extrinsics: [f64; 16],
}

/// Largest image side accepted from files.
pub const MAX_IMAGE_SIDE: usize = 8192;

impl View {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        width: usize,
        height: usize,
        fx: f64,
        fy: f64,
        cx: f64,
        cy: f64,
        rotation: Mat3,
        translation: Vec3,
    ) -> Result<Self> {
        if width == 0 || height == 0 || width > MAX_IMAGE_SIDE || height > MAX_IMAGE_SIDE {
            return Err(Error::Observation(format!("bad image size {width}x{height}")));
        }
        if !(fx > 0.0 && fy > 0.0 && fx.is_finite() && fy.is_finite()) {
            return Err(Error::Observation("focal lengths must be positive".into()));
        }
        if !(0.0..width as f64).contains(&cx) || !(0.0..height as f64).contains(&cy) {
            return Err(Error::Observation("principal point outside the image".into()));
        }
        let ortho = (rotation.transpose() * rotation - Mat3::identity()).abs().max();
        if !(ortho <= 1e-6) || !((rotation.determinant() - 1.0).abs() <= 1e-6) {
            return Err(Error::InvalidPose("view rotation is not a rotation".into()));
        }
        if translation.iter().any(|t| !t.is_finite()) {
            return Err(Error::InvalidPose("non-finite view translation".into()));
        }
        Ok(Self {
            width,
            height,
            fx,
            fy,
            cx,
            cy,
            rotation,
            translation,
        })
    }

    /// Camera at `eye` looking at `target` with world `+z` up.
    pub fn look_at(eye: Vec3, target: Vec3, width: usize, height: usize, hfov_deg: f64) -> Result<Self> {
        let forward = target - eye;
        let f = forward.normalize();
        let side = f.cross(&Vec3::new(0.0, 0.0, 1.0));
        if !(forward.norm() > 0.0) || side.norm() < 1e-9 {
            return Err(Error::InvalidPose("look-at direction is vertical or zero".into()));
        }
        let x = side.normalize();
        let y = f.cross(&x);
        let rotation = Mat3::from_rows(&[x.transpose(), y.transpose(), f.transpose()]);
        let fx = 0.5 * width as f64 / (0.5 * hfov_deg.to_radians()).tan();
        Self::new(
            width,
            height,
            fx,
            fx,
            0.5 * width as f64,
            0.5 * height as f64,
            rotation,
            -(rotation * eye),
        )
    }

    pub fn to_camera(&self, p: &Vec3) -> Vec3 {
        self.rotation * p + self.translation
    }

    pub fn eye(&self) -> Vec3 {
        -(self.rotation.transpose() * self.translation)
    }

    /// Plane expressed in camera coordinates.
    pub fn plane_to_camera(&self, plane: &Plane) -> (Vec3, f64) {
        let n = self.rotation * plane.normal;
        (n, plane.offset + n.dot(&self.translation))
    }

    pub fn pixel_count(&self) -> usize {
        self.width * self.height
    }

    fn record(&self) -> ViewRecord {
        let r = &self.rotation;
        let t = &self.translation;
        ViewRecord {
            width: self.width,
            height: self.height,
            fx: self.fx,
            fy: self.fy,
            cx: self.cx,
            cy: self.cy,
            extrinsics: [
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
            ],
        }
    }

    fn from_record(r: ViewRecord) -> Result<Self> {
        let m = r.extrinsics;
        if m[12] != 0.0 || m[13] != 0.0 || m[14] != 0.0 || m[15] != 1.0 {
            return Err(Error::InvalidPose("extrinsics last row must be 0 0 0 1".into()));
        }
        let rotation = Mat3::new(m[0], m[1], m[2], m[4], m[5], m[6], m[8], m[9], m[10]);
        Self::new(r.width, r.height, r.fx, r.fy, r.cx, r.cy, rotation, Vec3::new(m[3], m[7], m[11]))
    }
}

pub fn views_to_json(views: &[View]) -> String {
    let recs: Vec<ViewRecord> = views.iter().map(View::record).collect();
    serde_json::to_string_pretty(&recs).expect("views serialize")
}

pub fn views_from_json(text: &str) -> Result<Vec<View>> {
    let recs: Vec<ViewRecord> = serde_json::from_str(text)?;
    recs.into_iter().map(View::from_record).collect()
}

/// Rectangular depth tile; `f32::INFINITY` marks uncovered pixels.
#[derive(Clone, Debug, PartialEq)]
pub struct DepthPatch {
    pub x0: usize,
    pub y0: usize,
    pub w: usize,
    pub h: usize,
    pub depth: Vec<f32>,
}

impl DepthPatch {
    /// Depth at image pixel `(x, y)`; infinite outside the tile.
    pub fn at(&self, x: usize, y: usize) -> f32 {
        if x < self.x0 || y < self.y0 || x >= self.x0 + self.w || y >= self.y0 + self.h {
            f32::INFINITY
        } else {
            self.depth[(y - self.y0) * self.w + (x - self.x0)]
        }
    }

    pub fn covered(&self) -> usize {
        self.depth.iter().filter(|d| d.is_finite()).count()
    }

    pub fn rows(&self) -> std::ops::Range<usize> {
        self.y0..self.y0 + self.h
    }
}

/// A proposal rendered alone into every view.
#[derive(Clone, Debug, PartialEq)]
pub struct ProposalRender {
    pub category: Category,
    /// One tile per view, `None` when nothing is covered.
    pub views: Vec<Option<DepthPatch>>,
}

impl ProposalRender {
    pub fn coverage(&self, view: usize) -> usize {
        self.views[view].as_ref().map_or(0, DepthPatch::covered)
    }

    /// Solo-render visibility: at least `min_pixels` covered.
    pub fn visible(&self, view: usize, min_pixels: usize) -> bool {
        self.coverage(view) >= min_pixels.max(1)
    }
}

/// World-space triangles of a proposal, with the supporting plane for layouts.
pub fn proposal_triangles(p: &Proposal) -> Vec<RenderTriangle> {
    match &p.kind {
        ProposalKind::Object(o) => {
            let mesh = o.posed_mesh();
            (0..mesh.triangles.len())
                .map(|k| RenderTriangle {
                    vertices: mesh.triangle(k),
                    plane: None,
                })
                .collect()
        }
        ProposalKind::Layout(l) => {
            let v = &l.polygon.vertices;
            l.polygon
                .triangles()
                .into_iter()
                .map(|t| RenderTriangle {
                    vertices: [v[t[0]], v[t[1]], v[t[2]]],
                    plane: Some(l.polygon.plane),
                })
                .collect()
        }
    }
}

pub fn prerender(p: &Proposal, views: &[View]) -> ProposalRender {
    let tris = proposal_triangles(p);
    ProposalRender {
        category: p.category(),
        views: views.iter().map(|v| rasterize(&tris, v)).collect(),
    }
}

/// Prerenders of every pool proposal, indexed by id.
pub fn prerender_pool(pool: &ProposalPool, views: &[View]) -> Vec<ProposalRender> {
    pool.proposals().par_iter().map(|p| prerender(p, views)).collect()
}

/// Marker for pixels no member covers.
pub const NO_OWNER: u32 = u32::MAX;

/// Per-view composite: minimum depth and the proposal that produced it.
#[derive(Clone, Debug, PartialEq)]
pub struct Composite {
    pub width: usize,
    pub height: usize,
    pub depth: Vec<f32>,
    pub owner: Vec<u32>,
}

impl Composite {
    pub fn empty(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            depth: vec![f32::INFINITY; width * height],
            owner: vec![NO_OWNER; width * height],
        }
    }

    /// Category of the front-most member at pixel `i`.
    pub fn category_at(&self, i: usize, renders: &[ProposalRender]) -> Option<Category> {
        match self.owner[i] {
            NO_OWNER => None,
            id => Some(renders[id as usize].category),
        }
    }

    /// Folds one member's tile in. Equal depths go to the lower id.
    pub fn add(&mut self, id: ProposalId, patch: &DepthPatch) {
        for py in 0..patch.h {
            let y = patch.y0 + py;
            self.add_row(id, patch, y);
        }
    }

    pub(crate) fn add_row(&mut self, id: ProposalId, patch: &DepthPatch, y: usize) {
        let r = y * self.width..(y + 1) * self.width;
        overlay_row(&mut self.depth[r.clone()], &mut self.owner[r], id, patch, y);
    }
}

/// Folds row `y` of `patch` into one full-width composite row.
pub(crate) fn overlay_row(depth: &mut [f32], owner: &mut [u32], id: ProposalId, patch: &DepthPatch, y: usize) {
    let py = y - patch.y0;
    let src = &patch.depth[py * patch.w..(py + 1) * patch.w];
    let id = id as u32;
    for (k, &d) in src.iter().enumerate() {
        let i = patch.x0 + k;
        if d < depth[i] || (d == depth[i] && d.is_finite() && id < owner[i]) {
            depth[i] = d;
            owner[i] = id;
        }
    }
}

/// Composite of `members` in `view`.
pub fn composite(renders: &[ProposalRender], members: &MemberSet, view: &View, view_index: usize) -> Composite {
    let mut out = Composite::empty(view.width, view.height);
    for id in members.iter() {
        if let Some(patch) = &renders[id].views[view_index] {
            out.add(id, patch);
        }
    }
    out
}

/// Whether `id`'s solo render covers at least `min_pixels` in `view_index`.
pub fn visible(renders: &[ProposalRender], id: ProposalId, view_index: usize, min_pixels: usize) -> bool {
    renders[id].visible(view_index, min_pixels)
}
