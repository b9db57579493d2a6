use crate::geometry::{HorizontalSurface, TriangleMesh, Vec3};
use crate::proposals::Category;

/// A parametric furniture model in its local frame: centered in `xy`,
/// standing on `z = 0`, back towards `+y`.
#[derive(Clone, Debug)]
pub struct Model {
    pub name: &'static str,
    pub category: Category,
    pub mesh: TriangleMesh,
    /// Local-frame support surface.
    pub surface: Option<HorizontalSurface>,
}

fn cuboid(lo: [f64; 3], hi: [f64; 3]) -> TriangleMesh {
    TriangleMesh::cuboid(Vec3::from(lo), Vec3::from(hi))
}

fn legs(half_x: f64, half_y: f64, side: f64, height: f64) -> Vec<TriangleMesh> {
    let mut out = Vec::with_capacity(4);
    for sx in [-1.0, 1.0] {
        for sy in [-1.0, 1.0] {
            let cx = sx * (half_x - side / 2.0);
            let cy = sy * (half_y - side / 2.0);
            out.push(cuboid(
                [cx - side / 2.0, cy - side / 2.0, 0.0],
                [cx + side / 2.0, cy + side / 2.0, height],
            ));
        }
    }
    out
}

fn surface(z: f64, hx: f64, hy: f64, cy: f64) -> HorizontalSurface {
    HorizontalSurface {
        center: Vec3::new(0.0, cy, z),
        half_extents: [hx, hy],
        yaw: 0.0,
    }
}

/// Seat on four legs with a backrest.
pub fn chair(name: &'static str, width: f64, depth: f64, seat: f64, back: f64) -> Model {
    let (hx, hy) = (width / 2.0, depth / 2.0);
    let t = 0.05;
    let mut parts = legs(hx, hy, 0.05, seat - t);
    parts.push(cuboid([-hx, -hy, seat - t], [hx, hy, seat]));
    parts.push(cuboid([-hx, hy - t, seat], [hx, hy, seat + back]));
    Model {
        name,
        category: Category::Chair,
        mesh: TriangleMesh::merge(&parts),
        surface: None,
    }
}

/// Top on four legs.
pub fn table(name: &'static str, width: f64, depth: f64, height: f64) -> Model {
    let (hx, hy) = (width / 2.0, depth / 2.0);
    let t = 0.04;
    let mut parts = legs(hx, hy, 0.06, height - t);
    parts.push(cuboid([-hx, -hy, height - t], [hx, hy, height]));
    Model {
        name,
        category: Category::Table,
        mesh: TriangleMesh::merge(&parts),
        surface: Some(surface(height, hx, hy, 0.0)),
    }
}

/// Base, backrest and two arms.
pub fn sofa(name: &'static str, width: f64, depth: f64) -> Model {
    let (hx, hy) = (width / 2.0, depth / 2.0);
    let (seat, back_t, arm_w) = (0.42, 0.2, 0.15);
    let parts = vec![
        cuboid([-hx, -hy, 0.0], [hx, hy, seat]),
        cuboid([-hx, hy - back_t, seat], [hx, hy, seat + 0.4]),
        cuboid([-hx, -hy, seat], [-hx + arm_w, hy - back_t, seat + 0.2]),
        cuboid([hx - arm_w, -hy, seat], [hx, hy - back_t, seat + 0.2]),
    ];
    Model {
        name,
        category: Category::Sofa,
        mesh: TriangleMesh::merge(&parts),
        surface: Some(surface(seat, hx - arm_w, (depth - back_t) / 2.0, -back_t / 2.0)),
    }
}

/// Mattress block with a headboard.
pub fn bed(name: &'static str, width: f64, length: f64) -> Model {
    let (hx, hy) = (width / 2.0, length / 2.0);
    let top = 0.5;
    let parts = vec![
        cuboid([-hx, -hy, 0.0], [hx, hy - 0.08, top]),
        cuboid([-hx, hy - 0.08, 0.0], [hx, hy, top + 0.5]),
    ];
    Model {
        name,
        category: Category::Bed,
        mesh: TriangleMesh::merge(&parts),
        surface: Some(surface(top, hx, hy - 0.04, -0.04)),
    }
}

/// Two variants per object category.
pub fn model_library() -> Vec<Model> {
    vec![
        chair("chair_a", 0.45, 0.45, 0.45, 0.45),
        chair("chair_b", 0.52, 0.50, 0.48, 0.40),
        table("table_a", 1.2, 0.8, 0.75),
        table("table_b", 0.9, 0.9, 0.72),
        sofa("sofa_a", 1.8, 0.85),
        sofa("sofa_b", 1.5, 0.9),
        bed("bed_a", 1.5, 2.0),
        bed("bed_b", 1.0, 2.0),
    ]
}

pub fn models_of(library: &[Model], category: Category) -> Vec<&Model> {
    library.iter().filter(|m| m.category == category).collect()
}
