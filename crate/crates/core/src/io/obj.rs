use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::geometry::{TriangleMesh, Vec3};

/// Parses the `v` / `f` subset of Wavefront OBJ.
///
/// Faces with more than three corners are fan-triangulated. Texture and
/// normal indices (`f 1/2/3`) are accepted and ignored, negative indices
/// count from the end. All other statements are skipped.
pub fn parse_obj(text: &str) -> Result<TriangleMesh> {
    let mut vertices = Vec::new();
    let mut triangles = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = lineno + 1;
        let content = raw.split('#').next().unwrap_or("");
        let mut tokens = content.split_whitespace();
        match tokens.next() {
            Some("v") => {
                let mut xyz = [0.0; 3];
                for c in &mut xyz {
                    let tok = tokens
                        .next()
                        .ok_or_else(|| Error::parse("obj", line, "vertex needs 3 coordinates"))?;
                    *c = tok
                        .parse::<f64>()
                        .map_err(|e| Error::parse("obj", line, format!("bad coordinate {tok:?}: {e}")))?;
                    if !c.is_finite() {
                        return Err(Error::parse("obj", line, "non-finite coordinate"));
                    }
                }
                vertices.push(Vec3::from(xyz));
            }
            Some("f") => {
                let mut idx = Vec::new();
                for tok in tokens {
                    let head = tok.split('/').next().unwrap_or("");
                    let i: i64 = head
                        .parse()
                        .map_err(|e| Error::parse("obj", line, format!("bad index {tok:?}: {e}")))?;
                    let n = vertices.len() as i64;
                    let resolved = match i {
                        0 => return Err(Error::parse("obj", line, "index 0 is invalid")),
                        i if i > 0 => i - 1,
                        i => n + i,
                    };
                    if resolved < 0 || resolved >= n {
                        return Err(Error::parse("obj", line, format!("index {i} out of range")));
                    }
                    idx.push(resolved as u32);
                }
                if idx.len() < 3 {
                    return Err(Error::parse("obj", line, "face needs at least 3 vertices"));
                }
                for k in 1..idx.len() - 1 {
                    triangles.push([idx[0], idx[k], idx[k + 1]]);
                }
            }
            _ => {}
        }
    }
    if triangles.is_empty() {
        return Err(Error::DegenerateMesh("OBJ has no faces".into()));
    }
    TriangleMesh::new(vertices, triangles)
}

/// Writes `v` and `f` lines with shortest round-trip float formatting.
pub fn write_obj(mesh: &TriangleMesh) -> String {
    let mut out = String::new();
    for v in &mesh.vertices {
        let _ = writeln!(out, "v {:?} {:?} {:?}", v.x, v.y, v.z);
    }
    for t in &mesh.triangles {
        let _ = writeln!(out, "f {} {} {}", t[0] + 1, t[1] + 1, t[2] + 1);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quad_face_is_fanned() {
        let m = parse_obj("# quad\nv 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nvn 0 0 1\nf 1//1 2//1 3//1 4//1\n")
            .unwrap();
        assert_eq!(m.triangles, vec![[0, 1, 2], [0, 2, 3]]);
    }

    #[test]
    fn negative_indices() {
        let m = parse_obj("v 0 0 0\nv 1 0 0\nv 0 1 0\nf -3 -2 -1\n").unwrap();
        assert_eq!(m.triangles, vec![[0, 1, 2]]);
    }

    #[test]
    fn round_trip_is_exact() {
        let m = TriangleMesh::cuboid(Vec3::new(-0.1, 0.2, 1.0 / 3.0), Vec3::new(0.7, 0.9, 1.1));
        assert_eq!(parse_obj(&write_obj(&m)).unwrap(), m);
    }

    #[test]
    fn errors_carry_line_numbers() {
        let e = parse_obj("v 0 0 0\nv 1 0\n").unwrap_err();
        assert!(matches!(e, Error::Parse { line: 2, .. }), "{e}");
        assert!(parse_obj("v 0 0 0\nf 1 2 3\n").is_err());
        assert!(parse_obj("v 0 0 0\n").is_err());
        assert!(parse_obj("v nan 0 0\n").is_err());
    }
}
