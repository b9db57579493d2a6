use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::geometry::Vec3;

#[derive(Clone, Debug, PartialEq)]
pub struct CloudPoint {
    pub position: Vec3,
    pub normal: Vec3,
    pub label: Option<i32>,
}

struct Element {
    name: String,
    count: usize,
    properties: Vec<String>,
}

const SCALAR_TYPES: &[&str] = &[
    "char", "uchar", "short", "ushort", "int", "uint", "float", "double", "int8", "uint8",
    "int16", "uint16", "int32", "uint32", "float32", "float64",
];

/// Reads an ASCII PLY whose `vertex` element carries `x y z nx ny nz`
/// and optionally an integer `label`, in any property order.
pub fn parse_ply(text: &str) -> Result<Vec<CloudPoint>> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));
    match lines.next() {
        Some((_, "ply")) => {}
        _ => return Err(Error::parse("ply", 1, "missing 'ply' magic")),
    }
    let mut elements: Vec<Element> = Vec::new();
    let mut saw_format = false;
    loop {
        let (line, l) = lines
            .next()
            .ok_or_else(|| Error::parse("ply", 0, "header not terminated"))?;
        let tok: Vec<&str> = l.split_whitespace().collect();
        match tok.as_slice() {
            ["format", "ascii", _] => saw_format = true,
            ["format", other, ..] => {
                return Err(Error::parse("ply", line, format!("unsupported format {other}")))
            }
            ["comment", ..] | ["obj_info", ..] | [] => {}
            ["element", name, count] => {
                let count = count
                    .parse()
                    .map_err(|_| Error::parse("ply", line, "bad element count"))?;
                elements.push(Element {
                    name: name.to_string(),
                    count,
                    properties: Vec::new(),
                });
            }
            ["property", "list", ..] => {
                let el = elements
                    .last_mut()
                    .ok_or_else(|| Error::parse("ply", line, "property before element"))?;
                if el.name == "vertex" {
                    return Err(Error::parse("ply", line, "list property on vertex"));
                }
                el.properties.push("<list>".into());
            }
            ["property", ty, name] => {
                if !SCALAR_TYPES.contains(ty) {
                    return Err(Error::parse("ply", line, format!("unknown type {ty}")));
                }
                let el = elements
                    .last_mut()
                    .ok_or_else(|| Error::parse("ply", line, "property before element"))?;
                el.properties.push(name.to_string());
            }
            ["end_header"] => break,
            _ => return Err(Error::parse("ply", line, format!("unexpected header line {l:?}"))),
        }
    }
    if !saw_format {
        return Err(Error::parse("ply", 0, "missing format line"));
    }
    let mut out = Vec::new();
    for el in &elements {
        if el.name != "vertex" {
            for _ in 0..el.count {
                lines
                    .next()
                    .ok_or_else(|| Error::parse("ply", 0, format!("truncated {} element", el.name)))?;
            }
            continue;
        }
        let find = |name: &str| el.properties.iter().position(|p| p == name);
        let cols: Vec<usize> = ["x", "y", "z", "nx", "ny", "nz"]
            .iter()
            .map(|n| find(n).ok_or_else(|| Error::parse("ply", 0, format!("vertex lacks {n}"))))
            .collect::<Result<_>>()?;
        let label_col = find("label");
        out.reserve(el.count.min(1 << 24));
        for _ in 0..el.count {
            let (line, l) = lines
                .next()
                .ok_or_else(|| Error::parse("ply", 0, "truncated vertex list"))?;
            let vals: Vec<&str> = l.split_whitespace().collect();
            if vals.len() != el.properties.len() {
                return Err(Error::parse(
                    "ply",
                    line,
                    format!("expected {} values, got {}", el.properties.len(), vals.len()),
                ));
            }
            let num = |c: usize| -> Result<f64> {
                let v: f64 = vals[c]
                    .parse()
                    .map_err(|_| Error::parse("ply", line, format!("bad number {:?}", vals[c])))?;
                if v.is_finite() {
                    Ok(v)
                } else {
                    Err(Error::parse("ply", line, "non-finite value"))
                }
            };
            let position = Vec3::new(num(cols[0])?, num(cols[1])?, num(cols[2])?);
            let normal = Vec3::new(num(cols[3])?, num(cols[4])?, num(cols[5])?);
            let len = normal.norm();
            if !(len > 0.0) {
                return Err(Error::parse("ply", line, "zero normal"));
            }
            let label = match label_col {
                Some(c) => Some(
                    vals[c]
                        .parse::<i32>()
                        .map_err(|_| Error::parse("ply", line, "label must be an integer"))?,
                ),
                None => None,
            };
            out.push(CloudPoint {
                position,
                normal: normal / len,
                label,
            });
        }
    }
    if !elements.iter().any(|e| e.name == "vertex") {
        return Err(Error::parse("ply", 0, "no vertex element"));
    }
    Ok(out)
}

/// Writes an ASCII PLY; a `label` column is emitted when every point has one.
pub fn write_ply(points: &[CloudPoint]) -> String {
    let labelled = !points.is_empty() && points.iter().all(|p| p.label.is_some());
    let mut out = String::new();
    out.push_str("ply\nformat ascii 1.0\n");
    let _ = writeln!(out, "element vertex {}", points.len());
    for n in ["x", "y", "z", "nx", "ny", "nz"] {
        let _ = writeln!(out, "property double {n}");
    }
    if labelled {
        out.push_str("property int label\n");
    }
    out.push_str("end_header\n");
    for p in points {
        let (a, n) = (p.position, p.normal);
        let _ = write!(out, "{:?} {:?} {:?} {:?} {:?} {:?}", a.x, a.y, a.z, n.x, n.y, n.z);
        if labelled {
            let _ = write!(out, " {}", p.label.unwrap_or(0));
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reads_shuffled_properties() {
        let text = "ply\nformat ascii 1.0\ncomment test\nelement vertex 2\nproperty int label\n\
                    property float nz\nproperty float x\nproperty float y\nproperty float z\n\
                    property float nx\nproperty float ny\nelement face 0\nproperty list uchar int vertex_indices\n\
                    end_header\n3 1 0.5 0.25 1 0 0\n4 2 1 1 1 0 0\n";
        let pts = parse_ply(text).unwrap();
        assert_eq!(pts.len(), 2);
        assert_eq!(pts[0].position, Vec3::new(0.5, 0.25, 1.0));
        assert_eq!(pts[0].normal, Vec3::new(0.0, 0.0, 1.0));
        assert_eq!(pts[0].label, Some(3));
        assert_eq!(pts[1].normal, Vec3::new(0.0, 0.0, 1.0));
    }

    #[test]
    fn round_trip() {
        let pts = vec![
            CloudPoint {
                position: Vec3::new(0.1, -2.0, 1.0 / 3.0),
                normal: Vec3::new(0.0, 1.0, 0.0),
                label: Some(0),
            },
            CloudPoint {
                position: Vec3::new(5.0, 4.0, 3.0),
                normal: Vec3::new(1.0, 0.0, 0.0),
                label: Some(1),
            },
        ];
        assert_eq!(parse_ply(&write_ply(&pts)).unwrap(), pts);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(parse_ply("").is_err());
        assert!(parse_ply("ply\nformat binary_little_endian 1.0\nend_header\n").is_err());
        let missing_normal = "ply\nformat ascii 1.0\nelement vertex 1\nproperty float x\n\
                              property float y\nproperty float z\nend_header\n0 0 0\n";
        assert!(parse_ply(missing_normal).is_err());
        let truncated = "ply\nformat ascii 1.0\nelement vertex 2\nproperty float x\nproperty float y\n\
                         property float z\nproperty float nx\nproperty float ny\nproperty float nz\n\
                         end_header\n0 0 0 0 0 1\n";
        assert!(parse_ply(truncated).is_err());
    }
}
