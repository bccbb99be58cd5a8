//! Plain-text mesh format.
//!
//! ```text
//! oblique-dg-mesh 1
//! vertices <nv>
//! <x> <y>                                  (nv lines)
//! elements <ne>
//! <v0> <v1> <v2> <x0> <y0> ... <x5> <y5> <b> (ne lines; b = boundary local edge or -1)
//! faces <nf>
//! <K> <edge> <K'> <edge'>                  (nf lines; -1 -1 for boundary faces)
//! ```
//!
//! Geometry nodes are ordered vertex 0, 1, 2, then the midnodes of edges 01, 12, 20.
//! Faces are regenerated on load and compared against the stored table.

use std::fmt::Write as _;
use std::sync::Arc;

use super::chart::UnitDisk;
use super::element::ElementGeometry;
use super::mesh::CurvedMesh;
use super::GeometryError;

const MAGIC: &str = "oblique-dg-mesh 1";

pub fn write_mesh_string(mesh: &CurvedMesh) -> String {
    let mut s = String::new();
    writeln!(s, "{MAGIC}").unwrap();
    writeln!(s, "vertices {}", mesh.vertices.len()).unwrap();
    for v in &mesh.vertices {
        writeln!(s, "{:.17e} {:.17e}", v[0], v[1]).unwrap();
    }
    writeln!(s, "elements {}", mesh.elements.len()).unwrap();
    for el in &mesh.elements {
        write!(s, "{} {} {}", el.vertex_ids[0], el.vertex_ids[1], el.vertex_ids[2]).unwrap();
        for n in &el.nodes {
            write!(s, " {:.17e} {:.17e}", n[0], n[1]).unwrap();
        }
        let b = el.boundary_edge.map(|e| e as i64).unwrap_or(-1);
        writeln!(s, " {b}").unwrap();
    }
    writeln!(s, "faces {}", mesh.faces.len()).unwrap();
    for f in &mesh.faces {
        let (kp, ep) = f
            .neighbor
            .map(|(k, e)| (k as i64, e as i64))
            .unwrap_or((-1, -1));
        writeln!(s, "{} {} {kp} {ep}", f.element, f.local_edge).unwrap();
    }
    s
}

pub fn read_mesh_str(text: &str) -> Result<CurvedMesh, GeometryError> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let mut next = |what: &str| {
        lines
            .next()
            .ok_or_else(|| GeometryError::Parse(0, format!("unexpected end of file, expected {what}")))
    };
    let (ln, magic) = next("header")?;
    if magic.trim() != MAGIC {
        return Err(GeometryError::Parse(ln + 1, "bad header".into()));
    }
    let count = |(ln, line): (usize, &str), key: &str| -> Result<usize, GeometryError> {
        let mut it = line.split_whitespace();
        if it.next() != Some(key) {
            return Err(GeometryError::Parse(ln + 1, format!("expected '{key}'")));
        }
        it.next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| GeometryError::Parse(ln + 1, "bad count".into()))
    };
    fn nums<T: std::str::FromStr>(ln: usize, line: &str, n: usize) -> Result<Vec<T>, GeometryError> {
        let v: Vec<T> = line
            .split_whitespace()
            .map(|t| t.parse::<T>())
            .collect::<Result<_, _>>()
            .map_err(|_| GeometryError::Parse(ln + 1, "bad number".into()))?;
        if v.len() != n {
            return Err(GeometryError::Parse(ln + 1, format!("expected {n} fields")));
        }
        Ok(v)
    }
    let nv = count(next("vertices")?, "vertices")?;
    let mut vertices = Vec::with_capacity(nv);
    for _ in 0..nv {
        let (ln, l) = next("vertex")?;
        let v: Vec<f64> = nums(ln, l, 2)?;
        vertices.push([v[0], v[1]]);
    }
    let ne = count(next("elements")?, "elements")?;
    let mut elements = Vec::with_capacity(ne);
    for _ in 0..ne {
        let (ln, l) = next("element")?;
        let f: Vec<f64> = nums(ln, l, 16)?;
        let ids = [f[0] as usize, f[1] as usize, f[2] as usize];
        if ids.iter().any(|&i| i >= nv) {
            return Err(GeometryError::Parse(ln + 1, "vertex id out of range".into()));
        }
        let mut nodes = [[0.0; 2]; 6];
        for (i, n) in nodes.iter_mut().enumerate() {
            *n = [f[3 + 2 * i], f[4 + 2 * i]];
        }
        let b = if f[15] < 0.0 { None } else { Some(f[15] as usize) };
        elements.push(ElementGeometry::new(ids, nodes, b)?);
    }
    let nf = count(next("faces")?, "faces")?;
    let mesh = CurvedMesh::from_elements(vertices, elements, Arc::new(UnitDisk))?;
    if nf != mesh.faces.len() {
        return Err(GeometryError::Parse(0, "face count does not match topology".into()));
    }
    for f in &mesh.faces {
        let (ln, l) = next("face")?;
        let v: Vec<i64> = nums(ln, l, 4)?;
        let (kp, ep) = f
            .neighbor
            .map(|(k, e)| (k as i64, e as i64))
            .unwrap_or((-1, -1));
        if v != [f.element as i64, f.local_edge as i64, kp, ep] {
            return Err(GeometryError::Parse(ln + 1, "face table does not match topology".into()));
        }
    }
    Ok(mesh)
}

pub fn write_mesh(mesh: &CurvedMesh, path: &std::path::Path) -> Result<(), GeometryError> {
    std::fs::write(path, write_mesh_string(mesh)).map_err(|e| GeometryError::Io(e.to_string()))
}

pub fn read_mesh(path: &std::path::Path) -> Result<CurvedMesh, GeometryError> {
    let text = std::fs::read_to_string(path).map_err(|e| GeometryError::Io(e.to_string()))?;
    read_mesh_str(&text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{disk_mesh_with_rings, Grading};

    #[test]
    fn roundtrip_preserves_mesh() {
        let m = disk_mesh_with_rings(3, Grading::TowardOrigin(0.5)).unwrap();
        let s = write_mesh_string(&m);
        let back = read_mesh_str(&s).unwrap();
        assert_eq!(back.vertices, m.vertices);
        assert_eq!(back.hash(), m.hash());
    }

    #[test]
    fn truncated_file_is_an_error() {
        let m = disk_mesh_with_rings(2, Grading::None).unwrap();
        let s = write_mesh_string(&m);
        let cut = &s[..s.len() / 2];
        assert!(read_mesh_str(cut).is_err());
    }
}
