use std::f64::consts::PI;
use std::sync::Arc;

use super::chart::{DomainChart, UnitDisk};
use super::element::ElementGeometry;
use super::mesh::CurvedMesh;
use super::GeometryError;

/// Radial grading of interior vertices.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Grading {
    None,
    /// r -> r^(1/exponent), exponent in (0, 1]; smaller exponents cluster rings at the origin.
    TowardOrigin(f64),
}

/// Number of sectors; sector edges lie on the coordinate axes and diagonals.
const SECTORS: usize = 8;

/// Ring counts of the quasi-uniform level ladder.
const UNIFORM_RINGS: [usize; 7] = [3, 5, 8, 13, 25, 47, 92];

/// Rings used by quasi-uniform level `level`.
pub fn uniform_rings(level: usize) -> usize {
    UNIFORM_RINGS
        .get(level)
        .cloned()
        .unwrap_or_else(|| UNIFORM_RINGS[UNIFORM_RINGS.len() - 1] << (level + 1 - UNIFORM_RINGS.len()))
}

/// Rings used by the graded ladder, growing by sqrt(2) per level.
pub fn graded_rings(level: usize) -> usize {
    (2.0 * 2f64.sqrt().powi(level as i32)).round() as usize
}

/// Disk mesh at `level`: the quasi-uniform ladder without grading, the sqrt(2) ladder with it.
pub fn generate_disk_mesh(level: usize, grading: Grading) -> Result<CurvedMesh, GeometryError> {
    let rings = match grading {
        Grading::None => uniform_rings(level),
        Grading::TowardOrigin(_) => graded_rings(level),
    };
    disk_mesh_with_rings(rings, grading)
}

/// Concentric-ring triangulation of the unit disk with `rings` rings of 8k vertices each.
pub fn disk_mesh_with_rings(rings: usize, grading: Grading) -> Result<CurvedMesh, GeometryError> {
    if rings == 0 {
        return Err(GeometryError::InvalidParameter("ring count must be positive".into()));
    }
    let exponent = match grading {
        Grading::None => 1.0,
        Grading::TowardOrigin(e) => {
            if !(e > 0.0 && e <= 1.0) {
                return Err(GeometryError::InvalidParameter(format!(
                    "grading exponent {e} not in (0, 1]"
                )));
            }
            e
        }
    };
    let chart = UnitDisk;
    let n = rings;
    let offset = |k: usize| if k == 0 { 0 } else { 1 + 4 * k * (k - 1) };
    let mut vertices = vec![[0.0, 0.0]];
    for k in 1..=n {
        let r = if k == n {
            1.0
        } else {
            (k as f64 / n as f64).powf(1.0 / exponent)
        };
        let m = SECTORS * k;
        for j in 0..m {
            let a = 2.0 * PI * j as f64 / m as f64;
            vertices.push([r * a.cos(), r * a.sin()]);
        }
    }
    let ring_vertex = |k: usize, j: usize| {
        if k == 0 {
            0
        } else {
            offset(k) + j % (SECTORS * k)
        }
    };
    let mut elements = Vec::with_capacity(SECTORS * n * n);
    for k in 1..=n {
        for s in 0..SECTORS {
            for i in 0..k {
                let a = ring_vertex(k, s * k + i);
                let b = ring_vertex(k, s * k + i + 1);
                let c = ring_vertex(k - 1, s * (k - 1) + i);
                let boundary = if k == n { Some(0) } else { None };
                elements.push(make_element(&vertices, [a, b, c], boundary, &chart)?);
            }
            for i in 0..k.saturating_sub(1) {
                let a = ring_vertex(k - 1, s * (k - 1) + i);
                let b = ring_vertex(k, s * k + i + 1);
                let c = ring_vertex(k - 1, s * (k - 1) + i + 1);
                elements.push(make_element(&vertices, [a, b, c], None, &chart)?);
            }
        }
    }
    CurvedMesh::from_elements(vertices, elements, Arc::new(chart))
}

fn make_element(
    vertices: &[[f64; 2]],
    ids: [usize; 3],
    boundary_edge: Option<usize>,
    chart: &dyn DomainChart,
) -> Result<ElementGeometry, GeometryError> {
    let v = [vertices[ids[0]], vertices[ids[1]], vertices[ids[2]]];
    let det = (v[1][0] - v[0][0]) * (v[2][1] - v[0][1]) - (v[1][1] - v[0][1]) * (v[2][0] - v[0][0]);
    if det <= 0.0 {
        return Err(GeometryError::InvertedElement { vertices: ids });
    }
    let mut nodes = [v[0], v[1], v[2], [0.0; 2], [0.0; 2], [0.0; 2]];
    for e in 0..3 {
        let a = v[e];
        let b = v[(e + 1) % 3];
        let mid = [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])];
        nodes[3 + e] = if boundary_edge == Some(e) {
            chart.project(mid)?
        } else {
            mid
        };
    }
    ElementGeometry::new(ids, nodes, boundary_edge)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::{segment_rule, triangle_rule};
    use crate::geometry::check_mesh;

    #[test]
    fn element_count_is_eight_n_squared() {
        for n in 1..6 {
            let m = disk_mesh_with_rings(n, Grading::None).unwrap();
            assert_eq!(m.n_elements(), 8 * n * n);
            let nb = m.faces.iter().filter(|f| f.neighbor.is_none()).count();
            assert_eq!(nb, 8 * n);
        }
    }

    #[test]
    fn boundary_midnodes_lie_on_circle() {
        let m = generate_disk_mesh(1, Grading::None).unwrap();
        for el in &m.elements {
            if let Some(e) = el.boundary_edge {
                let x = el.nodes[3 + e];
                assert!((x[0].hypot(x[1]) - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn generated_meshes_pass_checks() {
        for (n, g) in [(3, Grading::None), (5, Grading::TowardOrigin(0.5)), (4, Grading::TowardOrigin(1.0))] {
            let m = disk_mesh_with_rings(n, g).unwrap();
            let c = check_mesh(&m, 8).unwrap();
            assert!(c.ok(), "{:?}", c.violations);
        }
    }

    #[test]
    fn area_and_circumference() {
        let m = disk_mesh_with_rings(26, Grading::None).unwrap();
        assert!(m.h() <= 0.05);
        let rule = triangle_rule(6).unwrap();
        let area: f64 = m
            .elements
            .iter()
            .map(|el| {
                rule.points
                    .iter()
                    .zip(&rule.weights)
                    .map(|(x, w)| w * el.map(*x).det())
                    .sum::<f64>()
            })
            .sum();
        assert!((area - PI).abs() < 1e-6, "{area}");
        let seg = segment_rule(7).unwrap();
        let mut len = 0.0;
        for f in 0..m.faces.len() {
            if m.faces[f].neighbor.is_none() {
                let r = m.face_geometry(f, &seg).unwrap();
                len += r.weights.iter().sum::<f64>();
                for h in &r.curvature {
                    assert!((h - 1.0).abs() < 1e-8);
                }
            }
        }
        assert!((len - 2.0 * PI).abs() < 1e-6, "{len}");
    }

    #[test]
    fn bad_grading_is_rejected() {
        assert!(disk_mesh_with_rings(3, Grading::TowardOrigin(1.5)).is_err());
        assert!(disk_mesh_with_rings(3, Grading::TowardOrigin(0.0)).is_err());
    }

    #[test]
    fn graded_level_seven_size() {
        let m = generate_disk_mesh(7, Grading::TowardOrigin(0.5)).unwrap();
        let n = m.n_elements() as f64;
        assert!(n > 4532.0 / 2.0 && n < 4532.0 * 2.0);
    }
}
