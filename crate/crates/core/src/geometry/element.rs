use crate::fem::MapJet;

use super::GeometryError;

/// Reference vertices of the unit triangle.
pub const REF_VERTICES: [[f64; 2]; 3] = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];

/// Reference point at parameter `t` along local edge `e` (from vertex e to vertex e+1).
pub fn edge_point(e: usize, t: f64) -> [f64; 2] {
    let a = REF_VERTICES[e];
    let b = REF_VERTICES[(e + 1) % 3];
    [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]
}

/// Reference tangent d(edge_point)/dt of local edge `e`.
pub fn edge_direction(e: usize) -> [f64; 2] {
    let a = REF_VERTICES[e];
    let b = REF_VERTICES[(e + 1) % 3];
    [b[0] - a[0], b[1] - a[1]]
}

/// Order-2 triangle: three vertices plus three edge midnodes (node 3 + e sits on edge e).
#[derive(Debug, Clone)]
pub struct ElementGeometry {
    pub vertex_ids: [usize; 3],
    pub nodes: [[f64; 2]; 6],
    /// Local edge lying on the curved boundary, if any.
    pub boundary_edge: Option<usize>,
    /// True when some midnode is off its edge midpoint.
    pub curved: bool,
    /// Columns v1 - v0 and v2 - v0 of the affine part.
    pub affine: [[f64; 2]; 2],
    pub affine_part_norm: f64,
    pub map_deviation: f64,
    pub h: f64,
    pub rho: f64,
}

fn spectral_norm(m: [[f64; 2]; 2]) -> f64 {
    // largest singular value of a 2x2 matrix
    let a = m[0][0] * m[0][0] + m[1][0] * m[1][0];
    let b = m[0][0] * m[0][1] + m[1][0] * m[1][1];
    let c = m[0][1] * m[0][1] + m[1][1] * m[1][1];
    let tr = a + c;
    let disc = ((a - c) * (a - c) + 4.0 * b * b).sqrt();
    (0.5 * (tr + disc)).max(0.0).sqrt()
}

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

impl ElementGeometry {
    pub fn new(
        vertex_ids: [usize; 3],
        nodes: [[f64; 2]; 6],
        boundary_edge: Option<usize>,
    ) -> Result<Self, GeometryError> {
        let v = [nodes[0], nodes[1], nodes[2]];
        let affine = [
            [v[1][0] - v[0][0], v[2][0] - v[0][0]],
            [v[1][1] - v[0][1], v[2][1] - v[0][1]],
        ];
        let det = affine[0][0] * affine[1][1] - affine[0][1] * affine[1][0];
        let edges = [dist(v[0], v[1]), dist(v[1], v[2]), dist(v[2], v[0])];
        let h = edges.iter().cloned().fold(0.0, f64::max);
        let area = 0.5 * det;
        let perimeter: f64 = edges.iter().sum();
        let rho = 4.0 * area.abs() / perimeter;
        let mut curved = false;
        for e in 0..3 {
            let a = v[e];
            let b = v[(e + 1) % 3];
            let m = nodes[3 + e];
            let mid = [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])];
            if dist(m, mid) > 1e-14 * h.max(1.0) {
                curved = true;
            }
        }
        let mut el = Self {
            vertex_ids,
            nodes,
            boundary_edge,
            curved,
            affine,
            affine_part_norm: spectral_norm(affine),
            map_deviation: 0.0,
            h,
            rho,
        };
        if det <= 0.0 {
            return Err(GeometryError::InvertedElement {
                vertices: vertex_ids,
            });
        }
        if curved {
            let binv = [
                [affine[1][1] / det, -affine[0][1] / det],
                [-affine[1][0] / det, affine[0][0] / det],
            ];
            let mut ck: f64 = 0.0;
            for xh in REF_VERTICES {
                let j = el.map(xh).jac;
                let d = [
                    [j[0][0] - affine[0][0], j[0][1] - affine[0][1]],
                    [j[1][0] - affine[1][0], j[1][1] - affine[1][1]],
                ];
                let mut prod = [[0.0; 2]; 2];
                for a in 0..2 {
                    for b in 0..2 {
                        prod[a][b] = d[a][0] * binv[0][b] + d[a][1] * binv[1][b];
                    }
                }
                ck = ck.max(spectral_norm(prod));
            }
            el.map_deviation = ck;
        }
        if el.map_deviation >= 1.0 {
            return Err(GeometryError::InadmissibleCurvedElement {
                vertices: vertex_ids,
                deviation: el.map_deviation,
            });
        }
        Ok(el)
    }

    /// Area of the straight triangle through the vertices.
    pub fn affine_area(&self) -> f64 {
        let a = self.affine;
        0.5 * (a[0][0] * a[1][1] - a[0][1] * a[1][0])
    }

    pub fn vertex(&self, i: usize) -> [f64; 2] {
        self.nodes[i]
    }

    pub fn centroid(&self) -> [f64; 2] {
        let v = &self.nodes;
        [
            (v[0][0] + v[1][0] + v[2][0]) / 3.0,
            (v[0][1] + v[1][1] + v[2][1]) / 3.0,
        ]
    }

    /// Quadratic Lagrange map with its Jacobian and second derivatives at `xh`.
    pub fn map(&self, xh: [f64; 2]) -> MapJet {
        let n = &self.nodes;
        if !self.curved {
            let a = self.affine;
            return MapJet {
                x: [
                    n[0][0] + a[0][0] * xh[0] + a[0][1] * xh[1],
                    n[0][1] + a[1][0] * xh[0] + a[1][1] * xh[1],
                ],
                jac: a,
                hess: [[0.0; 3]; 2],
            };
        }
        let l = [1.0 - xh[0] - xh[1], xh[0], xh[1]];
        let dl = [[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]];
        let mut out = MapJet::default();
        let mut add = |node: [f64; 2], val: f64, grad: [f64; 2], hess: [f64; 3]| {
            for i in 0..2 {
                out.x[i] += node[i] * val;
                out.jac[i][0] += node[i] * grad[0];
                out.jac[i][1] += node[i] * grad[1];
                for k in 0..3 {
                    out.hess[i][k] += node[i] * hess[k];
                }
            }
        };
        for i in 0..3 {
            let g = dl[i];
            add(
                n[i],
                l[i] * (2.0 * l[i] - 1.0),
                [(4.0 * l[i] - 1.0) * g[0], (4.0 * l[i] - 1.0) * g[1]],
                [4.0 * g[0] * g[0], 4.0 * g[0] * g[1], 4.0 * g[1] * g[1]],
            );
        }
        for e in 0..3 {
            let (a, b) = (e, (e + 1) % 3);
            let (ga, gb) = (dl[a], dl[b]);
            add(
                n[3 + e],
                4.0 * l[a] * l[b],
                [
                    4.0 * (l[a] * gb[0] + l[b] * ga[0]),
                    4.0 * (l[a] * gb[1] + l[b] * ga[1]),
                ],
                [
                    8.0 * ga[0] * gb[0],
                    4.0 * (ga[0] * gb[1] + gb[0] * ga[1]),
                    8.0 * ga[1] * gb[1],
                ],
            );
        }
        out
    }

    /// Inverse map by Newton iteration started from the affine inverse.
    pub fn inverse_map(&self, x: [f64; 2]) -> Result<[f64; 2], GeometryError> {
        let a = self.affine;
        let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
        let d = [x[0] - self.nodes[0][0], x[1] - self.nodes[0][1]];
        let mut xh = [
            (a[1][1] * d[0] - a[0][1] * d[1]) / det,
            (-a[1][0] * d[0] + a[0][0] * d[1]) / det,
        ];
        if !self.curved {
            return Ok(xh);
        }
        for _ in 0..50 {
            let m = self.map(xh);
            let r = [m.x[0] - x[0], m.x[1] - x[1]];
            let j = m.jac;
            let det = m.det();
            let step = [
                (j[1][1] * r[0] - j[0][1] * r[1]) / det,
                (-j[1][0] * r[0] + j[0][0] * r[1]) / det,
            ];
            xh[0] -= step[0];
            xh[1] -= step[1];
            if step[0].hypot(step[1]) < 1e-12 {
                return Ok(xh);
            }
        }
        Err(GeometryError::InverseMapDiverged(x))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_triangle() -> ElementGeometry {
        ElementGeometry::new(
            [0, 1, 2],
            [
                [0.0, 0.0],
                [1.0, 0.0],
                [0.0, 1.0],
                [0.5, 0.0],
                [0.5, 0.5],
                [0.0, 0.5],
            ],
            None,
        )
        .unwrap()
    }

    fn curved_disk_element() -> ElementGeometry {
        let a0 = 0.3f64;
        let a1 = 0.7f64;
        let am = 0.5 * (a0 + a1);
        let v0 = [0.8 * am.cos(), 0.8 * am.sin()];
        let v1 = [a0.cos(), a0.sin()];
        let v2 = [a1.cos(), a1.sin()];
        let mid = |p: [f64; 2], q: [f64; 2]| [0.5 * (p[0] + q[0]), 0.5 * (p[1] + q[1])];
        ElementGeometry::new(
            [0, 1, 2],
            [v0, v1, v2, mid(v0, v1), [am.cos(), am.sin()], mid(v2, v0)],
            Some(1),
        )
        .unwrap()
    }

    #[test]
    fn straight_map_is_identity_on_unit_triangle() {
        let el = unit_triangle();
        let m = el.map([1.0 / 3.0, 1.0 / 3.0]);
        assert!((m.x[0] - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(m.jac, [[1.0, 0.0], [0.0, 1.0]]);
        assert!(m.is_affine());
        assert!(!el.curved);
        assert_eq!(el.map_deviation, 0.0);
    }

    #[test]
    fn inradius_ratio_of_unit_triangle() {
        let el = unit_triangle();
        assert!((el.h - 2f64.sqrt()).abs() < 1e-15);
        assert!((el.h / el.rho - (1.0 + 2f64.sqrt())).abs() < 1e-12);
    }

    #[test]
    fn map_interpolates_nodes() {
        let el = curved_disk_element();
        let refs = [
            [0.0, 0.0],
            [1.0, 0.0],
            [0.0, 1.0],
            [0.5, 0.0],
            [0.5, 0.5],
            [0.0, 0.5],
        ];
        for (r, n) in refs.iter().zip(&el.nodes) {
            let x = el.map(*r).x;
            assert!((x[0] - n[0]).abs() < 1e-14 && (x[1] - n[1]).abs() < 1e-14);
        }
        assert!(el.curved);
        assert!(el.map_deviation > 0.0 && el.map_deviation < 1.0);
    }

    #[test]
    fn jacobian_matches_finite_differences_on_curved_edge() {
        let el = curved_disk_element();
        let d = 1e-5;
        for t in [0.1, 0.5, 0.85] {
            let xh = edge_point(1, t);
            let m = el.map(xh);
            assert!(m.det() > 0.0);
            for k in 0..2 {
                let mut p = xh;
                let mut q = xh;
                p[k] += d;
                q[k] -= d;
                let fp = el.map(p).x;
                let fq = el.map(q).x;
                for i in 0..2 {
                    let fd = (fp[i] - fq[i]) / (2.0 * d);
                    assert!((fd - m.jac[i][k]).abs() < 1e-6);
                }
                let jp = el.map(p).jac;
                let jq = el.map(q).jac;
                for i in 0..2 {
                    // second derivative of component i in direction k, then j
                    let h_kk = (jp[i][k] - jq[i][k]) / (2.0 * d);
                    let idx = if k == 0 { 0 } else { 2 };
                    assert!((h_kk - m.hess[i][idx]).abs() < 1e-6);
                }
            }
        }
    }

    #[test]
    fn inverse_map_roundtrip() {
        let el = curved_disk_element();
        let xh = [0.2, 0.35];
        let x = el.map(xh).x;
        let back = el.inverse_map(x).unwrap();
        assert!((back[0] - xh[0]).abs() < 1e-11 && (back[1] - xh[1]).abs() < 1e-11);
    }

    #[test]
    fn inverted_triangle_is_rejected() {
        let r = ElementGeometry::new(
            [0, 2, 1],
            [
                [0.0, 0.0],
                [0.0, 1.0],
                [1.0, 0.0],
                [0.0, 0.5],
                [0.5, 0.5],
                [0.5, 0.0],
            ],
            None,
        );
        assert!(matches!(r, Err(GeometryError::InvertedElement { .. })));
    }
}
