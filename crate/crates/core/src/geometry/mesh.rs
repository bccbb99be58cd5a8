use std::collections::HashMap;
use std::sync::Arc;

use sha2::{Digest, Sha256};

use crate::fem::{MapJet, SegmentRule};

use super::chart::DomainChart;
use super::element::{edge_direction, edge_point, ElementGeometry};
use super::GeometryError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FaceKind {
    Interior,
    Boundary,
}

/// Topological face: one or two elements sharing an edge.
#[derive(Debug, Clone)]
pub struct Face {
    pub kind: FaceKind,
    pub element: usize,
    pub local_edge: usize,
    /// Neighbour element and its local edge for interior faces.
    pub neighbor: Option<(usize, usize)>,
    pub h_tilde: f64,
}

/// Face quadrature data. The normal is outward from `element`; T = (-n2, n1).
#[derive(Debug, Clone)]
pub struct FaceRecord {
    pub face: usize,
    pub kind: FaceKind,
    pub element: usize,
    pub local_edge: usize,
    pub neighbor: Option<(usize, usize)>,
    pub chart_id: Option<usize>,
    pub h_tilde: f64,
    /// Reference points in `element`.
    pub ref_points: Vec<[f64; 2]>,
    /// Matching reference points in the neighbour (interior faces).
    pub ref_points_neighbor: Vec<[f64; 2]>,
    pub map_jets: Vec<MapJet>,
    pub map_jets_neighbor: Vec<MapJet>,
    pub points: Vec<[f64; 2]>,
    /// Arc-length weights.
    pub weights: Vec<f64>,
    /// |d x / d t| of the edge parameterisation.
    pub speed: Vec<f64>,
    pub normals: Vec<[f64; 2]>,
    pub tangents: Vec<[f64; 2]>,
    /// Chart projections of the points (boundary faces).
    pub projected: Vec<[f64; 2]>,
    /// Mean curvature of the boundary at the projected points (boundary faces).
    pub curvature: Vec<f64>,
    /// Reference abscissae along the edge, in [0, 1].
    pub abscissae: Vec<f64>,
}

impl FaceRecord {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn is_boundary(&self) -> bool {
        self.kind == FaceKind::Boundary
    }
}

/// Order-2 triangulation of a chart-described domain.
#[derive(Debug, Clone)]
pub struct CurvedMesh {
    pub vertices: Vec<[f64; 2]>,
    pub elements: Vec<ElementGeometry>,
    pub faces: Vec<Face>,
    /// Face ids of the three local edges of each element.
    pub element_faces: Vec<[usize; 3]>,
    pub chart: Arc<dyn DomainChart>,
}

#[derive(Debug, Clone)]
pub struct MeshMetrics {
    pub h: f64,
    pub h_k: Vec<f64>,
    pub rho_k: Vec<f64>,
    pub shape_regularity: f64,
    /// (vertex id, h_e) for every boundary vertex.
    pub boundary_vertex_h: Vec<(usize, f64)>,
    /// Largest diameter ratio between face-adjacent elements.
    pub neighbor_ratio: f64,
    pub max_map_deviation: f64,
    pub n_elements: usize,
    pub n_faces: usize,
    pub n_boundary_faces: usize,
}

impl CurvedMesh {
    /// Builds the face structure from elements; boundary faces are edges with one element.
    pub fn from_elements(
        vertices: Vec<[f64; 2]>,
        elements: Vec<ElementGeometry>,
        chart: Arc<dyn DomainChart>,
    ) -> Result<Self, GeometryError> {
        let mut map: HashMap<(usize, usize), usize> = HashMap::new();
        let mut faces: Vec<Face> = Vec::new();
        let mut element_faces = vec![[usize::MAX; 3]; elements.len()];
        for (k, el) in elements.iter().enumerate() {
            for e in 0..3 {
                let a = el.vertex_ids[e];
                let b = el.vertex_ids[(e + 1) % 3];
                let key = (a.min(b), a.max(b));
                match map.get(&key) {
                    Some(&f) => {
                        let face = &mut faces[f];
                        if face.neighbor.is_some() {
                            return Err(GeometryError::NonManifoldEdge(key.0, key.1));
                        }
                        face.neighbor = Some((k, e));
                        face.kind = FaceKind::Interior;
                        face.h_tilde = face.h_tilde.min(el.h);
                        element_faces[k][e] = f;
                    }
                    None => {
                        map.insert(key, faces.len());
                        element_faces[k][e] = faces.len();
                        faces.push(Face {
                            kind: FaceKind::Boundary,
                            element: k,
                            local_edge: e,
                            neighbor: None,
                            h_tilde: el.h,
                        });
                    }
                }
            }
        }
        for (f, face) in faces.iter().enumerate() {
            let el = &elements[face.element];
            match face.kind {
                FaceKind::Boundary => {
                    if el.boundary_edge != Some(face.local_edge) {
                        return Err(GeometryError::BoundaryMismatch(f));
                    }
                }
                FaceKind::Interior => {
                    let (kp, ep) = face.neighbor.unwrap();
                    if el.boundary_edge == Some(face.local_edge)
                        || elements[kp].boundary_edge == Some(ep)
                    {
                        return Err(GeometryError::BoundaryMismatch(f));
                    }
                }
            }
        }
        Ok(Self {
            vertices,
            elements,
            faces,
            element_faces,
            chart,
        })
    }

    pub fn n_elements(&self) -> usize {
        self.elements.len()
    }

    /// Global mesh size max h_K.
    pub fn h(&self) -> f64 {
        self.elements.iter().map(|e| e.h).fold(0.0, f64::max)
    }

    /// Quadrature data on face `face_id` using the reference rule on [0, 1].
    pub fn face_geometry(
        &self,
        face_id: usize,
        rule: &SegmentRule,
    ) -> Result<FaceRecord, GeometryError> {
        let face = &self.faces[face_id];
        let el = &self.elements[face.element];
        let nq = rule.len();
        let dir = edge_direction(face.local_edge);
        let mut rec = FaceRecord {
            face: face_id,
            kind: face.kind,
            element: face.element,
            local_edge: face.local_edge,
            neighbor: face.neighbor,
            chart_id: None,
            h_tilde: face.h_tilde,
            ref_points: Vec::with_capacity(nq),
            ref_points_neighbor: Vec::new(),
            map_jets: Vec::with_capacity(nq),
            map_jets_neighbor: Vec::new(),
            points: Vec::with_capacity(nq),
            weights: Vec::with_capacity(nq),
            speed: Vec::with_capacity(nq),
            normals: Vec::with_capacity(nq),
            tangents: Vec::with_capacity(nq),
            projected: Vec::new(),
            curvature: Vec::new(),
            abscissae: rule.points.clone(),
        };
        for (t, w) in rule.points.iter().zip(&rule.weights) {
            let xh = edge_point(face.local_edge, *t);
            let m = el.map(xh);
            let vel = [
                m.jac[0][0] * dir[0] + m.jac[0][1] * dir[1],
                m.jac[1][0] * dir[0] + m.jac[1][1] * dir[1],
            ];
            let s = vel[0].hypot(vel[1]);
            if s < 1e-14 {
                return Err(GeometryError::DegenerateEdge(face_id));
            }
            let tan = [vel[0] / s, vel[1] / s];
            rec.ref_points.push(xh);
            rec.points.push(m.x);
            rec.map_jets.push(m);
            rec.weights.push(w * s);
            rec.speed.push(s);
            rec.tangents.push(tan);
            rec.normals.push([tan[1], -tan[0]]);
        }
        match face.neighbor {
            Some((kp, ep)) => {
                let elp = &self.elements[kp];
                for t in &rule.points {
                    let xh = edge_point(ep, 1.0 - t);
                    rec.ref_points_neighbor.push(xh);
                    rec.map_jets_neighbor.push(elp.map(xh));
                }
            }
            None => {
                rec.chart_id = Some(self.chart.id());
                for x in &rec.points {
                    let y = self.chart.project(*x)?;
                    rec.curvature.push(self.chart.curvature(y));
                    rec.projected.push(y);
                }
            }
        }
        Ok(rec)
    }

    pub fn metrics(&self) -> MeshMetrics {
        let h_k: Vec<f64> = self.elements.iter().map(|e| e.h).collect();
        let rho_k: Vec<f64> = self.elements.iter().map(|e| e.rho).collect();
        let shape_regularity = h_k
            .iter()
            .zip(&rho_k)
            .map(|(h, r)| h / r)
            .fold(0.0, f64::max);
        let mut he: HashMap<usize, f64> = HashMap::new();
        let mut boundary_vertices: Vec<usize> = Vec::new();
        let mut neighbor_ratio: f64 = 1.0;
        let mut n_boundary_faces = 0;
        for face in &self.faces {
            let el = &self.elements[face.element];
            let a = el.vertex_ids[face.local_edge];
            let b = el.vertex_ids[(face.local_edge + 1) % 3];
            match face.neighbor {
                None => {
                    n_boundary_faces += 1;
                    boundary_vertices.push(a);
                    boundary_vertices.push(b);
                }
                Some((kp, _)) => {
                    let (h1, h2) = (el.h, self.elements[kp].h);
                    neighbor_ratio = neighbor_ratio.max(h1.max(h2) / h1.min(h2));
                    for v in [a, b] {
                        let e = he.entry(v).or_insert(f64::INFINITY);
                        *e = e.min(face.h_tilde);
                    }
                }
            }
        }
        boundary_vertices.sort_unstable();
        boundary_vertices.dedup();
        let boundary_vertex_h = boundary_vertices
            .into_iter()
            .map(|v| (v, he.get(&v).cloned().unwrap_or(f64::INFINITY)))
            .collect();
        MeshMetrics {
            h: h_k.iter().cloned().fold(0.0, f64::max),
            shape_regularity,
            boundary_vertex_h,
            neighbor_ratio,
            max_map_deviation: self
                .elements
                .iter()
                .map(|e| e.map_deviation)
                .fold(0.0, f64::max),
            n_elements: self.elements.len(),
            n_faces: self.faces.len(),
            n_boundary_faces,
            h_k,
            rho_k,
        }
    }

    /// SHA-256 of the serialised mesh, as hex.
    pub fn hash(&self) -> String {
        let text = super::io::write_mesh_string(self);
        let digest = Sha256::digest(text.as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Invariant violations found by [`check_mesh`].
#[derive(Debug, Clone, Default)]
pub struct MeshCheck {
    pub violations: Vec<String>,
}

impl MeshCheck {
    pub fn ok(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks chart lifting, straight interior edges, positivity of det J and normal matching.
pub fn check_mesh(mesh: &CurvedMesh, rule_degree: usize) -> Result<MeshCheck, GeometryError> {
    let mut out = MeshCheck::default();
    let vol = crate::fem::triangle_rule(rule_degree)?;
    let seg = crate::fem::segment_rule(rule_degree)?;
    for (k, el) in mesh.elements.iter().enumerate() {
        if el.map_deviation >= 1.0 {
            out.violations
                .push(format!("element {k}: C_K = {} >= 1", el.map_deviation));
        }
        for e in 0..3 {
            let a = el.nodes[e];
            let b = el.nodes[(e + 1) % 3];
            let m = el.nodes[3 + e];
            if el.boundary_edge == Some(e) {
                let y = mesh.chart.project(m)?;
                if (y[0] - m[0]).hypot(y[1] - m[1]) > 1e-12 {
                    out.violations
                        .push(format!("element {k}: boundary midnode off the boundary"));
                }
            } else {
                let mid = [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])];
                if (mid[0] - m[0]).hypot(mid[1] - m[1]) > 1e-12 {
                    out.violations
                        .push(format!("element {k}: interior edge {e} is not straight"));
                }
            }
        }
        for xh in &vol.points {
            if el.map(*xh).det() <= 0.0 {
                out.violations
                    .push(format!("element {k}: det J <= 0 at {xh:?}"));
                break;
            }
        }
    }
    for f in 0..mesh.faces.len() {
        let rec = mesh.face_geometry(f, &seg)?;
        if let Some((kp, ep)) = rec.neighbor {
            let elp = &mesh.elements[kp];
            let dir = edge_direction(ep);
            for q in 0..rec.len() {
                let m = &rec.map_jets_neighbor[q];
                if (m.x[0] - rec.points[q][0]).hypot(m.x[1] - rec.points[q][1]) > 1e-10 {
                    out.violations.push(format!("face {f}: traces do not match"));
                    break;
                }
                let vel = [
                    m.jac[0][0] * dir[0] + m.jac[0][1] * dir[1],
                    m.jac[1][0] * dir[0] + m.jac[1][1] * dir[1],
                ];
                let s = vel[0].hypot(vel[1]);
                let np = [vel[1] / s, -vel[0] / s];
                let n = rec.normals[q];
                if (n[0] + np[0]).hypot(n[1] + np[1]) > 1e-10 || elp.map(rec.ref_points_neighbor[q]).det() <= 0.0 {
                    out.violations
                        .push(format!("face {f}: normals are not opposite"));
                    break;
                }
            }
        }
        for q in 0..rec.len() {
            if rec.map_jets[q].det() <= 0.0 {
                out.violations.push(format!("face {f}: det J <= 0"));
                break;
            }
        }
    }
    let mut on_boundary = vec![false; mesh.vertices.len()];
    for f in mesh.faces.iter().filter(|f| f.neighbor.is_none()) {
        let el = &mesh.elements[f.element];
        on_boundary[el.vertex_ids[f.local_edge]] = true;
        on_boundary[el.vertex_ids[(f.local_edge + 1) % 3]] = true;
    }
    for (i, v) in mesh.vertices.iter().enumerate() {
        if on_boundary[i] {
            let y = mesh.chart.project(*v)?;
            if (y[0] - v[0]).hypot(y[1] - v[1]) > 1e-12 {
                out.violations
                    .push(format!("vertex {i}: boundary vertex off the boundary"));
            }
        }
    }
    Ok(out)
}
