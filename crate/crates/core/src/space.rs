//! Discrete space V_{h,p} x V_{h,0} with the mean-constraint multiplier, and trace helpers.
//!
//! Global vectors are laid out element by element: the N_p coefficients of u on element K,
//! then the constant c on K; the multiplier of the zero-mean constraint comes last.

use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};

use crate::fem::{
    basis_size, edge_quadrature, volume_quadrature, FemError, Jet, OrthonormalBasis, Pushforward,
    SegmentRule, TriangleRule,
};
use crate::geometry::{edge_point, CurvedMesh, FaceRecord, GeometryError};
use crate::problem::perp;

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum SpaceError {
    #[error("polynomial degree must be at least 2, got {0}")]
    DegreeTooLow(usize),
    #[error("vector has length {got}, expected {expected}")]
    Length { expected: usize, got: usize },
    #[error("singular element map on element {0}")]
    SingularMap(usize),
    #[error("coefficient file: {0}")]
    Format(String),
    #[error(transparent)]
    Fem(#[from] FemError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// Physical basis data on one element at the volume quadrature points.
#[derive(Debug, Clone)]
pub struct ElementValues {
    pub points: Vec<[f64; 2]>,
    /// Reference weight times |det J|.
    pub weights: Vec<f64>,
    /// jets[q * n_basis + i]
    pub jets: Vec<Jet>,
}

#[derive(Debug, Clone)]
pub struct DgSpace<'m> {
    pub mesh: &'m CurvedMesh,
    pub degree: usize,
    pub basis: OrthonormalBasis,
    pub n_basis: usize,
    pub volume_rule: TriangleRule,
    pub face_rule: SegmentRule,
    volume_table: Vec<Jet>,
    // edge_tables[e][reversed]: basis at face points of local edge e
    edge_tables: [[Vec<Jet>; 2]; 3],
    /// Integrals of the basis functions over each element (row-major element, function).
    pub basis_integrals: Vec<f64>,
    pub element_areas: Vec<f64>,
}

impl<'m> DgSpace<'m> {
    pub fn new(mesh: &'m CurvedMesh, degree: usize) -> Result<Self, SpaceError> {
        if degree < 2 {
            return Err(SpaceError::DegreeTooLow(degree));
        }
        let basis = OrthonormalBasis::new(degree)?;
        let volume_rule = volume_quadrature(degree)?;
        let face_rule = edge_quadrature(degree)?;
        let volume_table = basis.tabulate(&volume_rule.points);
        let edge_tables = std::array::from_fn(|e| {
            std::array::from_fn(|rev| {
                let pts: Vec<[f64; 2]> = face_rule
                    .points
                    .iter()
                    .map(|t| edge_point(e, if rev == 1 { 1.0 - t } else { *t }))
                    .collect();
                basis.tabulate(&pts)
            })
        });
        let n_basis = basis_size(degree);
        let mut space = Self {
            mesh,
            degree,
            basis,
            n_basis,
            volume_rule,
            face_rule,
            volume_table,
            edge_tables,
            basis_integrals: vec![0.0; mesh.n_elements() * n_basis],
            element_areas: vec![0.0; mesh.n_elements()],
        };
        for k in 0..mesh.n_elements() {
            let el = &mesh.elements[k];
            let nb = n_basis;
            let out = &mut space.basis_integrals[k * nb..(k + 1) * nb];
            if !el.curved {
                // only the constant function has a nonzero integral on an affine element
                let det = 2.0 * el.affine_area();
                out[0] = det * 0.5 * 2f64.sqrt();
                space.element_areas[k] = det * 0.5;
            } else {
                let mut area = 0.0;
                for (q, (x, w)) in space.volume_rule.points.iter().zip(&space.volume_rule.weights).enumerate() {
                    let det = el.map(*x).det();
                    area += w * det;
                    for i in 0..nb {
                        out[i] += w * det * space.volume_table[q * nb + i].value;
                    }
                }
                space.element_areas[k] = area;
            }
        }
        Ok(space)
    }

    pub fn n_elements(&self) -> usize {
        self.mesh.n_elements()
    }

    /// Unknowns per element: N_p coefficients of u and one constant.
    pub fn block_size(&self) -> usize {
        self.n_basis + 1
    }

    pub fn u_dof(&self, k: usize, i: usize) -> usize {
        k * self.block_size() + i
    }

    pub fn c_dof(&self, k: usize) -> usize {
        k * self.block_size() + self.n_basis
    }

    pub fn multiplier_dof(&self) -> usize {
        self.n_elements() * self.block_size()
    }

    /// Size of M_h (u and c dofs) without the multiplier.
    pub fn n_pair_dofs(&self) -> usize {
        self.n_elements() * self.block_size()
    }

    /// Total system size including the multiplier.
    pub fn n_dofs(&self) -> usize {
        self.n_pair_dofs() + 1
    }

    pub fn volume_reference_table(&self) -> &[Jet] {
        &self.volume_table
    }

    pub fn element_values(&self, k: usize) -> Result<ElementValues, SpaceError> {
        let el = &self.mesh.elements[k];
        let nb = self.n_basis;
        let nq = self.volume_rule.len();
        let mut out = ElementValues {
            points: Vec::with_capacity(nq),
            weights: Vec::with_capacity(nq),
            jets: vec![Jet::default(); nq * nb],
        };
        for q in 0..nq {
            let m = el.map(self.volume_rule.points[q]);
            let pf = Pushforward::new(&m);
            if !(pf.det > 0.0) {
                return Err(SpaceError::SingularMap(k));
            }
            out.points.push(m.x);
            out.weights.push(self.volume_rule.weights[q] * pf.det);
            for i in 0..nb {
                out.jets[q * nb + i] = pf.apply(&self.volume_table[q * nb + i]);
            }
        }
        Ok(out)
    }

    /// Physical basis jets on a face from the element side (`neighbor = false`) or the
    /// neighbour side; layout [q * n_basis + i].
    pub fn face_values(&self, rec: &FaceRecord, neighbor: bool) -> Result<Vec<Jet>, SpaceError> {
        let (edge, jets, k) = if neighbor {
            let (kp, ep) = rec.neighbor.expect("interior face");
            (ep, &rec.map_jets_neighbor, kp)
        } else {
            (rec.local_edge, &rec.map_jets, rec.element)
        };
        let table = &self.edge_tables[edge][neighbor as usize];
        let nb = self.n_basis;
        let mut out = vec![Jet::default(); jets.len() * nb];
        for (q, m) in jets.iter().enumerate() {
            let pf = Pushforward::new(m);
            if !(pf.det > 0.0) {
                return Err(SpaceError::SingularMap(k));
            }
            for i in 0..nb {
                out[q * nb + i] = pf.apply(&table[q * nb + i]);
            }
        }
        Ok(out)
    }

    /// Value and physical derivatives of the u-field of `x` at reference point `xh` of element k.
    pub fn eval_field(&self, x: &[f64], k: usize, xh: [f64; 2]) -> Jet {
        let nb = self.n_basis;
        let mut ref_jets = vec![Jet::default(); nb];
        self.basis.eval(xh, &mut ref_jets);
        let pf = Pushforward::new(&self.mesh.elements[k].map(xh));
        let base = self.u_dof(k, 0);
        combine(&x[base..base + nb], &ref_jets, |j| pf.apply(j))
    }

    /// Element-wise L2 projection of `f` into the u-part of a global vector (c = 0).
    pub fn interpolate(&self, f: impl Fn([f64; 2]) -> f64) -> Result<Vec<f64>, SpaceError> {
        self.interpolate_elementwise(|_, x| f(x))
    }

    /// As `interpolate`, with a separate function `f(k, x)` on each element k.
    pub fn interpolate_elementwise(&self, f: impl Fn(usize, [f64; 2]) -> f64) -> Result<Vec<f64>, SpaceError> {
        let nb = self.n_basis;
        let mut out = vec![0.0; self.n_dofs()];
        for k in 0..self.n_elements() {
            let el = &self.mesh.elements[k];
            let mut rhs = DVector::<f64>::zeros(nb);
            let mut mass = DMatrix::<f64>::zeros(nb, nb);
            for (q, (xh, w)) in self.volume_rule.points.iter().zip(&self.volume_rule.weights).enumerate() {
                let m = el.map(*xh);
                let wd = w * m.det();
                let fx = f(k, m.x);
                let row = &self.volume_table[q * nb..(q + 1) * nb];
                for i in 0..nb {
                    rhs[i] += wd * fx * row[i].value;
                    if el.curved {
                        for j in 0..=i {
                            mass[(i, j)] += wd * row[i].value * row[j].value;
                        }
                    }
                }
            }
            let coeffs = if el.curved {
                for i in 0..nb {
                    for j in 0..i {
                        mass[(j, i)] = mass[(i, j)];
                    }
                }
                mass.cholesky()
                    .ok_or(SpaceError::SingularMap(k))?
                    .solve(&rhs)
            } else {
                rhs / (2.0 * el.affine_area())
            };
            let base = self.u_dof(k, 0);
            out[base..base + nb].copy_from_slice(coeffs.as_slice());
        }
        Ok(out)
    }

    /// Integral of the u-field over the mesh.
    pub fn integral(&self, x: &[f64]) -> f64 {
        let nb = self.n_basis;
        (0..self.n_elements())
            .map(|k| {
                let base = self.u_dof(k, 0);
                x[base..base + nb]
                    .iter()
                    .zip(&self.basis_integrals[k * nb..(k + 1) * nb])
                    .map(|(a, b)| a * b)
                    .sum::<f64>()
            })
            .sum()
    }

    pub fn domain_area(&self) -> f64 {
        self.element_areas.iter().sum()
    }

    /// Subtracts the mean of the u-field (the constant 1 is phi_0 / sqrt 2 on every element).
    pub fn remove_mean(&self, x: &mut [f64]) {
        let mean = self.integral(x) / self.domain_area();
        let shift = mean / 2f64.sqrt();
        for k in 0..self.n_elements() {
            let d = self.u_dof(k, 0);
            x[d] -= shift;
        }
    }

    /// Broken L2 norm of the u-field.
    pub fn l2_norm(&self, x: &[f64]) -> Result<f64, SpaceError> {
        let nb = self.n_basis;
        let mut s = 0.0;
        for k in 0..self.n_elements() {
            let el = &self.mesh.elements[k];
            let base = self.u_dof(k, 0);
            let c = &x[base..base + nb];
            if !el.curved {
                s += 2.0 * el.affine_area() * c.iter().map(|v| v * v).sum::<f64>();
            } else {
                for (q, (xh, w)) in self.volume_rule.points.iter().zip(&self.volume_rule.weights).enumerate() {
                    let v: f64 = c
                        .iter()
                        .zip(&self.volume_table[q * nb..(q + 1) * nb])
                        .map(|(a, j)| a * j.value)
                        .sum();
                    s += w * el.map(*xh).det() * v * v;
                }
            }
        }
        Ok(s.sqrt())
    }

    /// Chart-arc-length derivative of a coefficient function g at the face's projected points.
    pub fn boundary_tangential_derivative_fn(
        &self,
        rec: &FaceRecord,
        g: impl Fn([f64; 2]) -> f64,
    ) -> Result<Vec<f64>, SpaceError> {
        let chart = &self.mesh.chart;
        let d = 1e-3;
        let mut out = Vec::with_capacity(rec.len());
        for y in &rec.projected {
            let t = perp(chart.boundary_normal(*y));
            let phi = |s: f64| -> Result<f64, SpaceError> {
                Ok(g(chart.project([y[0] + s * t[0], y[1] + s * t[1]])?))
            };
            out.push((-phi(2.0 * d)? + 8.0 * phi(d)? - 8.0 * phi(-d)? + phi(-2.0 * d)?) / (12.0 * d));
        }
        Ok(out)
    }
}

fn combine(c: &[f64], jets: &[Jet], map: impl Fn(&Jet) -> Jet) -> Jet {
    let mut acc = Jet::default();
    for (a, j) in c.iter().zip(jets) {
        acc.value += a * j.value;
        acc.grad[0] += a * j.grad[0];
        acc.grad[1] += a * j.grad[1];
        acc.hess[0] += a * j.hess[0];
        acc.hess[1] += a * j.hess[1];
        acc.hess[2] += a * j.hess[2];
    }
    map(&acc)
}

/// Derivative along the edge parameterisation of samples at the face abscissae, divided by
/// the edge speed. Exact when the samples come from a polynomial in t of degree < n.
pub fn boundary_tangential_derivative(rec: &FaceRecord, g: &[f64]) -> Result<Vec<f64>, SpaceError> {
    let t = &rec.abscissae;
    let n = t.len();
    if g.len() != n {
        return Err(SpaceError::Length {
            expected: n,
            got: g.len(),
        });
    }
    // barycentric weights of the interpolation nodes
    let w: Vec<f64> = (0..n)
        .map(|j| 1.0 / (0..n).filter(|&m| m != j).map(|m| t[j] - t[m]).product::<f64>())
        .collect();
    let mut out = vec![0.0; n];
    for i in 0..n {
        let mut diag = 0.0;
        let mut s = 0.0;
        for j in 0..n {
            if i != j {
                let dij = w[j] / w[i] / (t[i] - t[j]);
                s += dij * g[j];
                diag -= dij;
            }
        }
        s += diag * g[i];
        if rec.speed[i] < 1e-14 {
            return Err(SpaceError::Geometry(GeometryError::DegenerateEdge(rec.face)));
        }
        out[i] = s / rec.speed[i];
    }
    Ok(out)
}

/// Face quantity whose jump and average are requested.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraceKind {
    Value,
    NormalDerivative,
    /// Component of the tangential gradient along T.
    TangentialGradient,
    /// T . D^2 v . T (straight faces).
    TangentialLaplacian,
    /// T . D^2 v . n, the component of the tangential gradient of the normal derivative.
    Mixed,
}

pub fn trace_quantity(kind: TraceKind, j: &Jet, n: [f64; 2]) -> f64 {
    let t = perp(n);
    let h = &j.hess;
    let quad = |a: [f64; 2], b: [f64; 2]| {
        a[0] * (h[0] * b[0] + h[1] * b[1]) + a[1] * (h[1] * b[0] + h[2] * b[1])
    };
    match kind {
        TraceKind::Value => j.value,
        TraceKind::NormalDerivative => j.grad[0] * n[0] + j.grad[1] * n[1],
        TraceKind::TangentialGradient => j.grad[0] * t[0] + j.grad[1] * t[1],
        TraceKind::TangentialLaplacian => quad(t, t),
        TraceKind::Mixed => quad(t, n),
    }
}

/// Jump and average of a trace quantity; on boundary faces both are the single trace.
pub fn jump_average(kind: TraceKind, plus: &Jet, minus: Option<&Jet>, n: [f64; 2]) -> (f64, f64) {
    let a = trace_quantity(kind, plus, n);
    match minus {
        None => (a, a),
        Some(m) => {
            let b = trace_quantity(kind, m, n);
            (a - b, 0.5 * (a + b))
        }
    }
}

/// Split view of a global solution vector.
#[derive(Debug, Clone, PartialEq)]
pub struct SolutionPair {
    pub degree: usize,
    /// N_p coefficients per element.
    pub u_coeffs: Vec<f64>,
    pub c_coeffs: Vec<f64>,
    pub mean_multiplier: f64,
}

impl SolutionPair {
    pub fn from_vector(space: &DgSpace, x: &[f64]) -> Result<Self, SpaceError> {
        if x.len() != space.n_dofs() {
            return Err(SpaceError::Length {
                expected: space.n_dofs(),
                got: x.len(),
            });
        }
        let nb = space.n_basis;
        let mut u = Vec::with_capacity(space.n_elements() * nb);
        let mut c = Vec::with_capacity(space.n_elements());
        for k in 0..space.n_elements() {
            let b = space.u_dof(k, 0);
            u.extend_from_slice(&x[b..b + nb]);
            c.push(x[space.c_dof(k)]);
        }
        Ok(Self {
            degree: space.degree,
            u_coeffs: u,
            c_coeffs: c,
            mean_multiplier: x[space.multiplier_dof()],
        })
    }

    pub fn to_vector(&self, space: &DgSpace) -> Vec<f64> {
        let nb = space.n_basis;
        let mut x = vec![0.0; space.n_dofs()];
        for k in 0..space.n_elements() {
            let b = space.u_dof(k, 0);
            x[b..b + nb].copy_from_slice(&self.u_coeffs[k * nb..(k + 1) * nb]);
            x[space.c_dof(k)] = self.c_coeffs[k];
        }
        x[space.multiplier_dof()] = self.mean_multiplier;
        x
    }
}

const VECTOR_MAGIC: &str = "oblique-dg-coefficients 1";

/// Text coefficient format: header lines (magic, mesh hash, degree, layout, length), then
/// one value per line in the global layout.
pub fn write_coefficients(space: &DgSpace, x: &[f64]) -> String {
    let mut s = String::new();
    writeln!(s, "{VECTOR_MAGIC}").unwrap();
    writeln!(s, "mesh {}", space.mesh.hash()).unwrap();
    writeln!(s, "degree {}", space.degree).unwrap();
    writeln!(s, "layout per-element u:{} c:1 then multiplier:1", space.n_basis).unwrap();
    writeln!(s, "length {}", x.len()).unwrap();
    for v in x {
        writeln!(s, "{v:.17e}").unwrap();
    }
    s
}

pub fn read_coefficients(space: &DgSpace, text: &str) -> Result<Vec<f64>, SpaceError> {
    let mut lines = text.lines();
    let mut field = |key: &str| -> Result<String, SpaceError> {
        let l = lines
            .next()
            .ok_or_else(|| SpaceError::Format(format!("missing '{key}'")))?;
        if key.is_empty() {
            return Ok(l.to_string());
        }
        l.strip_prefix(key)
            .map(|r| r.trim().to_string())
            .ok_or_else(|| SpaceError::Format(format!("expected '{key}'")))
    };
    if field("")? != VECTOR_MAGIC {
        return Err(SpaceError::Format("bad header".into()));
    }
    if field("mesh")? != space.mesh.hash() {
        return Err(SpaceError::Format("mesh hash mismatch".into()));
    }
    if field("degree")? != space.degree.to_string() {
        return Err(SpaceError::Format("degree mismatch".into()));
    }
    field("layout")?;
    let n: usize = field("length")?
        .parse()
        .map_err(|_| SpaceError::Format("bad length".into()))?;
    if n != space.n_dofs() {
        return Err(SpaceError::Length {
            expected: space.n_dofs(),
            got: n,
        });
    }
    let v: Vec<f64> = lines
        .take(n)
        .map(|l| l.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| SpaceError::Format("bad value".into()))?;
    if v.len() != n {
        return Err(SpaceError::Format("truncated".into()));
    }
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{disk_mesh_with_rings, Grading};
    use proptest::prelude::*;

    #[test]
    fn counts() {
        let m = disk_mesh_with_rings(2, Grading::None).unwrap();
        let s = DgSpace::new(&m, 3).unwrap();
        assert_eq!(s.n_dofs(), 32 * 11 + 1);
        assert_eq!(s.c_dof(1), 21);
        assert!(DgSpace::new(&m, 1).is_err());
    }

    #[test]
    fn constants_and_linears_are_reproduced() {
        let m = disk_mesh_with_rings(3, Grading::None).unwrap();
        let s = DgSpace::new(&m, 2).unwrap();
        let one = s.interpolate(|_| 1.0).unwrap();
        let lin = s.interpolate(|x| x[0]).unwrap();
        for k in 0..s.n_elements() {
            for xh in [[0.2, 0.3], [0.6, 0.1]] {
                let x = m.elements[k].map(xh).x;
                assert!((s.eval_field(&one, k, xh).value - 1.0).abs() < 1e-12);
                if !m.elements[k].curved {
                    let j = s.eval_field(&lin, k, xh);
                    assert!((j.value - x[0]).abs() < 1e-12);
                    assert!((j.grad[0] - 1.0).abs() < 1e-12 && j.grad[1].abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn quadratic_hessian_is_exact_on_straight_elements() {
        let m = disk_mesh_with_rings(3, Grading::None).unwrap();
        let s = DgSpace::new(&m, 2).unwrap();
        let v = s.interpolate(|x| x[0] * x[0] + x[0] * x[1]).unwrap();
        for k in 0..s.n_elements() {
            if m.elements[k].curved {
                continue;
            }
            let ev = s.element_values(k).unwrap();
            let nb = s.n_basis;
            for q in 0..ev.points.len() {
                let mut h = [0.0; 3];
                for i in 0..nb {
                    for c in 0..3 {
                        h[c] += v[s.u_dof(k, i)] * ev.jets[q * nb + i].hess[c];
                    }
                }
                assert!((h[0] - 2.0).abs() < 1e-10 && (h[1] - 1.0).abs() < 1e-10 && h[2].abs() < 1e-10);
            }
        }
    }

    #[test]
    fn traces_of_smooth_quadratic_agree_across_faces() {
        let m = disk_mesh_with_rings(3, Grading::None).unwrap();
        let s = DgSpace::new(&m, 2).unwrap();
        let v = s.interpolate(|x| 1.0 + x[0] * x[1] - 0.5 * x[1] * x[1]).unwrap();
        for f in 0..m.faces.len() {
            let rec = m.face_geometry(f, &s.face_rule).unwrap();
            let Some((kp, _)) = rec.neighbor else { continue };
            if m.elements[rec.element].curved || m.elements[kp].curved {
                continue;
            }
            for q in 0..rec.len() {
                let a = s.eval_field(&v, rec.element, rec.ref_points[q]);
                let b = s.eval_field(&v, kp, rec.ref_points_neighbor[q]);
                let n = rec.normals[q];
                for kind in [TraceKind::Value, TraceKind::NormalDerivative, TraceKind::TangentialGradient] {
                    let (j, _) = jump_average(kind, &a, Some(&b), n);
                    assert!(j.abs() < 1e-10, "{kind:?} {j}");
                }
            }
        }
    }

    #[test]
    fn jump_average_examples() {
        let j = |v: f64| Jet { value: v, ..Jet::default() };
        assert_eq!(jump_average(TraceKind::Value, &j(3.0), Some(&j(1.0)), [1.0, 0.0]), (2.0, 2.0));
        assert_eq!(jump_average(TraceKind::Value, &j(5.0), None, [1.0, 0.0]), (5.0, 5.0));
        // u = x1^2, face along the x2 axis with n = (1, 0)
        let u = Jet { value: 0.0, grad: [0.0, 0.0], hess: [2.0, 0.0, 0.0] };
        assert_eq!(trace_quantity(TraceKind::TangentialLaplacian, &u, [1.0, 0.0]), 0.0);
        assert_eq!(trace_quantity(TraceKind::Mixed, &u, [1.0, 0.0]), 0.0);
    }

    #[test]
    fn tangential_derivatives_on_circle() {
        let m = disk_mesh_with_rings(4, Grading::None).unwrap();
        let s = DgSpace::new(&m, 3).unwrap();
        let theta = |y: [f64; 2]| std::f64::consts::FRAC_PI_4 + y[1].atan2(y[0]);
        for f in 0..m.faces.len() {
            let rec = m.face_geometry(f, &s.face_rule).unwrap();
            if !rec.is_boundary() {
                continue;
            }
            let d = s.boundary_tangential_derivative_fn(&rec, |y| y[1]).unwrap();
            for (q, y) in rec.projected.iter().enumerate() {
                assert!((d[q] - y[0]).abs() < 1e-8);
            }
            // stay away from the branch cut of atan2
            if rec.projected.iter().all(|y| y[0] > -0.5) {
                let d = s.boundary_tangential_derivative_fn(&rec, theta).unwrap();
                assert!(d.iter().all(|v| (v - 1.0).abs() < 1e-8));
            }
            let c = boundary_tangential_derivative(&rec, &vec![3.0; rec.len()]).unwrap();
            assert!(c.iter().all(|v| v.abs() < 1e-10));
            // samples of x2 along the quadratic edge are a quadratic in t: exact
            let g: Vec<f64> = rec.points.iter().map(|x| x[1]).collect();
            let d = boundary_tangential_derivative(&rec, &g).unwrap();
            for q in 0..rec.len() {
                assert!((d[q] - rec.tangents[q][1]).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn coefficient_roundtrip() {
        let m = disk_mesh_with_rings(2, Grading::None).unwrap();
        let s = DgSpace::new(&m, 2).unwrap();
        let x = s.interpolate(|x| x[0].sin()).unwrap();
        let text = write_coefficients(&s, &x);
        assert_eq!(read_coefficients(&s, &text).unwrap(), x);
        let m2 = disk_mesh_with_rings(3, Grading::None).unwrap();
        let s2 = DgSpace::new(&m2, 2).unwrap();
        assert!(read_coefficients(&s2, &text).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn mean_removal_is_idempotent(seed in 0u64..1000) {
            use rand::{Rng, SeedableRng};
            let m = disk_mesh_with_rings(3, Grading::None).unwrap();
            let s = DgSpace::new(&m, 2).unwrap();
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let mut x: Vec<f64> = (0..s.n_dofs()).map(|_| rng.random_range(-1.0..1.0)).collect();
            s.remove_mean(&mut x);
            let scale = s.l2_norm(&x).unwrap();
            prop_assert!(s.integral(&x).abs() <= 1e-12 * scale.max(1.0));
            let before = x.clone();
            s.remove_mean(&mut x);
            for (a, b) in x.iter().zip(&before) {
                prop_assert!((a - b).abs() < 1e-14);
            }
        }
    }
}
