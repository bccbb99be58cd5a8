use crate::fem::{segment_rule, triangle_rule, Jet};
use crate::geometry::{edge_direction, edge_point, ElementGeometry, FaceKind};
use crate::problem::{perp, ObliqueField};
use crate::space::DgSpace;

use super::AssemblyError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IdentityCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub gap: f64,
}

/// Both sides of the integration identity
///
/// int_E u11 v22 + u22 v11 - 2 u12 v12
///   = int_dE w (bp.grad u bp.grad v + b.grad u b.grad v)
///     + int_dE d_T(bp.grad u) b.grad v - d_T(b.grad u) bp.grad v
///
/// with w = b1 d_T b2 - b2 d_T b1, bp = perp(b) and T the counterclockwise tangent.
/// `beta(e, x)` gives the field on local edge e; tangential derivatives are taken by
/// fourth-order differences along the edge parameterisation.
pub fn verify_element_identity(
    el: &ElementGeometry,
    u: &dyn Fn([f64; 2]) -> Jet,
    v: &dyn Fn([f64; 2]) -> Jet,
    beta: &dyn Fn(usize, [f64; 2]) -> [f64; 2],
    degree: usize,
) -> Result<IdentityCheck, AssemblyError> {
    let tri = triangle_rule(degree).map_err(crate::space::SpaceError::from)?;
    let seg = segment_rule(degree).map_err(crate::space::SpaceError::from)?;
    let mut lhs = 0.0;
    for (xh, w) in tri.points.iter().zip(&tri.weights) {
        let m = el.map(*xh);
        let a = u(m.x).hess;
        let b = v(m.x).hess;
        lhs += w * m.det() * (a[0] * b[2] + a[2] * b[0] - 2.0 * a[1] * b[1]);
    }
    let dt = 1e-3;
    let mut rhs = 0.0;
    for e in 0..3 {
        let at = |t: f64| el.map(edge_point(e, t)).x;
        let d5 = |g: &dyn Fn(f64) -> f64, t: f64| {
            (-g(t + 2.0 * dt) + 8.0 * g(t + dt) - 8.0 * g(t - dt) + g(t - 2.0 * dt)) / (12.0 * dt)
        };
        for (t, w) in seg.points.iter().zip(&seg.weights) {
            let m = el.map(edge_point(e, *t));
            let d = edge_direction(e);
            let dx = [
                m.jac[0][0] * d[0] + m.jac[0][1] * d[1],
                m.jac[1][0] * d[0] + m.jac[1][1] * d[1],
            ];
            let speed = dx[0].hypot(dx[1]);
            let x = m.x;
            let b = beta(e, x);
            let bp = perp(b);
            let db1 = d5(&|s| beta(e, at(s))[0], *t) / speed;
            let db2 = d5(&|s| beta(e, at(s))[1], *t) / speed;
            let om = b[0] * db2 - b[1] * db1;
            let gu = u(x).grad;
            let gv = v(x).grad;
            let c1 = |g: [f64; 2]| bp[0] * g[0] + bp[1] * g[1];
            let c2 = |g: [f64; 2]| b[0] * g[0] + b[1] * g[1];
            let dc1u = d5(
                &|s| {
                    let y = at(s);
                    let g = u(y).grad;
                    let bp = perp(beta(e, y));
                    bp[0] * g[0] + bp[1] * g[1]
                },
                *t,
            ) / speed;
            let dc2u = d5(
                &|s| {
                    let y = at(s);
                    let g = u(y).grad;
                    let b = beta(e, y);
                    b[0] * g[0] + b[1] * g[1]
                },
                *t,
            ) / speed;
            let f = om * (c1(gu) * c1(gv) + c2(gu) * c2(gv)) + dc1u * c2(gv) - dc2u * c1(gv);
            rhs += w * speed * f;
        }
    }
    Ok(IdentityCheck {
        lhs,
        rhs,
        gap: (lhs - rhs).abs(),
    })
}

/// Largest |b1 d_T b2 - b2 d_T b1 - (d_T Theta + H)| over the boundary quadrature points.
pub fn oblique_turning_check(space: &DgSpace, beta: &ObliqueField) -> Result<f64, AssemblyError> {
    let mesh = space.mesh;
    let mut worst: f64 = 0.0;
    for f in 0..mesh.faces.len() {
        if mesh.faces[f].kind != FaceKind::Boundary {
            continue;
        }
        let rec = mesh.face_geometry(f, &space.face_rule)?;
        let d1 = space.boundary_tangential_derivative_fn(&rec, |y| beta.beta(y)[0])?;
        let d2 = space.boundary_tangential_derivative_fn(&rec, |y| beta.beta(y)[1])?;
        for (q, y) in rec.projected.iter().enumerate() {
            let b = beta.beta(*y);
            let om = b[0] * d2[q] - b[1] * d1[q];
            let t = perp(mesh.chart.boundary_normal(*y));
            worst = worst.max((om - beta.turning_rate(*y, t)).abs());
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{disk_mesh_with_rings, Grading, REF_VERTICES};
    use crate::problem::{BetaMode, ExactSolution, RadialProfile};

    fn unit_triangle() -> ElementGeometry {
        let v = REF_VERTICES;
        let mid = |a: [f64; 2], b: [f64; 2]| [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])];
        let nodes = [v[0], v[1], v[2], mid(v[0], v[1]), mid(v[1], v[2]), mid(v[2], v[0])];
        ElementGeometry::new([0, 1, 2], nodes, None).unwrap()
    }

    fn monomial(a: [f64; 3]) -> impl Fn([f64; 2]) -> Jet {
        // a0 x^2 + a1 x y + a2 y^2
        move |x: [f64; 2]| Jet {
            value: a[0] * x[0] * x[0] + a[1] * x[0] * x[1] + a[2] * x[1] * x[1],
            grad: [2.0 * a[0] * x[0] + a[1] * x[1], a[1] * x[0] + 2.0 * a[2] * x[1]],
            hess: [2.0 * a[0], a[1], 2.0 * a[2]],
        }
    }

    #[test]
    fn straight_triangle_squares() {
        let el = unit_triangle();
        let u = monomial([1.0, 0.0, 0.0]);
        let v = monomial([0.0, 0.0, 1.0]);
        for angle in [0.0, 0.3, 2.0] {
            let b = move |_: usize, _: [f64; 2]| [f64::cos(angle), f64::sin(angle)];
            let c = verify_element_identity(&el, &u, &v, &b, 8).unwrap();
            assert!((c.lhs - 2.0).abs() < 1e-12);
            assert!(c.gap < 1e-10, "{c:?}");
        }
    }

    #[test]
    fn affine_functions_give_zero() {
        let el = unit_triangle();
        let u = |x: [f64; 2]| Jet { value: x[0] + 2.0 * x[1], grad: [1.0, 2.0], hess: [0.0; 3] };
        let b = |e: usize, _: [f64; 2]| if e == 0 { [0.0, -1.0] } else { [0.6, 0.8] };
        let c = verify_element_identity(&el, &u, &u, &b, 6).unwrap();
        assert!(c.lhs.abs() < 1e-14 && c.rhs.abs() < 1e-10);
    }

    #[test]
    fn curved_boundary_element() {
        let m = disk_mesh_with_rings(3, Grading::None).unwrap();
        let el = m.elements.iter().find(|e| e.boundary_edge.is_some()).unwrap();
        let be = el.boundary_edge.unwrap();
        let ex = ExactSolution::new(RadialProfile::Sextic, 0.0);
        let u = |x: [f64; 2]| ex.jet(x);
        let straight: Vec<[f64; 2]> = (0..3)
            .map(|e| {
                let a = el.nodes[e];
                let b = el.nodes[(e + 1) % 3];
                let l = (b[0] - a[0]).hypot(b[1] - a[1]);
                [(b[1] - a[1]) / l, -(b[0] - a[0]) / l]
            })
            .collect();
        let beta = |e: usize, x: [f64; 2]| {
            if e == be {
                let r = x[0].hypot(x[1]);
                [x[0] / r, x[1] / r]
            } else {
                straight[e]
            }
        };
        let c = verify_element_identity(el, &u, &u, &beta, 14).unwrap();
        assert!(c.gap <= 1e-8 * c.lhs.abs().max(1.0), "{c:?}");
    }

    #[test]
    fn turning_rate_matches_for_catalog_fields() {
        let m = disk_mesh_with_rings(4, Grading::None).unwrap();
        let s = DgSpace::new(&m, 3).unwrap();
        for mode in [
            BetaMode::Normal,
            BetaMode::RotateField { offset: std::f64::consts::FRAC_PI_4 },
            BetaMode::RotateFixed(std::f64::consts::FRAC_PI_4),
        ] {
            let gap = oblique_turning_check(&s, &ObliqueField::new(mode)).unwrap();
            assert!(gap < 1e-8, "{mode:?} {gap}");
        }
    }
}
