use rayon::prelude::*;

use crate::geometry::FaceKind;
use crate::problem::ProblemSpec;
use crate::space::DgSpace;

use super::forms::{sub_jet, sum_jets};
use super::{evaluate_norm, AssemblyError, Field, PenaltyConfig};

/// Errors of a discrete solution against the exact one.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct ErrorRecord {
    /// ||(u - u_h, c - c_h)||_{h,1}
    pub h1norm: f64,
    /// ||c - c_h||_{L2(boundary)}
    pub c_l2_boundary: f64,
    /// broken H1 seminorm of u - u_h
    pub h1_semi: f64,
    /// broken H2 seminorm of u - u_h
    pub h2_semi: f64,
}

pub fn error_norms(
    space: &DgSpace,
    problem: &ProblemSpec,
    pen: &PenaltyConfig,
    x: &[f64],
) -> Result<ErrorRecord, AssemblyError> {
    let ex = problem.exact.as_ref().ok_or(AssemblyError::MissingExactSolution)?;
    let h1norm = evaluate_norm(space, problem, pen, 1.0, Field::ExactMinusDiscrete(ex, x))?;
    let nb = space.n_basis;
    let parts: Vec<(f64, f64)> = (0..space.n_elements())
        .into_par_iter()
        .map(|k| {
            let ev = space.element_values(k)?;
            let c = &x[space.u_dof(k, 0)..space.u_dof(k, 0) + nb];
            let mut s1 = 0.0;
            let mut s2 = 0.0;
            for (q, p) in ev.points.iter().enumerate() {
                let e = sub_jet(&ex.jet(*p), &sum_jets(c, &ev.jets[q * nb..(q + 1) * nb]));
                s1 += ev.weights[q] * (e.grad[0].powi(2) + e.grad[1].powi(2));
                s2 += ev.weights[q] * (e.hess[0].powi(2) + 2.0 * e.hess[1].powi(2) + e.hess[2].powi(2));
            }
            Ok((s1, s2))
        })
        .collect::<Result<_, AssemblyError>>()?;
    let (s1, s2) = parts.iter().fold((0.0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1));
    let mesh = space.mesh;
    let mut sc = 0.0;
    for f in 0..mesh.faces.len() {
        if mesh.faces[f].kind != FaceKind::Boundary {
            continue;
        }
        let rec = mesh.face_geometry(f, &space.face_rule)?;
        let d = ex.c - x[space.c_dof(rec.element)];
        sc += rec.weights.iter().sum::<f64>() * d * d;
    }
    Ok(ErrorRecord {
        h1norm,
        c_l2_boundary: sc.sqrt(),
        h1_semi: s1.sqrt(),
        h2_semi: s2.sqrt(),
    })
}
