use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::assembly::{
    add_mean_border, assemble_form, consistency_residual, oblique_turning_check, verify_element_identity,
    FormWeights, Mutation, PenaltyConfig,
};
use crate::assembly::{apply_form, Field};
use crate::fem::{segment_rule, triangle_rule, Jet, Pushforward};
use crate::geometry::{disk_mesh_with_rings, ElementGeometry, Grading, REF_VERTICES};
use crate::problem::{
    cordes_pointwise_check, disk_sample, experiment_catalog, quadratic_problem, BetaMode, CoefficientField,
    ExactSolution, RadialProfile,
};
use crate::solver::MultifrontalLu;
use crate::space::DgSpace;

use super::study::solve_level;
use super::HarnessError;

/// Knobs for deliberately breaking the method to show that the suite notices.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerifyOptions {
    pub mutation: Mutation,
    /// Factor on mu_F in the coercivity sampling.
    pub mu_scale: f64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            mutation: Mutation::None,
            mu_scale: 1.0,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    /// Measured quantity compared against `threshold`.
    pub value: f64,
    pub threshold: f64,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerificationReport {
    pub checks: Vec<CheckResult>,
}

impl VerificationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn get(&self, name: &str) -> Option<&CheckResult> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn summary(&self) -> String {
        let mut s = String::new();
        for c in &self.checks {
            s.push_str(&format!(
                "{} {:<28} {:>11.3e} (limit {:.1e}) {}\n",
                if c.passed { "PASS" } else { "FAIL" },
                c.name,
                c.value,
                c.threshold,
                c.detail
            ));
        }
        s
    }
}

fn at_most(name: &str, value: f64, threshold: f64, detail: String) -> CheckResult {
    CheckResult {
        name: name.into(),
        passed: value <= threshold,
        value,
        threshold,
        detail,
    }
}

fn errored(name: &str, e: HarnessError) -> CheckResult {
    CheckResult {
        name: name.into(),
        passed: false,
        value: f64::NAN,
        threshold: f64::NAN,
        detail: format!("error: {e}"),
    }
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// Degree up to which the quadrature rules are checked.
const RULE_CHECK_DEGREE: usize = 20;

fn quadrature_exactness() -> Result<(f64, f64), HarnessError> {
    let mut tri: f64 = 0.0;
    let mut seg: f64 = 0.0;
    for d in 0..=RULE_CHECK_DEGREE {
        let r = triangle_rule(d).map_err(crate::space::SpaceError::from)?;
        for a in 0..=d {
            for b in 0..=d - a {
                let q: f64 = r
                    .points
                    .iter()
                    .zip(&r.weights)
                    .map(|(x, w)| w * x[0].powi(a as i32) * x[1].powi(b as i32))
                    .sum();
                let exact = factorial(a) * factorial(b) / factorial(a + b + 2);
                tri = tri.max((q - exact).abs());
            }
        }
        let s = segment_rule(d).map_err(crate::space::SpaceError::from)?;
        for a in 0..=d {
            let q: f64 = s.points.iter().zip(&s.weights).map(|(t, w)| w * t.powi(a as i32)).sum();
            seg = seg.max((q - 1.0 / (a as f64 + 1.0)).abs());
        }
    }
    Ok((tri, seg))
}

/// Worst relative gap between pushed-forward derivatives and finite differences of
/// phi o F^{-1} on the curved elements of a coarse disk mesh.
fn pushforward_gap() -> Result<f64, HarnessError> {
    let mesh = disk_mesh_with_rings(3, Grading::None)?;
    let phi = |x: [f64; 2]| x[0].powi(3) - 2.0 * x[0] * x[1] * x[1] + 0.5 * x[1] + x[0] * x[1];
    let phi_jet = |x: [f64; 2]| Jet {
        value: phi(x),
        grad: [3.0 * x[0] * x[0] - 2.0 * x[1] * x[1] + x[1], -4.0 * x[0] * x[1] + 0.5 + x[0]],
        hess: [6.0 * x[0], -4.0 * x[1] + 1.0, -4.0 * x[0]],
    };
    let mut worst: f64 = 0.0;
    for el in mesh.elements.iter().filter(|e| e.curved) {
        let inverse = |y: [f64; 2], start: [f64; 2]| {
            let mut x = start;
            for _ in 0..30 {
                let m = el.map(x);
                let r = [m.x[0] - y[0], m.x[1] - y[1]];
                let j = m.jac;
                let d = m.det();
                x[0] -= (j[1][1] * r[0] - j[0][1] * r[1]) / d;
                x[1] -= (-j[1][0] * r[0] + j[0][0] * r[1]) / d;
            }
            x
        };
        for xh in [[0.2, 0.3], [0.5, 0.25], [0.1, 0.1]] {
            let m = el.map(xh);
            let v = Pushforward::new(&m).apply(&phi_jet(xh));
            let y = m.x;
            let h = 1e-4;
            let f = |d0: f64, d1: f64| phi(inverse([y[0] + d0, y[1] + d1], xh));
            let fd = [
                (f(h, 0.0) - f(-h, 0.0)) / (2.0 * h),
                (f(0.0, h) - f(0.0, -h)) / (2.0 * h),
                (f(h, 0.0) - 2.0 * f(0.0, 0.0) + f(-h, 0.0)) / (h * h),
                (f(h, h) - f(h, -h) - f(-h, h) + f(-h, -h)) / (4.0 * h * h),
                (f(0.0, h) - 2.0 * f(0.0, 0.0) + f(0.0, -h)) / (h * h),
            ];
            let got = [v.grad[0], v.grad[1], v.hess[0], v.hess[1], v.hess[2]];
            for (a, b) in got.iter().zip(&fd) {
                worst = worst.max((a - b).abs() / b.abs().max(1.0));
            }
        }
    }
    Ok(worst)
}

fn unit_triangle() -> Result<ElementGeometry, HarnessError> {
    let v = REF_VERTICES;
    let mid = |a: [f64; 2], b: [f64; 2]| [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])];
    Ok(ElementGeometry::new(
        [0, 1, 2],
        [v[0], v[1], v[2], mid(v[0], v[1]), mid(v[1], v[2]), mid(v[2], v[0])],
        None,
    )?)
}

fn element_identities() -> Result<(f64, f64), HarnessError> {
    let el = unit_triangle()?;
    let u = |x: [f64; 2]| Jet {
        value: x[0] * x[0],
        grad: [2.0 * x[0], 0.0],
        hess: [2.0, 0.0, 0.0],
    };
    let v = |x: [f64; 2]| Jet {
        value: x[1] * x[1],
        grad: [0.0, 2.0 * x[1]],
        hess: [0.0, 0.0, 2.0],
    };
    let b = |_: usize, _: [f64; 2]| [0.3f64.cos(), 0.3f64.sin()];
    let s = verify_element_identity(&el, &u, &v, &b, 8)?;
    let straight = (s.gap / s.lhs.abs().max(1.0)).max((s.lhs - 2.0).abs());

    let mesh = disk_mesh_with_rings(3, Grading::None)?;
    let el = mesh
        .elements
        .iter()
        .find(|e| e.boundary_edge.is_some())
        .expect("disk meshes have boundary elements");
    let be = el.boundary_edge.unwrap_or(0);
    let ex = ExactSolution::new(RadialProfile::Sextic, 0.0);
    let u = |x: [f64; 2]| ex.jet(x);
    let normals: Vec<[f64; 2]> = (0..3)
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
            normals[e]
        }
    };
    let c = verify_element_identity(el, &u, &u, &beta, 14)?;
    Ok((straight, c.gap / c.lhs.abs().max(1.0)))
}

/// Mesh level (rings) and degree of the consistency checks; h is close to 0.1.
const CONSISTENCY_RINGS: [usize; 2] = [8, 13];
const CONSISTENCY_DEGREE: usize = 3;
/// Bound on the consistency residual at the finer level. The quadratic boundary geometry
/// puts the exact solution slightly off its boundary condition, so this is not roundoff.
const CONSISTENCY_TOL: f64 = 1e-5;

fn consistency(
    problem: &crate::problem::ProblemSpec,
    mutation: Mutation,
) -> Result<(f64, f64), HarnessError> {
    let pen = PenaltyConfig::default();
    let mut r = [0.0; 2];
    for (i, n) in CONSISTENCY_RINGS.iter().enumerate() {
        let mesh = disk_mesh_with_rings(*n, Grading::None)?;
        let space = DgSpace::new(&mesh, CONSISTENCY_DEGREE)?;
        r[i] = consistency_residual(&space, problem, &pen, FormWeights::ah().with_mutation(mutation))?;
    }
    Ok((r[0], r[1]))
}

/// Largest |J_h((u, c), phi_i)| / ||phi_i||_{h,1} over basis functions of elements without
/// boundary faces, for the exact solution of the problem.
fn jump_annihilation(id: usize) -> Result<f64, HarnessError> {
    let problem = experiment_catalog(id)?;
    let mesh = disk_mesh_with_rings(5, Grading::None)?;
    let space = DgSpace::new(&mesh, 3)?;
    let pen = PenaltyConfig::default();
    let ex = problem.exact.as_ref().ok_or(crate::assembly::AssemblyError::MissingExactSolution)?;
    let r = apply_form(&space, &problem, &pen, FormWeights::jh(), Field::Exact(ex))?;
    let norm = assemble_form(&space, &problem, &pen, FormWeights::norm(1.0, pen.c_star))?;
    let b = space.block_size();
    let mut worst: f64 = 0.0;
    for k in 0..space.n_elements() {
        if mesh.elements[k].boundary_edge.is_some() {
            continue;
        }
        for i in 0..b {
            let d = k * b + i;
            worst = worst.max(r[d].abs() / norm.get(d, d).sqrt());
        }
    }
    Ok(worst)
}

pub const COERCIVITY_SAMPLES: usize = 200;
const COERCIVITY_RINGS: [usize; 2] = [3, 5];
const COERCIVITY_DEGREE: usize = 2;
/// Rayleigh-Ritz steps taken from every random start.
const DESCENT_STEPS: usize = 8;

#[derive(Debug, Clone, Copy)]
struct CoercivityLevel {
    nonpositive: usize,
    min_ratio: f64,
}

/// Samples A_h(v, v) / ||v||^2_{h,1} over zero-mean pairs v. Each random start is followed
/// by a few steps of preconditioned descent on that quotient, since random coefficient
/// vectors alone are dominated by the large jump penalties and almost never expose an
/// indefinite form.
fn coercivity_level(id: usize, rings: usize, mu_scale: f64, seed: u64) -> Result<CoercivityLevel, HarnessError> {
    let problem = experiment_catalog(id)?;
    let mesh = disk_mesh_with_rings(rings, Grading::None)?;
    let space = DgSpace::new(&mesh, COERCIVITY_DEGREE)?;
    let method = PenaltyConfig::default();
    let weak = PenaltyConfig { mu_scale, ..method };
    let a = assemble_form(&space, &problem, &weak, FormWeights::ah())?;
    let nm = assemble_form(&space, &problem, &method, FormWeights::norm(1.0, method.c_star))?;
    let mut bordered = nm.clone();
    add_mean_border(&space, &mut bordered);
    let lu = MultifrontalLu::factor(&bordered)?;
    let n = space.n_pair_dofs();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = CoercivityLevel {
        nonpositive: 0,
        min_ratio: f64::INFINITY,
    };
    let dot = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(a, b)| a * b).sum::<f64>();
    let apply_sym = |x: &[f64], y: &mut [f64]| {
        let mut t = vec![0.0; n];
        a.matvec(x, y);
        a.matvec_transpose(x, &mut t);
        y.iter_mut().zip(&t).for_each(|(p, q)| *p = 0.5 * (*p + q));
    };
    let mut sv = vec![0.0; n];
    let mut nv = vec![0.0; n];
    let mut sw = vec![0.0; n];
    let mut nw = vec![0.0; n];
    for _ in 0..COERCIVITY_SAMPLES {
        let mut v: Vec<f64> = (0..n + 1).map(|_| rng.random_range(-1.0..1.0)).collect();
        space.remove_mean(&mut v);
        v.truncate(n);
        let mut worst = f64::INFINITY;
        for step in 0..=DESCENT_STEPS {
            apply_sym(&v, &mut sv);
            nm.matvec(&v, &mut nv);
            let (vs, vn) = (dot(&v, &sv), dot(&v, &nv));
            let ratio = vs / vn;
            worst = worst.min(ratio);
            if vs <= 0.0 || step == DESCENT_STEPS {
                break;
            }
            // preconditioned gradient, kept mean-free by the bordered solve
            let mut w: Vec<f64> = sv.iter().zip(&nv).map(|(s, q)| s - ratio * q).collect();
            w.push(0.0);
            lu.solve_in_place(&mut w);
            w.truncate(n);
            apply_sym(&w, &mut sw);
            nm.matvec(&w, &mut nw);
            let (ws, wn, cs, cn) = (dot(&w, &sw), dot(&w, &nw), dot(&v, &sw), dot(&v, &nw));
            if !(wn > 0.0) {
                break;
            }
            // smallest eigenpair of the 2x2 pencil on span{v, w}
            let (s11, s12, s22, n11, n12, n22) = (vs, cs, ws, vn, cn, wn);
            let qa = n11 * n22 - n12 * n12;
            let qb = -(s11 * n22 + s22 * n11 - 2.0 * s12 * n12);
            let qc = s11 * s22 - s12 * s12;
            let disc = (qb * qb - 4.0 * qa * qc).max(0.0).sqrt();
            if !(qa > 0.0) {
                break;
            }
            let lam = (-qb - disc) / (2.0 * qa);
            let (x, y) = if (s12 - lam * n12).abs() > (s11 - lam * n11).abs() {
                (1.0, -(s11 - lam * n11) / (s12 - lam * n12))
            } else {
                (-(s12 - lam * n12) / (s11 - lam * n11), 1.0)
            };
            if !(x.is_finite() && y.is_finite()) {
                break;
            }
            v.iter_mut().zip(&w).for_each(|(p, q)| *p = x * *p + y * q);
            let s = dot(&v, &v).sqrt();
            v.iter_mut().for_each(|p| *p /= s);
        }
        if worst <= 0.0 {
            out.nonpositive += 1;
        }
        out.min_ratio = out.min_ratio.min(worst);
    }
    Ok(out)
}

const STABILITY_RINGS: [usize; 4] = [3, 5, 8, 13];

/// ||(u_h, c_h)||_{h,1} / ||f||_{L2} per level.
fn stability_ratios(id: usize) -> Result<(Vec<f64>, bool), HarnessError> {
    let problem = experiment_catalog(id)?;
    let pen = PenaltyConfig::default();
    let mut ratios = Vec::new();
    let mut converged = true;
    for (level, rings) in STABILITY_RINGS.iter().enumerate() {
        let mesh = disk_mesh_with_rings(*rings, Grading::None)?;
        let (row, _) = solve_level(&problem, &pen, 2, &mesh, level, &Default::default(), None)?;
        ratios.push(row.solution_norm / row.source_l2);
        converged &= row.solve.converged;
    }
    Ok((ratios, converged))
}

/// Runs every check; failures are entries of the report, never errors.
pub fn run_verification_suite(opts: &VerifyOptions) -> VerificationReport {
    let mut checks = Vec::new();

    match quadrature_exactness() {
        Ok((t, s)) => {
            checks.push(at_most("quadrature.triangle", t, 1e-13, format!("degrees 0..={RULE_CHECK_DEGREE}")));
            checks.push(at_most("quadrature.segment", s, 1e-13, format!("degrees 0..={RULE_CHECK_DEGREE}")));
        }
        Err(e) => checks.push(errored("quadrature", e)),
    }

    match pushforward_gap() {
        Ok(g) => checks.push(at_most("pushforward.finite_diff", g, 1e-5, "curved elements, relative".into())),
        Err(e) => checks.push(errored("pushforward.finite_diff", e)),
    }

    let area = (|| -> Result<(f64, f64), HarnessError> {
        let mesh = disk_mesh_with_rings(26, Grading::None)?;
        let space = DgSpace::new(&mesh, 2)?;
        Ok((space.domain_area(), mesh.h()))
    })();
    match area {
        Ok((a, h)) => checks.push(CheckResult {
            name: "geometry.disk_area".into(),
            passed: (a - PI).abs() <= 1e-6 && h <= 0.05,
            value: (a - PI).abs(),
            threshold: 1e-6,
            detail: format!("h = {h:.4}"),
        }),
        Err(e) => checks.push(errored("geometry.disk_area", e)),
    }

    match element_identities() {
        Ok((s, c)) => {
            checks.push(at_most("identity.element_straight", s, 1e-8, "u = x^2, v = y^2".into()));
            checks.push(at_most("identity.element_curved", c, 1e-8, "boundary element, beta = n".into()));
        }
        Err(e) => checks.push(errored("identity.element", e)),
    }

    for id in 1..=3 {
        let name = format!("identity.turning_exp{id}");
        let r = (|| -> Result<f64, HarnessError> {
            let problem = experiment_catalog(id)?;
            let mesh = disk_mesh_with_rings(8, Grading::None)?;
            let space = DgSpace::new(&mesh, 2)?;
            Ok(oblique_turning_check(&space, &problem.beta)?)
        })();
        match r {
            Ok(g) => checks.push(at_most(&name, g, 1e-8, "boundary quadrature points".into())),
            Err(e) => checks.push(errored(&name, e)),
        }
    }

    let cordes = (|| -> Result<(f64, f64, f64), HarnessError> {
        let problem = experiment_catalog(2)?;
        let eps = problem.cordes()?.raw;
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let points = disk_sample(10_000, 23);
        let coefficients: Vec<_> = points.iter().map(|x| problem.coefficient.eval(*x)).collect();
        let hessians: Vec<[f64; 3]> = (0..points.len())
            .map(|_| [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)])
            .collect();
        Ok((cordes_pointwise_check(&hessians, &coefficients)?, (1.0 - eps).sqrt(), eps))
    })();
    match cordes {
        Ok((worst, bound, eps)) => checks.push(at_most(
            "cordes.pointwise_exp2",
            worst,
            bound + 1e-12,
            format!("10^4 samples, epsilon = {eps}"),
        )),
        Err(e) => checks.push(errored("cordes.pointwise_exp2", e)),
    }
    for (id, expected) in [(1, 1.0), (2, 0.6), (3, 0.6)] {
        let name = format!("cordes.epsilon_exp{id}");
        match experiment_catalog(id).and_then(|p| p.cordes()) {
            Ok(r) => checks.push(at_most(&name, (r.raw - expected).abs(), 1e-12, format!("epsilon = {}", r.raw))),
            Err(e) => checks.push(errored(&name, e.into())),
        }
    }

    let quadratic = quadratic_problem(CoefficientField::Identity, BetaMode::Normal, 1.0);
    let problems = [
        ("consistency.exp1", experiment_catalog(1)),
        ("consistency.exp2", experiment_catalog(2)),
        ("consistency.quadratic", quadratic),
    ];
    for (name, problem) in problems {
        match problem.map_err(HarnessError::from).and_then(|p| consistency(&p, opts.mutation)) {
            Ok((coarse, fine)) => checks.push(CheckResult {
                name: name.into(),
                passed: fine <= CONSISTENCY_TOL && fine < coarse,
                value: fine,
                threshold: CONSISTENCY_TOL,
                detail: format!("p = {CONSISTENCY_DEGREE}, coarser level {coarse:.3e}"),
            }),
            Err(e) => checks.push(errored(name, e)),
        }
    }

    for id in [1, 2] {
        let name = format!("jump.annihilation_exp{id}");
        match jump_annihilation(id) {
            Ok(g) => checks.push(at_most(&name, g, 1e-9, "elements away from the boundary".into())),
            Err(e) => checks.push(errored(&name, e)),
        }
    }

    for id in 1..=3 {
        let name = format!("coercivity.exp{id}");
        let r = (|| -> Result<(CoercivityLevel, CoercivityLevel), HarnessError> {
            Ok((
                coercivity_level(id, COERCIVITY_RINGS[0], opts.mu_scale, 100 + id as u64)?,
                coercivity_level(id, COERCIVITY_RINGS[1], opts.mu_scale, 200 + id as u64)?,
            ))
        })();
        match r {
            Ok((a, b)) => {
                let failures = a.nonpositive + b.nonpositive;
                checks.push(CheckResult {
                    name,
                    passed: failures == 0 && b.min_ratio >= 0.5 * a.min_ratio,
                    value: failures as f64,
                    threshold: 0.0,
                    detail: format!(
                        "{} samples per level, min ratio {:.3e} then {:.3e}",
                        COERCIVITY_SAMPLES, a.min_ratio, b.min_ratio
                    ),
                });
            }
            Err(e) => checks.push(errored(&name, e)),
        }
    }

    for id in 1..=3 {
        let name = format!("stability.exp{id}");
        match stability_ratios(id) {
            Ok((r, converged)) => {
                let worst = r.iter().fold(0.0f64, |m, v| m.max(*v)) / r[0];
                checks.push(CheckResult {
                    name,
                    passed: worst <= 2.0 && converged,
                    value: worst,
                    threshold: 2.0,
                    detail: format!(
                        "ratios {}",
                        r.iter().map(|v| format!("{v:.3}")).collect::<Vec<_>>().join(" ")
                    ),
                });
            }
            Err(e) => checks.push(errored(&name, e)),
        }
    }

    VerificationReport { checks }
}
