use rayon::prelude::*;

use crate::fem::Jet;
use crate::geometry::{FaceKind, FaceRecord};
use crate::problem::{contract, gamma, perp, ExactSolution, Mat2, ProblemSpec};
use crate::space::DgSpace;

use super::{AssemblyError, BlockMatrix, FormWeights, Mutation, PenaltyConfig};

/// Entities handled per parallel batch before merging.
const CHUNK: usize = 1024;

/// A pair (u, lambda) entering a form as a fixed argument.
#[derive(Debug, Clone, Copy)]
pub enum Field<'a> {
    /// Global coefficient vector in the space layout.
    Discrete(&'a [f64]),
    /// Exact solution sampled at quadrature points, with its constant.
    Exact(&'a ExactSolution),
    /// Exact minus discrete.
    ExactMinusDiscrete(&'a ExactSolution, &'a [f64]),
}

impl Field<'_> {
    fn lambda(&self, space: &DgSpace, k: usize) -> f64 {
        match self {
            Field::Discrete(x) => x[space.c_dof(k)],
            Field::Exact(e) => e.c,
            Field::ExactMinusDiscrete(e, x) => e.c - x[space.c_dof(k)],
        }
    }

    /// Jets at `points` of element k, given the physical basis jets there.
    fn jets(&self, space: &DgSpace, k: usize, basis: &[Jet], points: &[[f64; 2]]) -> Vec<Jet> {
        let discrete = |x: &[f64]| -> Vec<Jet> {
            let nb = space.n_basis;
            let c = &x[space.u_dof(k, 0)..space.u_dof(k, 0) + nb];
            (0..points.len())
                .map(|q| sum_jets(c, &basis[q * nb..(q + 1) * nb]))
                .collect()
        };
        match self {
            Field::Discrete(x) => discrete(x),
            Field::Exact(e) => points.iter().map(|p| e.jet(*p)).collect(),
            Field::ExactMinusDiscrete(e, x) => discrete(x)
                .iter()
                .zip(points)
                .map(|(d, p)| sub_jet(&e.jet(*p), d))
                .collect(),
        }
    }
}

pub(crate) fn sum_jets(c: &[f64], jets: &[Jet]) -> Jet {
    let mut acc = Jet::default();
    for (a, j) in c.iter().zip(jets) {
        acc.value += a * j.value;
        acc.grad[0] += a * j.grad[0];
        acc.grad[1] += a * j.grad[1];
        acc.hess[0] += a * j.hess[0];
        acc.hess[1] += a * j.hess[1];
        acc.hess[2] += a * j.hess[2];
    }
    acc
}

pub(crate) fn sub_jet(a: &Jet, b: &Jet) -> Jet {
    Jet {
        value: a.value - b.value,
        grad: [a.grad[0] - b.grad[0], a.grad[1] - b.grad[1]],
        hess: [a.hess[0] - b.hess[0], a.hess[1] - b.hess[1], a.hess[2] - b.hess[2]],
    }
}

fn quad(h: &[f64; 3], a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * (h[0] * b[0] + h[1] * b[1]) + a[1] * (h[1] * b[0] + h[2] * b[1])
}

fn dot(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

/// Which functions make up the rows (test) or columns (trial) of a local contribution.
#[derive(Clone, Copy)]
enum Cols<'a> {
    Basis,
    Field(Field<'a>),
}

#[derive(Clone, Copy, Default)]
struct VolFeat {
    h: [f64; 3],
    lap: f64,
    nd: f64,
}

#[derive(Clone, Copy, Default)]
struct FaceFeat {
    jv: f64,
    jdn: f64,
    jdt: f64,
    jl: f64,
    alt: f64,
    atn: f64,
}

#[derive(Clone, Copy, Default)]
struct BdFeat {
    g: [f64; 2],
    bd: f64,
    dtbp: f64,
    lam: f64,
}

/// Dense local contribution: rows follow the test elements, columns the trial elements.
struct Local {
    elems: Vec<usize>,
    data: Vec<f64>,
}

struct Ctx<'a, 's> {
    space: &'a DgSpace<'s>,
    problem: &'a ProblemSpec,
    pen: &'a PenaltyConfig,
    w: FormWeights,
}

impl Ctx<'_, '_> {
    fn volume(&self, k: usize, test: Cols, trial: Cols) -> Result<Local, AssemblyError> {
        let space = self.space;
        let nb = space.n_basis;
        let ev = space.element_values(k)?;
        let nq = ev.points.len();
        let ga: Vec<Mat2> = if self.w.nondiv != 0.0 {
            ev.points
                .iter()
                .map(|x| {
                    let a = self.problem.coefficient.eval(*x);
                    let g = gamma(&a)?;
                    Ok([[g * a[0][0], g * a[0][1]], [g * a[1][0], g * a[1][1]]])
                })
                .collect::<Result<_, AssemblyError>>()?
        } else {
            vec![[[0.0; 2]; 2]; nq]
        };
        let feat = |j: &Jet, q: usize| VolFeat {
            h: j.hess,
            lap: j.hess[0] + j.hess[2],
            nd: contract(&ga[q], &j.hess),
        };
        let side = |c: Cols| -> (usize, Vec<VolFeat>) {
            match c {
                Cols::Basis => {
                    let b = nb + 1;
                    let mut out = vec![VolFeat::default(); nq * b];
                    for q in 0..nq {
                        for i in 0..nb {
                            out[q * b + i] = feat(&ev.jets[q * nb + i], q);
                        }
                    }
                    (b, out)
                }
                Cols::Field(f) => {
                    let jets = f.jets(space, k, &ev.jets, &ev.points);
                    (1, jets.iter().enumerate().map(|(q, j)| feat(j, q)).collect())
                }
            }
        };
        let (nt, tf) = side(test);
        let (ns, sf) = side(trial);
        let w = &self.w;
        let mut data = vec![0.0; nt * ns];
        for q in 0..nq {
            let wq = ev.weights[q];
            for i in 0..nt {
                let t = &tf[q * nt + i];
                if t.lap == 0.0 && t.h == [0.0; 3] {
                    continue;
                }
                let row = &mut data[i * ns..(i + 1) * ns];
                for (j, s) in sf[q * ns..(q + 1) * ns].iter().enumerate() {
                    let hh = t.h[0] * s.h[0] + 2.0 * t.h[1] * s.h[1] + t.h[2] * s.h[2];
                    row[j] += wq * (w.hess * hh + w.lap * t.lap * s.lap + w.nondiv * s.nd * t.lap);
                }
            }
        }
        Ok(Local {
            elems: vec![k],
            data,
        })
    }

    fn interior(&self, rec: &FaceRecord, test: Cols, trial: Cols) -> Result<Local, AssemblyError> {
        let space = self.space;
        let nb = space.n_basis;
        let nq = rec.len();
        let (kn, _) = rec.neighbor.expect("interior face");
        let k = rec.element;
        let jp = space.face_values(rec, false)?;
        let jm = space.face_values(rec, true)?;
        let feat = |plus: Option<&Jet>, lp: f64, minus: Option<&Jet>, lm: f64, q: usize| {
            let n = rec.normals[q];
            let t = rec.tangents[q];
            let tr = |j: Option<&Jet>| match j {
                Some(j) => (
                    j.value,
                    dot(j.grad, n),
                    dot(j.grad, t),
                    quad(&j.hess, t, t),
                    quad(&j.hess, t, n),
                ),
                None => (0.0, 0.0, 0.0, 0.0, 0.0),
            };
            let a = tr(plus);
            let b = tr(minus);
            FaceFeat {
                jv: a.0 - b.0,
                jdn: a.1 - b.1,
                jdt: a.2 - b.2,
                jl: lp - lm,
                alt: 0.5 * (a.3 + b.3),
                atn: 0.5 * (a.4 + b.4),
            }
        };
        let side = |c: Cols| -> (usize, Vec<FaceFeat>) {
            match c {
                Cols::Basis => {
                    let b = nb + 1;
                    let mut out = vec![FaceFeat::default(); nq * 2 * b];
                    for q in 0..nq {
                        for i in 0..nb {
                            out[q * 2 * b + i] = feat(Some(&jp[q * nb + i]), 0.0, None, 0.0, q);
                            out[q * 2 * b + b + i] = feat(None, 0.0, Some(&jm[q * nb + i]), 0.0, q);
                        }
                        out[q * 2 * b + nb] = feat(None, 1.0, None, 0.0, q);
                        out[q * 2 * b + b + nb] = feat(None, 0.0, None, 1.0, q);
                    }
                    (2 * b, out)
                }
                Cols::Field(f) => {
                    let a = f.jets(space, k, &jp, &rec.points);
                    let b = f.jets(space, kn, &jm, &rec.points);
                    let la = f.lambda(space, k);
                    let lb = f.lambda(space, kn);
                    (1, (0..nq).map(|q| feat(Some(&a[q]), la, Some(&b[q]), lb, q)).collect())
                }
            }
        };
        let (nt, tf) = side(test);
        let (ns, sf) = side(trial);
        let p = space.degree;
        let h = rec.h_tilde;
        let mu = self.pen.mu(h, p);
        let eta = self.pen.eta(h, p);
        let ell = self.pen.ell(h);
        let wc = self.w.consistency;
        let wj = self.w.jump;
        let mut data = vec![0.0; nt * ns];
        for q in 0..nq {
            let wq = rec.weights[q];
            for i in 0..nt {
                let t = &tf[q * nt + i];
                let row = &mut data[i * ns..(i + 1) * ns];
                for (j, s) in sf[q * ns..(q + 1) * ns].iter().enumerate() {
                    let cons = s.alt * t.jdn + t.alt * s.jdn - s.atn * t.jdt - t.atn * s.jdt;
                    let jump = mu * (s.jdt * t.jdt + s.jdn * t.jdn) + eta * s.jv * t.jv + ell * s.jl * t.jl;
                    row[j] += wq * (wc * cons + wj * jump);
                }
            }
        }
        Ok(Local {
            elems: vec![k, kn],
            data,
        })
    }

    fn boundary(&self, rec: &FaceRecord, test: Cols, trial: Cols) -> Result<Local, AssemblyError> {
        let space = self.space;
        let nb = space.n_basis;
        let nq = rec.len();
        let k = rec.element;
        let jp = space.face_values(rec, false)?;
        let beta = &self.problem.beta;
        let chart = &self.problem.chart;
        // per point: (omega', curvature weight, beta, beta_perp)
        let geo: Vec<(f64, f64, [f64; 2], [f64; 2])> = (0..nq)
            .map(|q| {
                let y = rec.projected[q];
                let tc = perp(chart.boundary_normal(y));
                let dth = beta.d_theta(y, tc);
                let hc = rec.curvature[q];
                let kappa = match self.w.mutation {
                    Mutation::None => dth + hc,
                    Mutation::FlipCurvatureSign => dth - hc,
                };
                let b = beta.beta(y);
                (dth + hc, kappa, b, perp(b))
            })
            .collect();
        let feat = |j: Option<&Jet>, lam: f64, q: usize| match j {
            Some(j) => {
                let (om, _, b, bp) = geo[q];
                let bd = dot(b, j.grad);
                BdFeat {
                    g: j.grad,
                    bd,
                    dtbp: -om * bd + quad(&j.hess, bp, rec.tangents[q]),
                    lam,
                }
            }
            None => BdFeat {
                lam,
                ..BdFeat::default()
            },
        };
        let side = |c: Cols| -> (usize, Vec<BdFeat>) {
            match c {
                Cols::Basis => {
                    let b = nb + 1;
                    let mut out = vec![BdFeat::default(); nq * b];
                    for q in 0..nq {
                        for i in 0..nb {
                            out[q * b + i] = feat(Some(&jp[q * nb + i]), 0.0, q);
                        }
                        out[q * b + nb] = feat(None, 1.0, q);
                    }
                    (b, out)
                }
                Cols::Field(f) => {
                    let a = f.jets(space, k, &jp, &rec.points);
                    let l = f.lambda(space, k);
                    (1, (0..nq).map(|q| feat(Some(&a[q]), l, q)).collect())
                }
            }
        };
        let (nt, tf) = side(test);
        let (ns, sf) = side(trial);
        let sigma = self.pen.sigma(rec.h_tilde, space.degree);
        let w = &self.w;
        let mut data = vec![0.0; nt * ns];
        for q in 0..nq {
            let wq = rec.weights[q];
            let kappa = geo[q].1;
            for i in 0..nt {
                let t = &tf[q * nt + i];
                let tr = t.bd - t.lam;
                let row = &mut data[i * ns..(i + 1) * ns];
                for (j, s) in sf[q * ns..(q + 1) * ns].iter().enumerate() {
                    let sr = s.bd - s.lam;
                    let v = w.curvature * kappa * dot(t.g, s.g)
                        + w.oblique * (s.dtbp * tr + t.dtbp * sr)
                        + w.jump * sigma * sr * tr;
                    row[j] += wq * v;
                }
            }
        }
        Ok(Local {
            elems: vec![k],
            data,
        })
    }

    /// Calls `sink` with every local contribution in a fixed order.
    fn run(&self, test: Cols, trial: Cols, mut sink: impl FnMut(Local)) -> Result<(), AssemblyError> {
        let mesh = self.space.mesh;
        let w = &self.w;
        let need_volume = w.hess != 0.0 || w.lap != 0.0 || w.nondiv != 0.0;
        if need_volume {
            let ids: Vec<usize> = (0..mesh.n_elements()).collect();
            for chunk in ids.chunks(CHUNK) {
                let locals: Vec<Local> = chunk
                    .par_iter()
                    .map(|&k| self.volume(k, test, trial))
                    .collect::<Result<_, _>>()?;
                locals.into_iter().for_each(&mut sink);
            }
        }
        let need_interior = w.consistency != 0.0 || w.jump != 0.0;
        let need_boundary = w.curvature != 0.0 || w.oblique != 0.0 || w.jump != 0.0;
        let ids: Vec<usize> = (0..mesh.faces.len())
            .filter(|&f| match mesh.faces[f].kind {
                FaceKind::Interior => need_interior,
                FaceKind::Boundary => need_boundary,
            })
            .collect();
        for chunk in ids.chunks(CHUNK) {
            let locals: Vec<Local> = chunk
                .par_iter()
                .map(|&f| {
                    let rec = mesh.face_geometry(f, &self.space.face_rule)?;
                    match rec.kind {
                        FaceKind::Interior => self.interior(&rec, test, trial),
                        FaceKind::Boundary => self.boundary(&rec, test, trial),
                    }
                })
                .collect::<Result<_, _>>()?;
            locals.into_iter().for_each(&mut sink);
        }
        Ok(())
    }
}

/// Element adjacency through interior faces.
pub(crate) fn element_neighbors(space: &DgSpace) -> Vec<Vec<usize>> {
    let mesh = space.mesh;
    let mut nb = vec![Vec::new(); mesh.n_elements()];
    for f in &mesh.faces {
        if let Some((kn, _)) = f.neighbor {
            nb[f.element].push(kn);
            nb[kn].push(f.element);
        }
    }
    nb
}

/// Matrix of a weighted form over the pair dofs; row = test function, column = trial.
pub fn assemble_form(
    space: &DgSpace,
    problem: &ProblemSpec,
    pen: &PenaltyConfig,
    w: FormWeights,
) -> Result<BlockMatrix, AssemblyError> {
    let b = space.block_size();
    let mut m = BlockMatrix::with_pattern(b, &element_neighbors(space), false);
    let ctx = Ctx {
        space,
        problem,
        pen,
        w,
    };
    ctx.run(Cols::Basis, Cols::Basis, |loc| {
        let ne = loc.elems.len();
        let n = ne * b;
        for (ia, &ka) in loc.elems.iter().enumerate() {
            for (ic, &kc) in loc.elems.iter().enumerate() {
                let blk = m.block_mut(ka, kc).expect("pattern covers face neighbours");
                for r in 0..b {
                    for s in 0..b {
                        blk[r * b + s] += loc.data[(ia * b + r) * n + ic * b + s];
                    }
                }
            }
        }
    })?;
    Ok(m)
}

/// Vector of form(field, phi) over all test basis functions phi; the multiplier slot is 0.
pub fn apply_form(
    space: &DgSpace,
    problem: &ProblemSpec,
    pen: &PenaltyConfig,
    w: FormWeights,
    field: Field,
) -> Result<Vec<f64>, AssemblyError> {
    let b = space.block_size();
    let mut out = vec![0.0; space.n_dofs()];
    let ctx = Ctx {
        space,
        problem,
        pen,
        w,
    };
    ctx.run(Cols::Basis, Cols::Field(field), |loc| {
        for (ia, &ka) in loc.elems.iter().enumerate() {
            for r in 0..b {
                out[ka * b + r] += loc.data[ia * b + r];
            }
        }
    })?;
    Ok(out)
}

/// form(u, v) for two fields.
pub fn evaluate_form(
    space: &DgSpace,
    problem: &ProblemSpec,
    pen: &PenaltyConfig,
    w: FormWeights,
    u: Field,
    v: Field,
) -> Result<f64, AssemblyError> {
    let ctx = Ctx {
        space,
        problem,
        pen,
        w,
    };
    let mut s = 0.0;
    ctx.run(Cols::Field(v), Cols::Field(u), |loc| s += loc.data[0])?;
    Ok(s)
}

/// ||(v, mu)||_{h,theta}
pub fn evaluate_norm(
    space: &DgSpace,
    problem: &ProblemSpec,
    pen: &PenaltyConfig,
    theta: f64,
    v: Field,
) -> Result<f64, AssemblyError> {
    if !(theta > 0.0 && theta <= 1.0) {
        return Err(AssemblyError::ThetaOutOfRange(theta));
    }
    let s = evaluate_form(space, problem, pen, FormWeights::norm(theta, pen.c_star), v, v)?;
    Ok(s.max(0.0).sqrt())
}

pub fn assemble_jh(space: &DgSpace, problem: &ProblemSpec, pen: &PenaltyConfig) -> Result<BlockMatrix, AssemblyError> {
    assemble_form(space, problem, pen, FormWeights::jh())
}

pub fn assemble_bhstar(
    space: &DgSpace,
    problem: &ProblemSpec,
    pen: &PenaltyConfig,
) -> Result<BlockMatrix, AssemblyError> {
    assemble_form(space, problem, pen, FormWeights::bhstar())
}

pub fn assemble_bhtheta(
    space: &DgSpace,
    problem: &ProblemSpec,
    pen: &PenaltyConfig,
    theta: f64,
) -> Result<BlockMatrix, AssemblyError> {
    if !(theta > 0.0 && theta <= 1.0) {
        return Err(AssemblyError::ThetaOutOfRange(theta));
    }
    assemble_form(space, problem, pen, FormWeights::bhtheta(theta))
}

/// sum_K <gamma f, Lap v> for every test basis function.
pub fn assemble_load(space: &DgSpace, problem: &ProblemSpec) -> Result<Vec<f64>, AssemblyError> {
    let nb = space.n_basis;
    let b = space.block_size();
    let mut out = vec![0.0; space.n_dofs()];
    let ids: Vec<usize> = (0..space.n_elements()).collect();
    for chunk in ids.chunks(CHUNK) {
        let locals: Vec<Vec<f64>> = chunk
            .par_iter()
            .map(|&k| {
                let ev = space.element_values(k)?;
                let mut loc = vec![0.0; nb];
                for (q, x) in ev.points.iter().enumerate() {
                    let gf = gamma(&problem.coefficient.eval(*x))? * problem.f(*x) * ev.weights[q];
                    for (i, l) in loc.iter_mut().enumerate() {
                        let h = &ev.jets[q * nb + i].hess;
                        *l += gf * (h[0] + h[2]);
                    }
                }
                Ok(loc)
            })
            .collect::<Result<_, AssemblyError>>()?;
        for (&k, loc) in chunk.iter().zip(locals) {
            out[k * b..k * b + nb].copy_from_slice(&loc);
        }
    }
    Ok(out)
}

/// Matrix, load and mean-constraint border of the discrete problem.
#[derive(Debug, Clone)]
pub struct AssembledSystem {
    /// Bordered matrix: the last row and column carry the zero-mean constraint on u.
    pub matrix: BlockMatrix,
    pub rhs: Vec<f64>,
    /// True when gamma A = I, so that the form is symmetric.
    pub symmetric: bool,
    /// Unknowns per element (N_p coefficients of u, then c).
    pub block: usize,
}

impl AssembledSystem {
    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    /// Writes the matrix in coordinate form and the load vector one value per line.
    pub fn write_dump(
        &self,
        matrix: &mut impl std::io::Write,
        rhs: &mut impl std::io::Write,
    ) -> std::io::Result<()> {
        self.matrix.write_coordinate(matrix)?;
        writeln!(rhs, "%% {}", self.rhs.len())?;
        for v in &self.rhs {
            writeln!(rhs, "{v:.17e}")?;
        }
        Ok(())
    }
}

fn is_laplacian(problem: &ProblemSpec) -> bool {
    use crate::problem::CoefficientField as C;
    match &problem.coefficient {
        C::Identity => true,
        C::Constant(a) => a[0][1] == 0.0 && a[1][0] == 0.0 && a[0][0] == a[1][1],
        C::SignCoupled { off_diagonal, .. } => *off_diagonal == 0.0,
    }
}

/// Appends the row and column of the constraint int u = 0 to a pair-dof matrix.
pub fn add_mean_border(space: &DgSpace, matrix: &mut BlockMatrix) {
    let nb = space.n_basis;
    let b = space.block_size();
    matrix.bordered = true;
    matrix.border_col = vec![0.0; space.n_pair_dofs()];
    for k in 0..space.n_elements() {
        matrix.border_col[k * b..k * b + nb].copy_from_slice(&space.basis_integrals[k * nb..(k + 1) * nb]);
    }
    matrix.border_row = matrix.border_col.clone();
    matrix.corner = 0.0;
}

/// The system for A_h with the given weights (normally `FormWeights::ah()`).
pub fn assemble_system(
    space: &DgSpace,
    problem: &ProblemSpec,
    pen: &PenaltyConfig,
    w: FormWeights,
) -> Result<AssembledSystem, AssemblyError> {
    problem.cordes()?;
    let mut matrix = assemble_form(space, problem, pen, w)?;
    add_mean_border(space, &mut matrix);
    let rhs = assemble_load(space, problem)?;
    Ok(AssembledSystem {
        matrix,
        rhs,
        symmetric: w.nondiv == 0.0 || is_laplacian(problem),
        block: space.block_size(),
    })
}

pub fn assemble_ah(space: &DgSpace, problem: &ProblemSpec, pen: &PenaltyConfig) -> Result<AssembledSystem, AssemblyError> {
    assemble_system(space, problem, pen, FormWeights::ah())
}

/// max_i |form((u, c), phi_i) - l(phi_i)| / ||phi_i||_{h,1} over the basis functions phi_i,
/// with the exact pair sampled at the quadrature points.
pub fn consistency_residual(
    space: &DgSpace,
    problem: &ProblemSpec,
    pen: &PenaltyConfig,
    w: FormWeights,
) -> Result<f64, AssemblyError> {
    let ex = problem.exact.as_ref().ok_or(AssemblyError::MissingExactSolution)?;
    let r = apply_form(space, problem, pen, w, Field::Exact(ex))?;
    let l = assemble_load(space, problem)?;
    let norm = assemble_form(space, problem, pen, FormWeights::norm(1.0, pen.c_star))?;
    Ok((0..space.n_pair_dofs())
        .map(|i| (r[i] - l[i]).abs() / norm.get(i, i).sqrt())
        .fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{disk_mesh_with_rings, FaceKind, Grading};
    use crate::problem::experiment_catalog;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn setup(rings: usize, p: usize) -> (crate::geometry::CurvedMesh, usize) {
        (disk_mesh_with_rings(rings, Grading::None).unwrap(), p)
    }

    fn random_field(space: &DgSpace, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut x: Vec<f64> = (0..space.n_dofs()).map(|_| rng.random_range(-1.0..1.0)).collect();
        x[space.multiplier_dof()] = 0.0;
        x
    }

    #[test]
    fn jump_form_vanishes_on_smooth_fields_away_from_the_boundary() {
        let (mesh, p) = setup(5, 3);
        let space = DgSpace::new(&mesh, p).unwrap();
        let prob = experiment_catalog(1).unwrap();
        let pen = PenaltyConfig::default();
        let ex = prob.exact.as_ref().unwrap();
        let r = apply_form(&space, &prob, &pen, FormWeights::jh(), Field::Exact(ex)).unwrap();
        let norm = assemble_form(&space, &prob, &pen, FormWeights::norm(1.0, 1.0)).unwrap();
        let b = space.block_size();
        for k in 0..space.n_elements() {
            if mesh.elements[k].boundary_edge.is_some() {
                continue;
            }
            for i in 0..b {
                let d = k * b + i;
                assert!(r[d].abs() <= 1e-9 * norm.get(d, d).sqrt(), "{k} {i} {}", r[d]);
            }
        }
        let zero = vec![0.0; space.n_dofs()];
        let z = apply_form(&space, &prob, &pen, FormWeights::jh(), Field::Discrete(&zero)).unwrap();
        assert!(z.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn value_jump_of_an_element_indicator() {
        let (mesh, p) = setup(4, 2);
        let space = DgSpace::new(&mesh, p).unwrap();
        let prob = experiment_catalog(1).unwrap();
        let pen = PenaltyConfig::default();
        let k = mesh.elements.iter().position(|e| e.boundary_edge.is_none()).unwrap();
        let ones = space.interpolate(|_| 1.0).unwrap();
        let mut v = vec![0.0; space.n_dofs()];
        let b = space.block_size();
        v[k * b..k * b + space.n_basis].copy_from_slice(&ones[k * b..k * b + space.n_basis]);
        let got = evaluate_form(&space, &prob, &pen, FormWeights::jh(), Field::Discrete(&v), Field::Discrete(&v)).unwrap();
        let mut want = 0.0;
        for &f in &mesh.element_faces[k] {
            let face = &mesh.faces[f];
            assert_eq!(face.kind, FaceKind::Interior);
            let el = &mesh.elements[face.element];
            let a = el.nodes[face.local_edge];
            let c = el.nodes[(face.local_edge + 1) % 3];
            want += pen.eta(face.h_tilde, p) * (c[0] - a[0]).hypot(c[1] - a[1]);
        }
        assert!((got - want).abs() <= 1e-10 * want, "{got} {want}");
    }

    #[test]
    fn star_form_reduces_to_laplacians_on_the_exact_solution() {
        let (mesh, p) = setup(5, 3);
        let space = DgSpace::new(&mesh, p).unwrap();
        let prob = experiment_catalog(1).unwrap();
        let pen = PenaltyConfig::default();
        let ex = prob.exact.as_ref().unwrap();
        let bs = apply_form(&space, &prob, &pen, FormWeights::bhstar(), Field::Exact(ex)).unwrap();
        let lap = FormWeights {
            lap: 1.0,
            ..FormWeights::ZERO
        };
        let l = apply_form(&space, &prob, &pen, lap, Field::Exact(ex)).unwrap();
        let scale = l.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let gap = bs.iter().zip(&l).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        assert!(gap <= 1e-8 * scale, "{gap} {scale}");
    }

    #[test]
    fn theta_forms_are_symmetric() {
        let (mesh, p) = setup(4, 3);
        let space = DgSpace::new(&mesh, p).unwrap();
        let pen = PenaltyConfig::default();
        for id in [1, 2] {
            let prob = experiment_catalog(id).unwrap();
            for theta in [0.25, 0.5, 1.0] {
                let m = assemble_bhtheta(&space, &prob, &pen, theta).unwrap();
                assert!(m.asymmetry() <= 1e-12 * m.max_abs(), "{id} {theta}");
            }
        }
        assert!(assemble_bhtheta(&space, &experiment_catalog(1).unwrap(), &pen, 0.0).is_err());
    }

    #[test]
    fn laplacian_problem_gives_the_half_theta_form() {
        let (mesh, p) = setup(4, 2);
        let space = DgSpace::new(&mesh, p).unwrap();
        let prob = experiment_catalog(1).unwrap();
        let pen = PenaltyConfig::default();
        let sys = assemble_ah(&space, &prob, &pen).unwrap();
        assert!(sys.symmetric);
        assert_eq!(sys.dim(), space.n_dofs());
        let b = assemble_bhtheta(&space, &prob, &pen, 0.5).unwrap();
        let n = space.n_pair_dofs();
        let scale = b.max_abs();
        for (i, j, v) in b.triplets() {
            assert!((sys.matrix.get(i, j) - v).abs() <= 1e-12 * scale);
        }
        assert_eq!(sys.matrix.border_col.len(), n);
        let nb = space.n_basis;
        for k in 0..space.n_elements() {
            let blk = &sys.matrix.border_col[k * space.block_size()..(k + 1) * space.block_size()];
            assert_eq!(&blk[..nb], &space.basis_integrals[k * nb..(k + 1) * nb]);
            assert_eq!(blk[nb], 0.0);
        }
        assert!(!assemble_ah(&space, &experiment_catalog(2).unwrap(), &pen).unwrap().symmetric);
    }

    #[test]
    fn norm_is_positive_and_zero_only_at_zero() {
        let (mesh, p) = setup(3, 2);
        let space = DgSpace::new(&mesh, p).unwrap();
        let prob = experiment_catalog(2).unwrap();
        let pen = PenaltyConfig::default();
        let zero = vec![0.0; space.n_dofs()];
        assert_eq!(evaluate_norm(&space, &prob, &pen, 1.0, Field::Discrete(&zero)).unwrap(), 0.0);
        for seed in 0..20 {
            let v = random_field(&space, seed);
            assert!(evaluate_norm(&space, &prob, &pen, 0.5, Field::Discrete(&v)).unwrap() > 0.0);
        }
        assert!(evaluate_norm(&space, &prob, &pen, 1.5, Field::Discrete(&zero)).is_err());
        // the only null direction is the global constant, removed by the mean constraint
        let m = assemble_form(&space, &prob, &pen, FormWeights::norm(1.0, 1.0)).unwrap();
        let n = space.n_pair_dofs();
        let a = nalgebra::DMatrix::from_row_slice(n, n, &m.to_dense());
        let eig = nalgebra::SymmetricEigen::new(a);
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
        let top = eig.eigenvalues[order[n - 1]];
        assert!(eig.eigenvalues[order[0]].abs() < 1e-10 * top);
        assert!(eig.eigenvalues[order[1]] > 1e-8 * top, "{}", eig.eigenvalues[order[1]]);
        let ones = space.interpolate(|_| 1.0).unwrap();
        let ones = nalgebra::DVector::from_row_slice(&ones[..n]).normalize();
        assert!((eig.eigenvectors.column(order[0]).dot(&ones).abs() - 1.0).abs() < 1e-8);
    }

    #[test]
    fn residual_of_the_exact_solution_is_small() {
        let (mesh, p) = setup(8, 3);
        let space = DgSpace::new(&mesh, p).unwrap();
        let pen = PenaltyConfig::default();
        for id in [1, 2] {
            let prob = experiment_catalog(id).unwrap();
            let r = consistency_residual(&space, &prob, &pen, FormWeights::ah()).unwrap();
            assert!(r < 1e-4, "{id} {r}");
        }
    }
}

