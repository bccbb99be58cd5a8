//! Direct solution of the assembled system with iterative refinement.

pub mod multifrontal;
pub mod ordering;

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::assembly::{AssembledSystem, BlockMatrix};

pub use multifrontal::{FactorStats, MultifrontalLu, PIVOT_TOLERANCE};
pub use ordering::{nested_dissection, EliminationTree, TreeNode};

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum SolverError {
    #[error("factorization hit a zero pivot near unknown {dof}")]
    Singular { dof: usize },
    #[error("invalid solver options: {0}")]
    Options(String),
    #[error("right-hand side has length {got}, expected {expected}")]
    Length { expected: usize, got: usize },
    #[error("elimination structure: {0}")]
    Structure(String),
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolveOptions {
    pub max_refinement_iters: usize,
    /// Target for ||b - M x|| / ||b||. Residuals are always recomputed from the assembled
    /// matrix, never from the factors.
    pub residual_tolerance: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            max_refinement_iters: 10,
            residual_tolerance: 1e-12,
        }
    }
}

impl SolveOptions {
    pub fn validate(&self) -> Result<(), SolverError> {
        if self.max_refinement_iters == 0 {
            return Err(SolverError::Options("max_refinement_iters must be at least 1".into()));
        }
        if !(self.residual_tolerance > 0.0) {
            return Err(SolverError::Options("residual tolerance must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct SolveReport {
    pub iterations: usize,
    /// Relative residual after each refinement pass.
    pub residual_history: Vec<f64>,
    pub final_residual: f64,
    /// False when the tolerance was not met; the best iterate is returned anyway.
    pub converged: bool,
    pub factor: FactorStats,
    pub factor_seconds: f64,
    pub wall_seconds: f64,
}

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Solves M x = b: factor once, then x += M^{-1}(b - M x) until the residual target.
pub fn solve_matrix(m: &BlockMatrix, b: &[f64], opts: &SolveOptions) -> Result<(Vec<f64>, SolveReport), SolverError> {
    opts.validate()?;
    let n = m.dim();
    if b.len() != n {
        return Err(SolverError::Length {
            expected: n,
            got: b.len(),
        });
    }
    let start = Instant::now();
    let lu = MultifrontalLu::factor(m)?;
    let factor_seconds = start.elapsed().as_secs_f64();
    let bnorm = norm2(b);
    let mut x = vec![0.0; n];
    let mut best = x.clone();
    let mut best_res = f64::INFINITY;
    let mut r = b.to_vec();
    let mut history = Vec::new();
    let mut ax = vec![0.0; n];
    if bnorm == 0.0 {
        history.push(0.0);
        best_res = 0.0;
    } else {
        for _ in 0..opts.max_refinement_iters {
            let mut d = r.clone();
            lu.solve_in_place(&mut d);
            x.iter_mut().zip(&d).for_each(|(a, e)| *a += e);
            m.matvec(&x, &mut ax);
            r.iter_mut().zip(b.iter().zip(&ax)).for_each(|(ri, (bi, ai))| *ri = bi - ai);
            let rel = norm2(&r) / bnorm;
            history.push(rel);
            if rel < best_res {
                best_res = rel;
                best.copy_from_slice(&x);
            }
            if rel <= opts.residual_tolerance {
                break;
            }
            // stagnation: another pass cannot help
            if history.len() >= 2 && rel >= history[history.len() - 2] {
                break;
            }
        }
    }
    let converged = best_res <= opts.residual_tolerance;
    if !converged {
        log::warn!("refinement stopped at relative residual {best_res:.3e}");
    }
    let report = SolveReport {
        iterations: history.len(),
        residual_history: history,
        final_residual: best_res,
        converged,
        factor: lu.stats,
        factor_seconds,
        wall_seconds: start.elapsed().as_secs_f64(),
    };
    Ok((best, report))
}

/// Solves the assembled system; returns the global vector (u, c per element, then multiplier).
pub fn solve(system: &AssembledSystem, opts: &SolveOptions) -> Result<(Vec<f64>, SolveReport), SolverError> {
    solve_matrix(&system.matrix, &system.rhs, opts)
}

/// Order-of-magnitude estimate of sigma_max / sigma_min: 20 power iterations on M^T M and
/// 20 on its inverse.
pub fn condition_estimate(m: &BlockMatrix) -> Result<f64, SolverError> {
    let n = m.dim();
    let lu = MultifrontalLu::factor(m)?;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let start: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let normalize = |v: &mut Vec<f64>| {
        let s = norm2(v);
        v.iter_mut().for_each(|x| *x /= s);
    };
    let mut v = start.clone();
    normalize(&mut v);
    let mut w = vec![0.0; n];
    let mut smax = 0.0;
    for _ in 0..20 {
        m.matvec(&v, &mut w);
        smax = norm2(&w);
        m.matvec_transpose(&w, &mut v);
        normalize(&mut v);
    }
    let mut v = start;
    normalize(&mut v);
    let mut inv = 0.0;
    for _ in 0..20 {
        let mut y = v.clone();
        lu.solve_in_place(&mut y);
        inv = norm2(&y);
        lu.solve_transpose_in_place(&mut y);
        v = y;
        normalize(&mut v);
    }
    Ok(smax * inv)
}
