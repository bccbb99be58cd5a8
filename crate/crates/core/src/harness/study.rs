use std::path::Path;
use std::time::Instant;

use serde::Serialize;

use crate::assembly::{assemble_ah, error_norms, evaluate_norm, Field, PenaltyConfig};
use crate::geometry::CurvedMesh;
use crate::problem::ProblemSpec;
use crate::solver::{solve, SolveOptions};
use crate::space::DgSpace;

use super::config::{ladder_mesh, Ladder};
use super::report::{ErrorReport, LevelResult, Metric, ReportMetadata};
use super::{HarnessError, RunConfig};

/// Default radial grading exponent of the adapted study.
pub const DEFAULT_GRADING: f64 = 0.5;

/// Points used for the slope fits of the adapted study.
const SLOPE_POINTS: usize = 4;

pub(crate) fn source_l2(space: &DgSpace, problem: &ProblemSpec) -> Result<f64, HarnessError> {
    let mut s = 0.0;
    for k in 0..space.n_elements() {
        let ev = space.element_values(k)?;
        for (x, w) in ev.points.iter().zip(&ev.weights) {
            s += w * problem.f(*x).powi(2);
        }
    }
    Ok(s.sqrt())
}

/// Mesh, assemble, solve and measure one level.
pub(crate) fn solve_level(
    problem: &ProblemSpec,
    pen: &PenaltyConfig,
    degree: usize,
    mesh: &CurvedMesh,
    level: usize,
    opts: &SolveOptions,
    dump: Option<&Path>,
) -> Result<(LevelResult, Vec<f64>), HarnessError> {
    let space = DgSpace::new(mesh, degree)?;
    let t = Instant::now();
    let sys = assemble_ah(&space, problem, pen)?;
    let assembly_seconds = t.elapsed().as_secs_f64();
    if let Some(dir) = dump {
        std::fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
        let mp = dir.join(format!("matrix_L{level}.txt"));
        let rp = dir.join(format!("rhs_L{level}.txt"));
        let mut mf = std::io::BufWriter::new(std::fs::File::create(&mp).map_err(|e| HarnessError::io(&mp, e))?);
        let mut rf = std::io::BufWriter::new(std::fs::File::create(&rp).map_err(|e| HarnessError::io(&rp, e))?);
        sys.write_dump(&mut mf, &mut rf).map_err(|e| HarnessError::io(&mp, e))?;
    }
    let (x, report) = solve(&sys, opts)?;
    let errors = error_norms(&space, problem, pen, &x)?;
    let solution_norm = evaluate_norm(&space, problem, pen, 1.0, Field::Discrete(&x))?;
    let row = LevelResult {
        level,
        h: mesh.h(),
        ndofs: space.n_dofs(),
        n_elements: mesh.n_elements(),
        mesh_hash: mesh.hash(),
        errors,
        solution_norm,
        source_l2: source_l2(&space, problem)?,
        assembly_seconds,
        solve: report,
    };
    log::info!(
        "level {level}: h {:.4} ndofs {} h1norm {:.3e} residual {:.1e}",
        row.h,
        row.ndofs,
        row.errors.h1norm,
        row.solve.final_residual
    );
    Ok((row, x))
}

fn study(cfg: &RunConfig, ladder: Ladder) -> Result<ErrorReport, HarnessError> {
    cfg.validate()?;
    let problem = cfg.problem()?;
    let pen = cfg.penalty();
    let dump = if cfg.dump_matrix {
        Some(cfg.out_dir.clone().unwrap_or_else(|| ".".into()).join("dump"))
    } else {
        None
    };
    let mut rows = Vec::new();
    for level in cfg.level_indices() {
        let (row, _) = ladder_mesh(ladder, level)
            .and_then(|mesh| solve_level(&problem, &pen, cfg.degree, &mesh, level, &cfg.solver, dump.as_deref()))
            .map_err(|e| e.at_level(level))?;
        rows.push(row);
    }
    Ok(ErrorReport {
        metadata: ReportMetadata {
            problem: problem.name.clone(),
            degree: cfg.degree,
            grading: match ladder {
                Ladder::Graded(g) => g,
                Ladder::Uniform => None,
            },
            penalties: pen,
            solver: cfg.solver,
            threads: rayon::current_num_threads(),
        },
        rows,
    })
}

/// Runs every level of `cfg` and writes the tables when an output directory is set.
pub fn run_convergence_study(cfg: &RunConfig) -> Result<ErrorReport, HarnessError> {
    let report = study(cfg, cfg.ladder())?;
    if let Some(dir) = &cfg.out_dir {
        report.write(dir, &cfg.file_stem())?;
    }
    Ok(report)
}

/// Quasi-uniform and graded sequences with equal ring counts, so ndofs match level by level.
#[derive(Debug, Clone, Serialize)]
pub struct AdaptedReport {
    pub quasi_uniform: ErrorReport,
    pub adapted: ErrorReport,
    /// Least-squares slopes of the broken H2 error against ndofs over the last four levels.
    pub slope_quasi_uniform: f64,
    pub slope_adapted: f64,
    /// Adapted error below the quasi-uniform one at each of the last three levels.
    pub adapted_below: bool,
}

pub fn run_adapted_study(cfg: &RunConfig) -> Result<AdaptedReport, HarnessError> {
    if cfg.problem_file.is_none() && cfg.experiment != 3 {
        log::warn!("the adapted study targets experiment 3; running experiment {}", cfg.experiment);
    }
    let g = cfg.grading.unwrap_or(DEFAULT_GRADING);
    let cfg = RunConfig {
        grading: Some(g),
        ..cfg.clone()
    };
    if cfg.levels < SLOPE_POINTS {
        return Err(HarnessError::Config(format!(
            "the adapted study needs at least {SLOPE_POINTS} levels"
        )));
    }
    let quasi_uniform = study(&cfg, Ladder::Graded(None))?;
    let adapted = study(&cfg, Ladder::Graded(Some(g)))?;
    let m = Metric::H2Semi;
    let q = quasi_uniform.values(m);
    let a = adapted.values(m);
    let n = q.len();
    let adapted_below = (n.saturating_sub(3)..n).all(|i| a[i] < q[i]);
    let report = AdaptedReport {
        slope_quasi_uniform: quasi_uniform.ndofs_slope(m, SLOPE_POINTS).unwrap_or(f64::NAN),
        slope_adapted: adapted.ndofs_slope(m, SLOPE_POINTS).unwrap_or(f64::NAN),
        quasi_uniform,
        adapted,
        adapted_below,
    };
    if let Some(dir) = &cfg.out_dir {
        let stem = cfg.file_stem();
        report.quasi_uniform.write(dir, &format!("{stem}_quasiuniform"))?;
        report.adapted.write(dir, &format!("{stem}_adapted"))?;
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coarse_study_runs_and_converges() {
        let cfg = RunConfig {
            degree: 2,
            levels: 3,
            ..Default::default()
        };
        let r = run_convergence_study(&cfg).unwrap();
        assert_eq!(r.rows.len(), 3);
        let e = r.values(Metric::H1Norm);
        assert!(e[2] < e[1] && e[1] < e[0]);
        assert!(r.rows.iter().all(|row| row.solve.converged));
        let csv = r.to_csv().unwrap();
        assert_eq!(csv.lines().count(), 4);
        assert!(!csv.contains("NaN"));
    }

    #[test]
    fn level_errors_are_annotated() {
        let cfg = RunConfig {
            levels: 2,
            solver: SolveOptions {
                max_refinement_iters: 0,
                ..Default::default()
            },
            ..Default::default()
        };
        assert!(matches!(run_convergence_study(&cfg), Err(HarnessError::Config(_))));
        let e = HarnessError::Config("x".into()).at_level(3);
        assert_eq!(e.to_string(), "level 3: invalid run configuration: x");
    }
}
