use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use oblique_dg::assembly::{Mutation, SigmaRule};
use oblique_dg::geometry::{check_mesh, generate_disk_mesh, read_mesh, write_mesh, Grading};
use oblique_dg::harness::{
    init_threads, run_adapted_study, run_convergence_study, run_verification_suite, RunConfig, VerifyOptions,
    THREADS_ENV,
};

#[derive(Parser)]
#[command(name = "oblique-dg", version, about = "DG solver for nondivergence-form problems with oblique boundary conditions")]
#[command(after_help = format!("The thread count is read from {THREADS_ENV}."))]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Convergence study over a sequence of disk meshes.
    Run(RunArgs),
    /// Runs the verification suite.
    Verify(VerifyArgs),
    /// Mesh generation and checking.
    Mesh {
        #[command(subcommand)]
        command: MeshCommand,
    },
}

#[derive(Args)]
struct RunArgs {
    /// TOML run configuration; flags given on the command line take precedence.
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..=3))]
    experiment: Option<u32>,
    /// TOML problem description used instead of a catalog experiment.
    #[arg(long, value_name = "FILE")]
    problem: Option<PathBuf>,
    #[arg(long, short = 'p')]
    degree: Option<usize>,
    #[arg(long)]
    levels: Option<usize>,
    #[arg(long)]
    start_level: Option<usize>,
    /// Radial grading exponent in (0, 1]; switches to the graded mesh ladder.
    #[arg(long, value_name = "G")]
    grade: Option<f64>,
    /// Compare the quasi-uniform and graded ladders (uses --grade, default 0.5).
    #[arg(long)]
    adapted: bool,
    #[arg(long, value_enum)]
    sigma_rule: Option<SigmaArg>,
    #[arg(long)]
    c_stab: Option<f64>,
    #[arg(long)]
    c_star: Option<f64>,
    /// Relative residual targeted by iterative refinement.
    #[arg(long)]
    solver_tol: Option<f64>,
    #[arg(long)]
    solver_max_iters: Option<usize>,
    /// Output directory for the CSV and JSON tables.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Also write each level's matrix and load vector.
    #[arg(long)]
    dump_matrix: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum SigmaArg {
    Remark,
    Theorem,
}

#[derive(Clone, Copy, ValueEnum)]
enum MutationArg {
    None,
    FlipCurvatureSign,
}

#[derive(Args)]
struct VerifyArgs {
    /// Deliberately corrupt the method to check that the suite notices.
    #[arg(long, value_enum, default_value = "none")]
    mutation: MutationArg,
    /// Factor applied to the gradient jump penalty in the coercivity checks.
    #[arg(long, default_value_t = 1.0)]
    mu_scale: f64,
    /// Write the report as JSON.
    #[arg(long, value_name = "FILE")]
    json: Option<PathBuf>,
}

#[derive(Subcommand)]
enum MeshCommand {
    /// Writes the disk mesh of a level.
    Gen {
        #[arg(long)]
        level: usize,
        #[arg(long, value_name = "G")]
        grade: Option<f64>,
        #[arg(long, value_name = "FILE")]
        out: PathBuf,
    },
    /// Prints mesh metrics and invariant violations.
    Check { file: PathBuf },
}

fn run_config(a: &RunArgs) -> Result<RunConfig, Box<dyn std::error::Error>> {
    let mut c = match &a.config {
        Some(path) => RunConfig::from_toml_file(path)?,
        None => RunConfig::default(),
    };
    if let Some(e) = a.experiment {
        c.experiment = e as usize;
    }
    if a.problem.is_some() {
        c.problem_file = a.problem.clone();
    }
    c.degree = a.degree.unwrap_or(c.degree);
    c.levels = a.levels.unwrap_or(c.levels);
    c.start_level = a.start_level.unwrap_or(c.start_level);
    if a.grade.is_some() {
        c.grading = a.grade;
    }
    if let Some(s) = a.sigma_rule {
        c.penalties.sigma_rule = Some(match s {
            SigmaArg::Remark => SigmaRule::Remark,
            SigmaArg::Theorem => SigmaRule::Theorem,
        });
    }
    if a.c_stab.is_some() {
        c.penalties.c_stab = a.c_stab;
    }
    if a.c_star.is_some() {
        c.penalties.c_star = a.c_star;
    }
    c.solver.residual_tolerance = a.solver_tol.unwrap_or(c.solver.residual_tolerance);
    c.solver.max_refinement_iters = a.solver_max_iters.unwrap_or(c.solver.max_refinement_iters);
    if a.out.is_some() {
        c.out_dir = a.out.clone();
    }
    c.dump_matrix |= a.dump_matrix;
    Ok(c)
}

fn run(a: RunArgs) -> Result<bool, Box<dyn std::error::Error>> {
    let cfg = run_config(&a)?;
    if a.adapted {
        let r = run_adapted_study(&cfg)?;
        println!("quasi-uniform\n{}", r.quasi_uniform.summary());
        println!("graded\n{}", r.adapted.summary());
        println!(
            "H2 error vs ndofs slopes: quasi-uniform {:.3}, graded {:.3}; graded below on the last levels: {}",
            r.slope_quasi_uniform, r.slope_adapted, r.adapted_below
        );
        let rows = r.quasi_uniform.rows.iter().chain(&r.adapted.rows);
        return Ok(rows.into_iter().all(|row| row.solve.converged));
    }
    let r = run_convergence_study(&cfg)?;
    print!("{}", r.summary());
    if let Some(dir) = &cfg.out_dir {
        println!("tables written to {}", dir.display());
    }
    Ok(r.rows.iter().all(|row| row.solve.converged))
}

fn verify(a: VerifyArgs) -> Result<bool, Box<dyn std::error::Error>> {
    let opts = VerifyOptions {
        mutation: match a.mutation {
            MutationArg::None => Mutation::None,
            MutationArg::FlipCurvatureSign => Mutation::FlipCurvatureSign,
        },
        mu_scale: a.mu_scale,
    };
    let report = run_verification_suite(&opts);
    print!("{}", report.summary());
    if let Some(path) = a.json {
        std::fs::write(&path, serde_json::to_string_pretty(&report)?)?;
    }
    let failed = report.checks.iter().filter(|c| !c.passed).count();
    println!("{} checks, {failed} failed", report.checks.len());
    Ok(failed == 0)
}

fn mesh(cmd: MeshCommand) -> Result<bool, Box<dyn std::error::Error>> {
    match cmd {
        MeshCommand::Gen { level, grade, out } => {
            let grading = grade.map(Grading::TowardOrigin).unwrap_or(Grading::None);
            let m = generate_disk_mesh(level, grading)?;
            write_mesh(&m, &out)?;
            println!(
                "{} elements, {} faces, h = {:.4}, written to {}",
                m.n_elements(),
                m.faces.len(),
                m.h(),
                out.display()
            );
            Ok(true)
        }
        MeshCommand::Check { file } => {
            let m = read_mesh(&file)?;
            let s = m.metrics();
            println!("elements          {}", s.n_elements);
            println!("faces             {} ({} on the boundary)", s.n_faces, s.n_boundary_faces);
            println!("h                 {:.6}", s.h);
            println!("shape regularity  {:.4}", s.shape_regularity);
            println!("neighbour ratio   {:.4}", s.neighbor_ratio);
            println!("max map deviation {:.4e}", s.max_map_deviation);
            println!("hash              {}", m.hash());
            let check = check_mesh(&m, 8)?;
            for v in &check.violations {
                println!("violation: {v}");
            }
            println!("{} violations", check.violations.len());
            Ok(check.ok())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Err(e) = init_threads() {
        eprintln!("error: {e}");
        return ExitCode::from(2);
    }
    let result = match cli.command {
        Command::Run(a) => run(a),
        Command::Verify(a) => verify(a),
        Command::Mesh { command } => mesh(command),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
