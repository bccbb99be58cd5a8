//! Experiment driver: convergence studies, EOC tables and the verification suite.

pub mod config;
pub mod report;
pub mod study;
pub mod verify;

use std::path::PathBuf;

use crate::assembly::AssemblyError;
use crate::geometry::GeometryError;
use crate::problem::ProblemError;
use crate::solver::SolverError;
use crate::space::SpaceError;

pub use config::{RunConfig, THREADS_ENV};
pub use report::{eoc, loglog_slope, ErrorReport, LevelResult, Metric, ReportMetadata};
pub use study::{run_adapted_study, run_convergence_study, AdaptedReport};
pub use verify::{run_verification_suite, CheckResult, VerificationReport, VerifyOptions};

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("invalid run configuration: {0}")]
    Config(String),
    #[error("level {level}: {source}")]
    Level {
        level: usize,
        #[source]
        source: Box<HarnessError>,
    },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Problem(#[from] ProblemError),
    #[error(transparent)]
    Space(#[from] SpaceError),
    #[error(transparent)]
    Assembly(#[from] AssemblyError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("config file: {0}")]
    Toml(#[from] toml::de::Error),
    #[error("csv output: {0}")]
    Csv(#[from] csv::Error),
    #[error("json output: {0}")]
    Json(#[from] serde_json::Error),
}

impl HarnessError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Self::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn at_level(self, level: usize) -> Self {
        Self::Level {
            level,
            source: Box::new(self),
        }
    }
}

/// Sizes the global rayon pool from `OBLIQUE_DG_THREADS` if set; returns the thread count.
pub fn init_threads() -> Result<usize, HarnessError> {
    if let Ok(v) = std::env::var(THREADS_ENV) {
        let n: usize = v
            .trim()
            .parse()
            .map_err(|_| HarnessError::Config(format!("{THREADS_ENV}={v:?} is not a thread count")))?;
        if n == 0 {
            return Err(HarnessError::Config(format!("{THREADS_ENV} must be at least 1")));
        }
        // a pool built earlier in the process wins; that is fine for repeated calls
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(rayon::current_num_threads())
}
