use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::assembly::{PenaltyConfig, SigmaRule};
use crate::geometry::{disk_mesh_with_rings, graded_rings, uniform_rings, CurvedMesh, Grading};
use crate::problem::{experiment_catalog, ProblemConfig, ProblemSpec};
use crate::solver::SolveOptions;

use super::HarnessError;

/// Environment variable read by [`super::init_threads`].
pub const THREADS_ENV: &str = "OBLIQUE_DG_THREADS";

/// Optional overrides of the default penalty rule.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PenaltyOverrides {
    pub c_stab: Option<f64>,
    pub sigma_rule: Option<SigmaRule>,
    pub c_star: Option<f64>,
}

/// One study: a problem, a degree and a run of consecutive mesh levels.
///
/// Loadable from TOML; every field has a default.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Catalog experiment (1, 2 or 3); ignored when `problem_file` is set.
    pub experiment: usize,
    /// TOML problem description replacing the catalog experiment.
    pub problem_file: Option<PathBuf>,
    pub degree: usize,
    /// Number of levels in the study.
    pub levels: usize,
    pub start_level: usize,
    /// Radial grading exponent in (0, 1]; selects the graded level ladder.
    pub grading: Option<f64>,
    pub penalties: PenaltyOverrides,
    pub solver: SolveOptions,
    pub out_dir: Option<PathBuf>,
    /// Write the matrix and load vector of every level next to the report.
    pub dump_matrix: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            experiment: 1,
            problem_file: None,
            degree: 2,
            levels: 5,
            start_level: 0,
            grading: None,
            penalties: PenaltyOverrides::default(),
            solver: SolveOptions::default(),
            out_dir: None,
            dump_matrix: false,
        }
    }
}

/// Which ring ladder a study walks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum Ladder {
    Uniform,
    /// sqrt(2) ring growth, optionally graded towards the origin
    Graded(Option<f64>),
}

impl RunConfig {
    pub fn from_toml_file(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        Ok(toml::from_str(&text)?)
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.problem_file.is_none() && !(1..=3).contains(&self.experiment) {
            return Err(HarnessError::Config(format!(
                "experiment must be 1, 2 or 3, got {}",
                self.experiment
            )));
        }
        if self.degree < 2 {
            return Err(HarnessError::Config(format!(
                "degree must be at least 2, got {}",
                self.degree
            )));
        }
        if self.degree > 4 {
            log::warn!("degree {} is outside the tested range 2..=4", self.degree);
        }
        if self.levels < 2 {
            return Err(HarnessError::Config("at least two levels are needed for rates".into()));
        }
        if let Some(g) = self.grading {
            if !(g > 0.0 && g <= 1.0) {
                return Err(HarnessError::Config(format!("grading exponent {g} not in (0, 1]")));
            }
        }
        let p = &self.penalties;
        for (name, v) in [("c_stab", p.c_stab), ("c_star", p.c_star)] {
            if let Some(v) = v {
                if !(v > 0.0 && v.is_finite()) {
                    return Err(HarnessError::Config(format!("{name} must be positive, got {v}")));
                }
            }
        }
        self.solver
            .validate()
            .map_err(|e| HarnessError::Config(e.to_string()))
    }

    pub fn problem(&self) -> Result<ProblemSpec, HarnessError> {
        match &self.problem_file {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
                Ok(ProblemConfig::from_toml(&text)?.into_spec()?)
            }
            None => Ok(experiment_catalog(self.experiment)?),
        }
    }

    pub fn penalty(&self) -> PenaltyConfig {
        let d = PenaltyConfig::default();
        let o = &self.penalties;
        PenaltyConfig {
            c_stab: o.c_stab.unwrap_or(d.c_stab),
            sigma_rule: o.sigma_rule.unwrap_or(d.sigma_rule),
            c_star: o.c_star.unwrap_or(d.c_star),
            mu_scale: d.mu_scale,
        }
    }

    pub(crate) fn ladder(&self) -> Ladder {
        match self.grading {
            None => Ladder::Uniform,
            Some(g) => Ladder::Graded(Some(g)),
        }
    }

    /// Level indices of the study.
    pub fn level_indices(&self) -> std::ops::Range<usize> {
        self.start_level..self.start_level + self.levels
    }

    /// Stem shared by the files a study writes.
    pub fn file_stem(&self) -> String {
        let name = match &self.problem_file {
            Some(p) => p
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "custom".into()),
            None => format!("exp{}", self.experiment),
        };
        match self.grading {
            Some(g) => format!("{name}_p{}_graded{g}", self.degree),
            None => format!("{name}_p{}", self.degree),
        }
    }
}

pub(crate) fn ladder_mesh(ladder: Ladder, level: usize) -> Result<CurvedMesh, HarnessError> {
    let mesh = match ladder {
        Ladder::Uniform => disk_mesh_with_rings(uniform_rings(level), Grading::None)?,
        Ladder::Graded(g) => disk_mesh_with_rings(
            graded_rings(level),
            g.map(Grading::TowardOrigin).unwrap_or(Grading::None),
        )?,
    };
    Ok(mesh)
}
