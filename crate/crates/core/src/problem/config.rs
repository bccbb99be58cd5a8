//! TOML description of custom problems on the unit disk.
//!
//! ```toml
//! name = "custom"
//!
//! [coefficient]
//! kind = "constant"            # identity | constant | sign_coupled
//! matrix = [[2.0, 0.5], [0.5, 1.0]]
//!
//! [beta]
//! mode = "rotate_fixed"        # normal | rotate_fixed | rotate_field
//! angle = 0.5
//!
//! [source]
//! mode = "manufactured"        # manufactured | explicit
//! solution = "quadratic"       # experiment1 | experiment2 | experiment3 | quadratic
//! scale = 1.0
//! ```
//!
//! An explicit source lists monomial terms `terms = [[a, b, c], ...]` meaning c x1^a x2^b.

use std::sync::Arc;

use serde::Deserialize;

use crate::geometry::UnitDisk;

use super::{
    catalog, BetaMode, CoefficientField, ExactSolution, ObliqueField, ProblemError, ProblemSpec,
    RadialProfile, Source,
};

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    #[serde(default = "default_name")]
    pub name: String,
    pub coefficient: CoefficientConfig,
    pub beta: BetaConfig,
    pub source: SourceConfig,
}

fn default_name() -> String {
    "custom".into()
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CoefficientConfig {
    Identity,
    Constant { matrix: [[f64; 2]; 2] },
    SignCoupled { diagonal: f64, off_diagonal: f64 },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum BetaConfig {
    Normal,
    RotateFixed { angle: f64 },
    RotateField {
        #[serde(default)]
        offset: f64,
    },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum SourceConfig {
    Manufactured {
        solution: String,
        #[serde(default = "one")]
        scale: f64,
    },
    Explicit { terms: Vec<(u32, u32, f64)> },
}

fn one() -> f64 {
    1.0
}

impl ProblemConfig {
    pub fn from_toml(text: &str) -> Result<Self, ProblemError> {
        toml::from_str(text).map_err(|e| ProblemError::Config(e.to_string()))
    }

    pub fn into_spec(self) -> Result<ProblemSpec, ProblemError> {
        let coefficient = match self.coefficient {
            CoefficientConfig::Identity => CoefficientField::Identity,
            CoefficientConfig::Constant { matrix } => {
                if matrix[0][1] != matrix[1][0] {
                    return Err(ProblemError::Config("coefficient matrix must be symmetric".into()));
                }
                CoefficientField::Constant(matrix)
            }
            CoefficientConfig::SignCoupled {
                diagonal,
                off_diagonal,
            } => CoefficientField::SignCoupled {
                diagonal,
                off_diagonal,
            },
        };
        let mode = match self.beta {
            BetaConfig::Normal => BetaMode::Normal,
            BetaConfig::RotateFixed { angle } => BetaMode::RotateFixed(angle),
            BetaConfig::RotateField { offset } => BetaMode::RotateField { offset },
        };
        let (source, exact, conformal) = match self.source {
            SourceConfig::Explicit { terms } => (Source::Polynomial(terms), None, false),
            SourceConfig::Manufactured { solution, scale } => {
                let profile = match solution.as_str() {
                    "experiment1" => RadialProfile::Sextic,
                    "experiment2" => RadialProfile::Cosine,
                    "experiment3" => RadialProfile::Singular,
                    "quadratic" => RadialProfile::Quadratic(scale),
                    other => {
                        return Err(ProblemError::Config(format!("unknown solution '{other}'")))
                    }
                };
                let exact = if let RadialProfile::Quadratic(s) = profile {
                    catalog::quadratic_problem(coefficient.clone(), mode, s)?.exact
                } else {
                    Some(ExactSolution::new(profile, 0.0))
                };
                (Source::Manufactured, exact, profile == RadialProfile::Singular)
            }
        };
        let spec = ProblemSpec {
            name: self.name,
            coefficient,
            beta: ObliqueField::new(mode),
            source,
            exact,
            chart: Arc::new(UnitDisk),
            conformal_regularity: conformal,
        };
        spec.cordes()?;
        spec.check_oblique()?;
        Ok(spec)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_constant_quadratic() {
        let text = r#"
            name = "c"
            [coefficient]
            kind = "constant"
            matrix = [[2.0, 0.5], [0.5, 1.0]]
            [beta]
            mode = "rotate_fixed"
            angle = 0.5
            [source]
            mode = "manufactured"
            solution = "quadratic"
            scale = 2.0
        "#;
        let spec = ProblemConfig::from_toml(text).unwrap().into_spec().unwrap();
        let ex = spec.exact.unwrap();
        assert!((ex.c - 4.0 * 0.5f64.cos()).abs() < 1e-15);
        assert!((spec.f([0.1, 0.2]) - 2.0 * (2.0 * 2.0 + 2.0 * 1.0)).abs() < 1e-12);
    }

    #[test]
    fn parse_explicit_source() {
        let text = r#"
            [coefficient]
            kind = "identity"
            [beta]
            mode = "normal"
            [source]
            mode = "explicit"
            terms = [[2, 0, 1.0], [0, 0, -0.5]]
        "#;
        let spec = ProblemConfig::from_toml(text).unwrap().into_spec().unwrap();
        assert!(spec.exact.is_none());
        assert!((spec.f([0.5, 0.3]) + 0.25).abs() < 1e-15);
    }

    #[test]
    fn non_cordes_coefficient_is_rejected() {
        let text = r#"
            [coefficient]
            kind = "constant"
            matrix = [[1.0, 0.0], [0.0, 0.0]]
            [beta]
            mode = "normal"
            [source]
            mode = "explicit"
            terms = []
        "#;
        let r = ProblemConfig::from_toml(text).unwrap().into_spec();
        assert!(matches!(r, Err(ProblemError::CordesViolation { .. })));
    }
}
