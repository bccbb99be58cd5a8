//! Bilinear forms of the method, load functional, norms and integral identities.

pub mod block;
pub mod errors;
pub mod forms;
pub mod identity;

pub use block::BlockMatrix;
pub use errors::{error_norms, ErrorRecord};
pub use forms::{
    add_mean_border, apply_form, assemble_ah, assemble_bhstar, assemble_bhtheta, assemble_form, assemble_jh,
    assemble_load, assemble_system, consistency_residual, evaluate_form, evaluate_norm, AssembledSystem, Field,
};
pub use identity::{oblique_turning_check, verify_element_identity, IdentityCheck};

use crate::geometry::GeometryError;
use crate::problem::ProblemError;
use crate::space::SpaceError;

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum AssemblyError {
    #[error("theta must lie in (0, 1], got {0}")]
    ThetaOutOfRange(f64),
    #[error("problem has no exact solution")]
    MissingExactSolution,
    #[error(transparent)]
    Problem(#[from] ProblemError),
    #[error(transparent)]
    Space(#[from] SpaceError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// How sigma_F scales with the face size.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SigmaRule {
    /// 2 c_stab p^2 / h^2
    Remark,
    /// 2 c_stab p^2 / h
    Theorem,
}

/// Penalty parameters of the jump form and the constant c_* of the norm.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct PenaltyConfig {
    pub c_stab: f64,
    pub sigma_rule: SigmaRule,
    pub c_star: f64,
    /// Extra factor on mu_F; 1 for the method, smaller values only to probe coercivity.
    pub mu_scale: f64,
}

impl Default for PenaltyConfig {
    fn default() -> Self {
        Self {
            c_stab: 2.5,
            sigma_rule: SigmaRule::Remark,
            c_star: 1.0,
            mu_scale: 1.0,
        }
    }
}

impl PenaltyConfig {
    pub fn mu(&self, h: f64, p: usize) -> f64 {
        let q = p as f64 - 1.0;
        self.mu_scale * 2.0 * self.c_stab * q * q / h
    }

    pub fn eta(&self, h: f64, p: usize) -> f64 {
        let q = p as f64 - 1.0;
        15.0 * q.powi(4) / (16.0 * h * h * h)
    }

    pub fn sigma(&self, h: f64, p: usize) -> f64 {
        let p2 = (p * p) as f64;
        match self.sigma_rule {
            SigmaRule::Remark => 2.0 * self.c_stab * p2 / (h * h),
            SigmaRule::Theorem => 2.0 * self.c_stab * p2 / h,
        }
    }

    pub fn ell(&self, h: f64) -> f64 {
        self.c_stab / (h * h * h)
    }
}

/// Deliberate corruptions used to check that the verification suite notices them.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mutation {
    None,
    /// Uses d_T Theta - H instead of d_T Theta + H in the boundary curvature term.
    FlipCurvatureSign,
}

/// Coefficients of the individual terms; every form of the method is a combination.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FormWeights {
    /// sum_K <D^2 u, D^2 v>
    pub hess: f64,
    /// sum_K <Lap u, Lap v>
    pub lap: f64,
    /// sum_K <gamma A : D^2 u, Lap v>
    pub nondiv: f64,
    /// interior-face consistency pairs
    pub consistency: f64,
    /// boundary <(d_T Theta + H) grad u, grad v>
    pub curvature: f64,
    /// boundary oblique pairs <d_T(beta_perp . grad u), beta . grad v - mu> + sym
    pub oblique: f64,
    /// J_h
    pub jump: f64,
    pub mutation: Mutation,
}

impl FormWeights {
    pub const ZERO: Self = Self {
        hess: 0.0,
        lap: 0.0,
        nondiv: 0.0,
        consistency: 0.0,
        curvature: 0.0,
        oblique: 0.0,
        jump: 0.0,
        mutation: Mutation::None,
    };

    pub fn jh() -> Self {
        Self {
            jump: 1.0,
            ..Self::ZERO
        }
    }

    pub fn bhstar() -> Self {
        Self {
            hess: 1.0,
            consistency: 1.0,
            curvature: 1.0,
            oblique: 1.0,
            ..Self::ZERO
        }
    }

    /// B_{h,theta} = theta B_{h,*} + (1 - theta) sum <Lap u, Lap v> + J_h
    pub fn bhtheta(theta: f64) -> Self {
        Self {
            hess: theta,
            lap: 1.0 - theta,
            consistency: theta,
            curvature: theta,
            oblique: theta,
            jump: 1.0,
            ..Self::ZERO
        }
    }

    /// A_h = sum <gamma A:D^2 u - Lap u, Lap v> + B_{h,1/2}
    pub fn ah() -> Self {
        Self {
            nondiv: 1.0,
            lap: -0.5,
            ..Self::bhtheta(0.5)
        }
    }

    /// Quadratic form of the squared norm ||.||_{h,theta}.
    pub fn norm(theta: f64, c_star: f64) -> Self {
        Self {
            hess: theta,
            lap: 1.0 - theta,
            curvature: 0.5 * theta,
            jump: c_star,
            ..Self::ZERO
        }
    }

    pub fn with_mutation(mut self, m: Mutation) -> Self {
        self.mutation = m;
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_penalties() {
        let p = PenaltyConfig::default();
        assert!((p.mu(0.5, 3) - 2.0 * 2.5 * 4.0 / 0.5).abs() < 1e-12);
        assert!((p.eta(0.5, 2) - 7.5).abs() < 1e-12);
        assert!((p.sigma(0.5, 2) - 2.0 * 2.5 * 4.0 / 0.25).abs() < 1e-12);
        assert!((p.ell(0.5) - 20.0).abs() < 1e-12);
        let t = PenaltyConfig {
            sigma_rule: SigmaRule::Theorem,
            ..p
        };
        assert!((t.sigma(0.5, 2) - 40.0).abs() < 1e-12);
        for h in [1.0, 0.1, 0.01] {
            for deg in 2..6 {
                assert!(p.mu(h, deg) > 0.0 && p.eta(h, deg) > 0.0 && p.sigma(h, deg) > 0.0 && p.ell(h) > 0.0);
            }
        }
    }

    #[test]
    fn ah_weights() {
        let w = FormWeights::ah();
        assert_eq!((w.hess, w.lap, w.nondiv, w.jump), (0.5, -0.5, 1.0, 1.0));
    }
}
