//! Coefficients, oblique fields, manufactured solutions and the Cordes condition.

pub mod catalog;
pub mod config;
pub mod cordes;
pub mod exact;

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::geometry::{DomainChart, UnitDisk};

pub use catalog::{experiment_catalog, quadratic_problem};
pub use config::ProblemConfig;
pub use cordes::{cordes_epsilon, cordes_pointwise_check, gamma, CordesReport, EPSILON_CAP};
pub use exact::{ExactSolution, RadialProfile};

pub type Mat2 = [[f64; 2]; 2];

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum ProblemError {
    #[error("Cordes condition fails at sample {index} (x = {point:?}): (tr A)^2 / |A|^2 - 1 = {value}")]
    CordesViolation {
        index: usize,
        point: [f64; 2],
        value: f64,
    },
    #[error("gamma undefined for the zero matrix")]
    ZeroMatrix,
    #[error("unknown experiment id {0}")]
    UnknownExperiment(usize),
    #[error("oblique field is not strictly oblique at {point:?}: d_T Theta + H = {value}")]
    NotStrictlyOblique { point: [f64; 2], value: f64 },
    #[error("invalid problem configuration: {0}")]
    Config(String),
}

/// sgn with sgn(0) := 1.
pub fn sgn(t: f64) -> f64 {
    if t >= 0.0 {
        1.0
    } else {
        -1.0
    }
}

/// The coefficient matrix A(x).
#[derive(Debug, Clone, PartialEq)]
pub enum CoefficientField {
    Identity,
    Constant(Mat2),
    /// [[d, o s], [o s, d]] with s = sgn(x1) sgn(x2).
    SignCoupled { diagonal: f64, off_diagonal: f64 },
}

impl CoefficientField {
    pub fn eval(&self, x: [f64; 2]) -> Mat2 {
        match self {
            CoefficientField::Identity => [[1.0, 0.0], [0.0, 1.0]],
            CoefficientField::Constant(a) => *a,
            CoefficientField::SignCoupled {
                diagonal,
                off_diagonal,
            } => {
                let o = off_diagonal * sgn(x[0]) * sgn(x[1]);
                [[*diagonal, o], [o, *diagonal]]
            }
        }
    }

    /// Sampled lower and upper ellipticity constants over `points`.
    pub fn ellipticity(&self, points: &[[f64; 2]]) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi: f64 = 0.0;
        for x in points {
            let a = self.eval(*x);
            let m = 0.5 * (a[0][0] + a[1][1]);
            let d = (0.25 * (a[0][0] - a[1][1]).powi(2) + a[0][1] * a[1][0]).sqrt();
            lo = lo.min(m - d);
            hi = hi.max(m + d);
        }
        (lo, hi)
    }
}

/// A : H for symmetric H stored as (xx, xy, yy).
pub fn contract(a: &Mat2, h: &[f64; 3]) -> f64 {
    a[0][0] * h[0] + (a[0][1] + a[1][0]) * h[1] + a[1][1] * h[2]
}

/// How beta is obtained from the outward normal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BetaMode {
    Normal,
    /// Rotation of n by a fixed angle (counterclockwise).
    RotateFixed(f64),
    /// Rotation of n by offset + polar angle of the boundary point.
    RotateField { offset: f64 },
}

/// Unit oblique field beta = R(Theta) n on the boundary.
#[derive(Debug, Clone)]
pub struct ObliqueField {
    pub mode: BetaMode,
    pub chart: Arc<dyn DomainChart>,
}

pub fn rotate(v: [f64; 2], angle: f64) -> [f64; 2] {
    let (s, c) = angle.sin_cos();
    [c * v[0] - s * v[1], s * v[0] + c * v[1]]
}

pub fn perp(v: [f64; 2]) -> [f64; 2] {
    [-v[1], v[0]]
}

impl ObliqueField {
    pub fn new(mode: BetaMode) -> Self {
        Self {
            mode,
            chart: Arc::new(UnitDisk),
        }
    }

    /// Oriented angle Theta from n to beta at boundary point y.
    pub fn theta(&self, y: [f64; 2]) -> f64 {
        match self.mode {
            BetaMode::Normal => 0.0,
            BetaMode::RotateFixed(a) => a,
            BetaMode::RotateField { offset } => offset + y[1].atan2(y[0]),
        }
    }

    /// Derivative of Theta along the counterclockwise unit tangent `t` at boundary point y.
    pub fn d_theta(&self, y: [f64; 2], t: [f64; 2]) -> f64 {
        match self.mode {
            BetaMode::Normal | BetaMode::RotateFixed(_) => 0.0,
            BetaMode::RotateField { .. } => (y[0] * t[1] - y[1] * t[0]) / (y[0] * y[0] + y[1] * y[1]),
        }
    }

    pub fn beta(&self, y: [f64; 2]) -> [f64; 2] {
        rotate(self.chart.boundary_normal(y), self.theta(y))
    }

    pub fn beta_perp(&self, y: [f64; 2]) -> [f64; 2] {
        perp(self.beta(y))
    }

    /// d_T Theta + H, the turning rate of beta along the boundary.
    pub fn turning_rate(&self, y: [f64; 2], t: [f64; 2]) -> f64 {
        self.d_theta(y, t) + self.chart.curvature(y)
    }
}

/// Source term f.
#[derive(Debug, Clone, PartialEq)]
pub enum Source {
    /// f = A : D^2 u for the exact solution.
    Manufactured,
    /// f = sum c x1^a x2^b over (a, b, c).
    Polynomial(Vec<(u32, u32, f64)>),
}

/// A complete problem: A, f, beta, the domain and optionally the exact solution.
#[derive(Debug, Clone)]
pub struct ProblemSpec {
    pub name: String,
    pub coefficient: CoefficientField,
    pub beta: ObliqueField,
    pub source: Source,
    pub exact: Option<ExactSolution>,
    pub chart: Arc<dyn DomainChart>,
    /// The exact solution only has H^{5/2 - delta} regularity at the origin.
    pub conformal_regularity: bool,
}

impl ProblemSpec {
    pub fn f(&self, x: [f64; 2]) -> f64 {
        match &self.source {
            Source::Manufactured => {
                let a = self.coefficient.eval(x);
                let u = self
                    .exact
                    .as_ref()
                    .expect("manufactured source needs an exact solution")
                    .jet(x);
                contract(&a, &u.hess)
            }
            Source::Polynomial(terms) => terms
                .iter()
                .map(|(a, b, c)| c * x[0].powi(*a as i32) * x[1].powi(*b as i32))
                .sum(),
        }
    }

    pub fn gamma_at(&self, x: [f64; 2]) -> f64 {
        let a = self.coefficient.eval(x);
        gamma(&a).expect("elliptic coefficient")
    }

    /// Cordes constant over a deterministic sample of points in the unit disk.
    pub fn cordes(&self) -> Result<CordesReport, ProblemError> {
        let pts = disk_sample(10_000, 17);
        let samples: Vec<Mat2> = pts.iter().map(|x| self.coefficient.eval(*x)).collect();
        cordes_epsilon(&samples).map_err(|e| match e {
            ProblemError::CordesViolation { index, value, .. } => ProblemError::CordesViolation {
                index,
                point: pts[index],
                value,
            },
            other => other,
        })
    }

    /// Checks d_T Theta + H > 0 on a boundary sample.
    pub fn check_oblique(&self) -> Result<(), ProblemError> {
        for i in 0..720 {
            let a = 2.0 * std::f64::consts::PI * (i as f64 + 0.5) / 720.0;
            let y = [a.cos(), a.sin()];
            let t = perp(self.chart.boundary_normal(y));
            let v = self.beta.turning_rate(y, t);
            if v <= 0.0 {
                return Err(ProblemError::NotStrictlyOblique { point: y, value: v });
            }
        }
        Ok(())
    }

    /// Largest relative PDE residual |A:D^2u - f| / max(|f|, 1) and boundary residual
    /// |beta . grad u - c| over random samples.
    pub fn check_exact(&self, n: usize, seed: u64) -> Option<(f64, f64)> {
        let ex = self.exact.as_ref()?;
        let mut pde: f64 = 0.0;
        for x in disk_sample(n, seed) {
            if x[0].abs() < 1e-8 || x[1].abs() < 1e-8 || x[0].hypot(x[1]) < 1e-6 {
                continue;
            }
            let u = ex.jet(x);
            let a = self.coefficient.eval(x);
            let f = self.f(x);
            pde = pde.max((contract(&a, &u.hess) - f).abs() / f.abs().max(1.0));
        }
        let mut bc: f64 = 0.0;
        for i in 0..n {
            let a = 2.0 * std::f64::consts::PI * (i as f64 + 0.25) / n as f64;
            let y = [a.cos(), a.sin()];
            let g = ex.jet(y).grad;
            let b = self.beta.beta(y);
            bc = bc.max((b[0] * g[0] + b[1] * g[1] - ex.c).abs());
        }
        Some((pde, bc))
    }
}

/// Uniform random points in the unit disk from a fixed seed.
pub fn disk_sample(n: usize, seed: u64) -> Vec<[f64; 2]> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let r = rng.random::<f64>().sqrt();
            let a = rng.random::<f64>() * 2.0 * std::f64::consts::PI;
            [r * a.cos(), r * a.sin()]
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn sign_convention_at_zero() {
        assert_eq!(sgn(0.0), 1.0);
        let a = CoefficientField::SignCoupled {
            diagonal: 2.0,
            off_diagonal: 1.0,
        };
        assert_eq!(a.eval([0.0, -0.5])[0][1], -1.0);
        assert_eq!(a.eval([0.0, 0.0])[0][1], 1.0);
    }

    #[test]
    fn ellipticity_of_sign_coupled() {
        let a = CoefficientField::SignCoupled {
            diagonal: 2.0,
            off_diagonal: 1.0,
        };
        let (lo, hi) = a.ellipticity(&disk_sample(10_000, 3));
        assert!((lo - 1.0).abs() < 1e-12 && (hi - 3.0).abs() < 1e-12);
    }

    #[test]
    fn rotating_field_turns_once() {
        let b = ObliqueField::new(BetaMode::RotateField {
            offset: std::f64::consts::FRAC_PI_4,
        });
        for a in [0.1f64, 1.0, 2.5, -2.0] {
            let y = [a.cos(), a.sin()];
            assert!((b.d_theta(y, perp(y)) - 1.0).abs() < 1e-14);
            assert!((b.turning_rate(y, perp(y)) - 2.0).abs() < 1e-14);
        }
    }

    proptest! {
        #[test]
        fn beta_is_unit(a in -3.2f64..3.2, off in -3.0f64..3.0) {
            let y = [a.cos(), a.sin()];
            for m in [BetaMode::Normal, BetaMode::RotateFixed(off), BetaMode::RotateField { offset: off }] {
                let b = ObliqueField::new(m).beta(y);
                prop_assert!((b[0].hypot(b[1]) - 1.0).abs() < 1e-12);
            }
        }

        #[test]
        fn coefficient_is_symmetric(x in -1.0f64..1.0, y in -1.0f64..1.0) {
            let a = CoefficientField::SignCoupled { diagonal: 2.0, off_diagonal: 1.0 }.eval([x, y]);
            prop_assert_eq!(a[0][1], a[1][0]);
        }
    }
}
