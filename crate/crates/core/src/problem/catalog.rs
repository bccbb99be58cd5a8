use std::f64::consts::FRAC_PI_4;
use std::sync::Arc;

use crate::geometry::UnitDisk;

use super::{
    BetaMode, CoefficientField, ExactSolution, ObliqueField, ProblemError, ProblemSpec,
    RadialProfile, Source,
};

const SIGN_COUPLED: CoefficientField = CoefficientField::SignCoupled {
    diagonal: 2.0,
    off_diagonal: 1.0,
};

/// The three benchmark problems on the unit disk.
///
/// 1. Laplacian with Neumann data, u = r^6/6 - r^2/2 + 5/24.
/// 2. Discontinuous A, beta rotated by pi/4 + polar angle, u = cos(pi r^2)/4.
/// 3. Same A, beta rotated by pi/4, u = r^1.5 - 0.75 r^2 - 11/56 (not in H^3).
pub fn experiment_catalog(id: usize) -> Result<ProblemSpec, ProblemError> {
    let (name, coefficient, mode, profile) = match id {
        1 => (
            "experiment-1",
            CoefficientField::Identity,
            BetaMode::Normal,
            RadialProfile::Sextic,
        ),
        2 => (
            "experiment-2",
            SIGN_COUPLED,
            BetaMode::RotateField { offset: FRAC_PI_4 },
            RadialProfile::Cosine,
        ),
        3 => (
            "experiment-3",
            SIGN_COUPLED,
            BetaMode::RotateFixed(FRAC_PI_4),
            RadialProfile::Singular,
        ),
        _ => return Err(ProblemError::UnknownExperiment(id)),
    };
    Ok(ProblemSpec {
        name: name.to_string(),
        coefficient,
        beta: ObliqueField::new(mode),
        source: Source::Manufactured,
        exact: Some(ExactSolution::new(profile, 0.0)),
        chart: Arc::new(UnitDisk),
        conformal_regularity: id == 3,
    })
}

/// Problem with the zero-mean quadratic s (|x|^2 - 1/2) and the given beta mode.
///
/// Unlike the catalog solutions its gradient does not vanish on the boundary, which makes
/// the boundary terms of the forms visible in consistency checks.
pub fn quadratic_problem(coefficient: CoefficientField, mode: BetaMode, s: f64) -> Result<ProblemSpec, ProblemError> {
    let c = match mode {
        BetaMode::Normal => 2.0 * s,
        BetaMode::RotateFixed(a) => 2.0 * s * a.cos(),
        BetaMode::RotateField { .. } => {
            return Err(ProblemError::Config(
                "beta . grad u is not constant for a rotating field".into(),
            ))
        }
    };
    Ok(ProblemSpec {
        name: "quadratic".into(),
        coefficient,
        beta: ObliqueField::new(mode),
        source: Source::Manufactured,
        exact: Some(ExactSolution::new(RadialProfile::Quadratic(s), c)),
        chart: Arc::new(UnitDisk),
        conformal_regularity: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::DomainChart;
    use crate::problem::perp;

    #[test]
    fn catalog_constants() {
        let e1 = experiment_catalog(1).unwrap();
        assert!((e1.cordes().unwrap().raw - 1.0).abs() < 1e-15);
        assert_eq!(e1.gamma_at([0.3, 0.1]), 1.0);
        let e2 = experiment_catalog(2).unwrap();
        assert!((e2.cordes().unwrap().raw - 0.6).abs() < 1e-15);
        assert!((e2.gamma_at([-0.3, 0.1]) - 0.4).abs() < 1e-15);
        assert!(experiment_catalog(4).is_err());
    }

    #[test]
    fn exact_solutions_satisfy_the_problem() {
        for id in 1..=3 {
            let p = experiment_catalog(id).unwrap();
            let (pde, bc) = p.check_exact(1000, 11).unwrap();
            assert!(pde < 1e-8, "{id}: {pde}");
            assert!(bc < 1e-8, "{id}: {bc}");
            p.check_oblique().unwrap();
        }
        for mode in [BetaMode::Normal, BetaMode::RotateFixed(FRAC_PI_4)] {
            let p = quadratic_problem(CoefficientField::Identity, mode, 0.5).unwrap();
            let (_, bc) = p.check_exact(500, 1).unwrap();
            assert!(bc < 1e-12);
        }
    }

    #[test]
    fn turning_rate_of_experiment_two() {
        let p = experiment_catalog(2).unwrap();
        let y = [0.6, 0.8];
        let t = perp(UnitDisk.boundary_normal(y));
        assert!((p.beta.turning_rate(y, t) - 2.0).abs() < 1e-14);
    }
}
