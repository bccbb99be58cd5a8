use super::{contract, Mat2, ProblemError};

/// Cap applied to epsilon where a value strictly below 1 is needed.
pub const EPSILON_CAP: f64 = 1.0 - 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CordesReport {
    /// min over samples of (tr A)^2 / |A|^2 - 1
    pub raw: f64,
    /// raw clamped into (0, 1)
    pub clamped: f64,
}

fn frob2(a: &Mat2) -> f64 {
    a.iter().flatten().map(|v| v * v).sum()
}

/// Largest epsilon for which the Cordes condition holds on the samples.
pub fn cordes_epsilon(samples: &[Mat2]) -> Result<CordesReport, ProblemError> {
    let mut raw = f64::INFINITY;
    let mut worst = 0;
    for (i, a) in samples.iter().enumerate() {
        let tr = a[0][0] + a[1][1];
        let n2 = frob2(a);
        if n2 == 0.0 {
            return Err(ProblemError::ZeroMatrix);
        }
        let e = tr * tr / n2 - 1.0;
        if e < raw {
            raw = e;
            worst = i;
        }
    }
    if raw <= 0.0 {
        return Err(ProblemError::CordesViolation {
            index: worst,
            point: [f64::NAN; 2],
            value: raw,
        });
    }
    Ok(CordesReport {
        raw,
        clamped: raw.min(EPSILON_CAP),
    })
}

/// gamma = tr A / |A|^2.
pub fn gamma(a: &Mat2) -> Result<f64, ProblemError> {
    let n2 = frob2(a);
    if n2 == 0.0 {
        return Err(ProblemError::ZeroMatrix);
    }
    Ok((a[0][0] + a[1][1]) / n2)
}

/// max over samples of |gamma A:H - tr H| / |H|, skipping |H| < 1e-14.
pub fn cordes_pointwise_check(hessians: &[[f64; 3]], coefficients: &[Mat2]) -> Result<f64, ProblemError> {
    let mut worst: f64 = 0.0;
    for (h, a) in hessians.iter().zip(coefficients) {
        let norm = (h[0] * h[0] + 2.0 * h[1] * h[1] + h[2] * h[2]).sqrt();
        if norm < 1e-14 {
            continue;
        }
        let g = gamma(a)?;
        worst = worst.max((g * contract(a, h) - (h[0] + h[2])).abs() / norm);
    }
    Ok(worst)
}
