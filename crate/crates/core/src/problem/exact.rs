use crate::fem::Jet;

/// Radial profiles u(|x|) used as exact solutions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RadialProfile {
    /// r^6/6 - r^2/2 + 5/24
    Sextic,
    /// cos(pi r^2) / 4
    Cosine,
    /// r^1.5 - 0.75 r^2 - 11/56
    Singular,
    /// s (r^2 - 1/2)
    Quadratic(f64),
}

/// Exact solution u together with the exact constant c = beta . grad u on the boundary.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExactSolution {
    pub profile: RadialProfile,
    pub c: f64,
}

impl ExactSolution {
    pub fn new(profile: RadialProfile, c: f64) -> Self {
        Self { profile, c }
    }

    /// u, grad u = a x and D^2 u = a I + b x x^T.
    pub fn jet(&self, x: [f64; 2]) -> Jet {
        let r2 = x[0] * x[0] + x[1] * x[1];
        let (u, a, b) = match self.profile {
            RadialProfile::Sextic => {
                let r4 = r2 * r2;
                (r4 * r2 / 6.0 - 0.5 * r2 + 5.0 / 24.0, r4 - 1.0, 4.0 * r2)
            }
            RadialProfile::Cosine => {
                let (s, c) = (std::f64::consts::PI * r2).sin_cos();
                let pi = std::f64::consts::PI;
                (0.25 * c, -0.5 * pi * s, -pi * pi * c)
            }
            RadialProfile::Singular => {
                let r = r2.sqrt();
                let rs = r.sqrt();
                (
                    r * rs - 0.75 * r2 - 11.0 / 56.0,
                    1.5 / rs - 1.5,
                    -0.75 / (rs * r2),
                )
            }
            RadialProfile::Quadratic(s) => (s * (r2 - 0.5), 2.0 * s, 0.0),
        };
        Jet {
            value: u,
            grad: [a * x[0], a * x[1]],
            hess: [a + b * x[0] * x[0], b * x[0] * x[1], a + b * x[1] * x[1]],
        }
    }
}
