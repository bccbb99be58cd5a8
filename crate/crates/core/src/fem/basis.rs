use nalgebra::DMatrix;

use super::quadrature::triangle_rule;
use super::FemError;

/// Number of polynomials of total degree at most `p` in two variables.
pub fn basis_size(p: usize) -> usize {
    (p + 1) * (p + 2) / 2
}

/// Value, gradient and Hessian (xx, xy, yy) of one scalar function at one point.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Jet {
    pub value: f64,
    pub grad: [f64; 2],
    pub hess: [f64; 3],
}

/// L2-orthonormal hierarchical basis of P_p on the reference triangle.
///
/// Built by Gram-Schmidt (via Cholesky of the Gram matrix) of monomials centred at the
/// reference centroid, ordered by total degree, so the first `basis_size(q)` functions
/// span P_q for every q <= p.
#[derive(Debug, Clone)]
pub struct OrthonormalBasis {
    degree: usize,
    exponents: Vec<(usize, usize)>,
    // coeffs[i * n + j]: weight of monomial j in basis function i (lower triangular)
    coeffs: Vec<f64>,
}

const CENTROID: f64 = 1.0 / 3.0;

impl OrthonormalBasis {
    pub fn new(degree: usize) -> Result<Self, FemError> {
        let n = basis_size(degree);
        let mut exponents = Vec::with_capacity(n);
        for k in 0..=degree {
            for j in 0..=k {
                exponents.push((k - j, j));
            }
        }
        let rule = triangle_rule(2 * degree)?;
        let mut gram = DMatrix::<f64>::zeros(n, n);
        let mut m = vec![0.0; n];
        for (pt, w) in rule.points.iter().zip(&rule.weights) {
            for (j, &(a, b)) in exponents.iter().enumerate() {
                m[j] = (pt[0] - CENTROID).powi(a as i32) * (pt[1] - CENTROID).powi(b as i32);
            }
            for i in 0..n {
                for j in 0..=i {
                    gram[(i, j)] += w * m[i] * m[j];
                }
            }
        }
        for i in 0..n {
            for j in 0..i {
                gram[(j, i)] = gram[(i, j)];
            }
        }
        let chol = gram
            .cholesky()
            .ok_or(FemError::BasisConstruction(degree))?;
        let l = chol.l();
        let linv = l
            .solve_lower_triangular(&DMatrix::identity(n, n))
            .ok_or(FemError::BasisConstruction(degree))?;
        let mut coeffs = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..=i {
                coeffs[i * n + j] = linv[(i, j)];
            }
        }
        Ok(Self {
            degree,
            exponents,
            coeffs,
        })
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn len(&self) -> usize {
        self.exponents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.exponents.is_empty()
    }

    /// Evaluates all basis functions and their first and second derivatives at `x`.
    pub fn eval(&self, x: [f64; 2], out: &mut [Jet]) {
        let n = self.len();
        let dx = x[0] - CENTROID;
        let dy = x[1] - CENTROID;
        let p = self.degree;
        // powers and their derivatives; pw[k] = d^k, with guards for negative exponents
        let mut px = vec![1.0; p + 1];
        let mut py = vec![1.0; p + 1];
        for k in 1..=p {
            px[k] = px[k - 1] * dx;
            py[k] = py[k - 1] * dy;
        }
        let pow = |v: &[f64], k: isize| if k < 0 { 0.0 } else { v[k as usize] };
        let mut mono = vec![Jet::default(); n];
        for (j, &(a, b)) in self.exponents.iter().enumerate() {
            let (a, b) = (a as isize, b as isize);
            let af = a as f64;
            let bf = b as f64;
            mono[j] = Jet {
                value: pow(&px, a) * pow(&py, b),
                grad: [
                    af * pow(&px, a - 1) * pow(&py, b),
                    bf * pow(&px, a) * pow(&py, b - 1),
                ],
                hess: [
                    af * (af - 1.0) * pow(&px, a - 2) * pow(&py, b),
                    af * bf * pow(&px, a - 1) * pow(&py, b - 1),
                    bf * (bf - 1.0) * pow(&px, a) * pow(&py, b - 2),
                ],
            };
        }
        for i in 0..n {
            let mut acc = Jet::default();
            let row = &self.coeffs[i * n..i * n + i + 1];
            for (c, m) in row.iter().zip(&mono) {
                acc.value += c * m.value;
                acc.grad[0] += c * m.grad[0];
                acc.grad[1] += c * m.grad[1];
                acc.hess[0] += c * m.hess[0];
                acc.hess[1] += c * m.hess[1];
                acc.hess[2] += c * m.hess[2];
            }
            out[i] = acc;
        }
    }

    /// Tabulates the basis at a list of reference points (row-major: point, then function).
    pub fn tabulate(&self, points: &[[f64; 2]]) -> Vec<Jet> {
        let n = self.len();
        let mut out = vec![Jet::default(); n * points.len()];
        for (q, x) in points.iter().enumerate() {
            self.eval(*x, &mut out[q * n..(q + 1) * n]);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sizes() {
        assert_eq!(basis_size(0), 1);
        assert_eq!(basis_size(2), 6);
        assert_eq!(basis_size(4), 15);
    }

    #[test]
    fn constant_function_is_sqrt_two() {
        let b = OrthonormalBasis::new(3).unwrap();
        let mut out = vec![Jet::default(); b.len()];
        b.eval([0.2, 0.7], &mut out);
        assert!((out[0].value - 2f64.sqrt()).abs() < 1e-14);
        assert_eq!(out[0].grad, [0.0, 0.0]);
    }

    #[test]
    fn gram_matrix_is_identity() {
        for p in 0..=6 {
            let b = OrthonormalBasis::new(p).unwrap();
            let rule = triangle_rule(2 * p).unwrap();
            let tab = b.tabulate(&rule.points);
            let n = b.len();
            for i in 0..n {
                for j in 0..n {
                    let g: f64 = (0..rule.len())
                        .map(|q| rule.weights[q] * tab[q * n + i].value * tab[q * n + j].value)
                        .sum();
                    let e = if i == j { 1.0 } else { 0.0 };
                    // monomial evaluation loses digits at high degree
                    let tol = if p <= 4 { 1e-12 } else { 1e-9 };
                    assert!((g - e).abs() < tol, "p={p} ({i},{j}) {g}");
                }
            }
        }
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let b = OrthonormalBasis::new(4).unwrap();
        let n = b.len();
        let x = [0.23, 0.41];
        let h = 1e-5;
        let mut c = vec![Jet::default(); n];
        let mut xp = vec![Jet::default(); n];
        let mut xm = vec![Jet::default(); n];
        let mut yp = vec![Jet::default(); n];
        let mut ym = vec![Jet::default(); n];
        b.eval(x, &mut c);
        b.eval([x[0] + h, x[1]], &mut xp);
        b.eval([x[0] - h, x[1]], &mut xm);
        b.eval([x[0], x[1] + h], &mut yp);
        b.eval([x[0], x[1] - h], &mut ym);
        for i in 0..n {
            let gx = (xp[i].value - xm[i].value) / (2.0 * h);
            let gy = (yp[i].value - ym[i].value) / (2.0 * h);
            assert!((gx - c[i].grad[0]).abs() < 1e-6 * (1.0 + gx.abs()));
            assert!((gy - c[i].grad[1]).abs() < 1e-6 * (1.0 + gy.abs()));
            let hxx = (xp[i].grad[0] - xm[i].grad[0]) / (2.0 * h);
            let hxy = (yp[i].grad[0] - ym[i].grad[0]) / (2.0 * h);
            let hyy = (yp[i].grad[1] - ym[i].grad[1]) / (2.0 * h);
            assert!((hxx - c[i].hess[0]).abs() < 1e-5 * (1.0 + hxx.abs()));
            assert!((hxy - c[i].hess[1]).abs() < 1e-5 * (1.0 + hxy.abs()));
            assert!((hyy - c[i].hess[2]).abs() < 1e-5 * (1.0 + hyy.abs()));
        }
    }
}
