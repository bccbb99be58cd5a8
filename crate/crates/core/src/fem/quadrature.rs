use super::FemError;

/// Highest polynomial degree the volume and edge rules are built for.
pub const MAX_RULE_DEGREE: usize = 60;

/// Quadrature rule on the reference triangle with vertices (0,0), (1,0), (0,1).
#[derive(Debug, Clone)]
pub struct TriangleRule {
    pub points: Vec<[f64; 2]>,
    pub weights: Vec<f64>,
    pub degree: usize,
}

/// Quadrature rule on [0, 1].
#[derive(Debug, Clone)]
pub struct SegmentRule {
    pub points: Vec<f64>,
    pub weights: Vec<f64>,
    pub degree: usize,
}

impl TriangleRule {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

impl SegmentRule {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Gauss-Legendre nodes and weights on [-1, 1], computed by Newton iteration on P_n.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                let (_, d) = legendre_with_derivative(n, z);
                dp = d;
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

fn legendre_with_derivative(n: usize, z: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = z;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (z * p1 - p0) / (z * z - 1.0);
    (p1, d)
}

/// Gauss-Legendre rule on [0, 1] exact for polynomials of the given degree.
pub fn segment_rule(degree: usize) -> Result<SegmentRule, FemError> {
    if degree > MAX_RULE_DEGREE {
        return Err(FemError::UnsupportedQuadratureDegree(degree));
    }
    let n = (degree + 2) / 2;
    let n = n.max(1);
    let (x, w) = gauss_legendre(n);
    Ok(SegmentRule {
        points: x.iter().map(|t| 0.5 * (t + 1.0)).collect(),
        weights: w.iter().map(|w| 0.5 * w).collect(),
        degree,
    })
}

/// Collapsed (Duffy) tensor Gauss rule on the reference triangle exact for the given degree.
pub fn triangle_rule(degree: usize) -> Result<TriangleRule, FemError> {
    if degree > MAX_RULE_DEGREE {
        return Err(FemError::UnsupportedQuadratureDegree(degree));
    }
    // x = u (1 - v), y = v with Jacobian (1 - v): the v direction carries one extra degree.
    let nu = (degree + 2) / 2;
    let nv = (degree + 3) / 2;
    let (xu, wu) = gauss_legendre(nu.max(1));
    let (xv, wv) = gauss_legendre(nv.max(1));
    let mut points = Vec::with_capacity(nu * nv);
    let mut weights = Vec::with_capacity(nu * nv);
    for (v, wvj) in xv.iter().zip(&wv) {
        let v = 0.5 * (v + 1.0);
        for (u, wui) in xu.iter().zip(&wu) {
            let u = 0.5 * (u + 1.0);
            points.push([u * (1.0 - v), v]);
            weights.push(0.25 * wui * wvj * (1.0 - v));
        }
    }
    Ok(TriangleRule {
        points,
        weights,
        degree,
    })
}

/// Volume rule used for basis degree `p`: exact to degree 2p + 2.
pub fn volume_quadrature(p: usize) -> Result<TriangleRule, FemError> {
    triangle_rule(2 * p + 2)
}

/// Face rule used for basis degree `p`: exact to degree 2p + 3.
pub fn edge_quadrature(p: usize) -> Result<SegmentRule, FemError> {
    segment_rule(2 * p + 3)
}

#[cfg(test)]
mod tests {
    use super::*;

    // exact integral of x^a y^b over the reference triangle: a! b! / (a + b + 2)!
    fn monomial_integral(a: usize, b: usize) -> f64 {
        let mut r = 1.0;
        for k in 1..=b {
            r *= k as f64 / (a + k) as f64;
        }
        r / ((a + b + 1) as f64 * (a + b + 2) as f64)
    }

    #[test]
    fn legendre_nodes_are_symmetric_and_weights_sum_to_two() {
        for n in 1..30 {
            let (x, w) = gauss_legendre(n);
            let s: f64 = w.iter().sum();
            assert!((s - 2.0).abs() < 1e-13, "n={n} sum={s}");
            for i in 0..n {
                assert!((x[i] + x[n - 1 - i]).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn triangle_rule_integrates_monomials() {
        for deg in [0, 1, 2, 5, 8, 13, 20, 40] {
            let rule = triangle_rule(deg).unwrap();
            for a in 0..=deg {
                for b in 0..=(deg - a) {
                    let q: f64 = rule
                        .points
                        .iter()
                        .zip(&rule.weights)
                        .map(|(p, w)| w * p[0].powi(a as i32) * p[1].powi(b as i32))
                        .sum();
                    let exact = monomial_integral(a, b);
                    assert!(
                        (q - exact).abs() <= 1e-13 * exact.abs().max(1e-3),
                        "deg {deg} a {a} b {b}: {q} vs {exact}"
                    );
                }
            }
        }
    }

    #[test]
    fn segment_rule_integrates_monomials() {
        for deg in [0, 3, 11, 25] {
            let rule = segment_rule(deg).unwrap();
            for k in 0..=deg {
                let q: f64 = rule
                    .points
                    .iter()
                    .zip(&rule.weights)
                    .map(|(t, w)| w * t.powi(k as i32))
                    .sum();
                assert!((q - 1.0 / (k as f64 + 1.0)).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn degree_zero_rule_gives_area() {
        let rule = triangle_rule(0).unwrap();
        let s: f64 = rule.weights.iter().sum();
        assert!((s - 0.5).abs() < 1e-15);
    }

    #[test]
    fn too_high_degree_is_rejected() {
        assert!(matches!(
            triangle_rule(MAX_RULE_DEGREE + 1),
            Err(FemError::UnsupportedQuadratureDegree(_))
        ));
    }
}
