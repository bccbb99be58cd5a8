use super::basis::Jet;

/// First and second derivatives of a map F: reference triangle -> R^2 at one point.
#[derive(Debug, Clone, Copy, Default)]
pub struct MapJet {
    pub x: [f64; 2],
    /// jac[i][j] = dF_i / dxhat_j
    pub jac: [[f64; 2]; 2],
    /// hess[i] = second derivatives (xx, xy, yy) of F_i
    pub hess: [[f64; 3]; 2],
}

impl MapJet {
    pub fn det(&self) -> f64 {
        self.jac[0][0] * self.jac[1][1] - self.jac[0][1] * self.jac[1][0]
    }

    pub fn is_affine(&self) -> bool {
        self.hess.iter().flatten().all(|v| *v == 0.0)
    }
}

/// Pulls reference derivatives back to physical ones for a fixed point of the map.
#[derive(Debug, Clone, Copy)]
pub struct Pushforward {
    // jinv[i][j] = (J^{-1})_{ij}
    jinv: [[f64; 2]; 2],
    hess: [[f64; 3]; 2],
    affine: bool,
    pub det: f64,
}

impl Pushforward {
    pub fn new(m: &MapJet) -> Self {
        let det = m.det();
        let j = m.jac;
        let jinv = [[j[1][1] / det, -j[0][1] / det], [-j[1][0] / det, j[0][0] / det]];
        Self {
            jinv,
            hess: m.hess,
            affine: m.is_affine(),
            det,
        }
    }

    /// Physical gradient and Hessian of v = phi o F^{-1} from the reference jet of phi.
    pub fn apply(&self, r: &Jet) -> Jet {
        let ji = &self.jinv;
        // grad v = J^{-T} grad phi
        let g = [
            ji[0][0] * r.grad[0] + ji[1][0] * r.grad[1],
            ji[0][1] * r.grad[0] + ji[1][1] * r.grad[1],
        ];
        let mut h = r.hess;
        if !self.affine {
            for i in 0..2 {
                for k in 0..3 {
                    h[k] -= g[i] * self.hess[i][k];
                }
            }
        }
        // J^{-T} H J^{-1}
        let hm = [[h[0], h[1]], [h[1], h[2]]];
        let mut t = [[0.0; 2]; 2];
        for a in 0..2 {
            for b in 0..2 {
                t[a][b] = hm[a][0] * ji[0][b] + hm[a][1] * ji[1][b];
            }
        }
        let mut out = [[0.0; 2]; 2];
        for a in 0..2 {
            for b in 0..2 {
                out[a][b] = ji[0][a] * t[0][b] + ji[1][a] * t[1][b];
            }
        }
        Jet {
            value: r.value,
            grad: g,
            hess: [out[0][0], 0.5 * (out[0][1] + out[1][0]), out[1][1]],
        }
    }
}
