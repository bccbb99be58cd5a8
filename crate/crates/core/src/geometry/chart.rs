use super::GeometryError;

/// Local description of a smooth boundary: closest-point projection, normal and curvature.
pub trait DomainChart: std::fmt::Debug + Send + Sync {
    fn id(&self) -> usize;

    /// Closest point on the boundary for points in a tubular neighbourhood of it.
    fn project(&self, x: [f64; 2]) -> Result<[f64; 2], GeometryError>;

    /// Unit outward normal at a boundary point.
    fn boundary_normal(&self, y: [f64; 2]) -> [f64; 2];

    /// Mean curvature (divergence of the normal along the boundary) at a boundary point.
    fn curvature(&self, y: [f64; 2]) -> f64;
}

/// The unit disk, with chart psi(x) = x / |x|.
#[derive(Debug, Clone, Copy, Default)]
pub struct UnitDisk;

/// Points closer to the origin than this are outside the tubular neighbourhood.
const DISK_TUBE_INNER: f64 = 0.25;

impl DomainChart for UnitDisk {
    fn id(&self) -> usize {
        0
    }

    fn project(&self, x: [f64; 2]) -> Result<[f64; 2], GeometryError> {
        let r = x[0].hypot(x[1]);
        if r < DISK_TUBE_INNER || r > 2.0 - DISK_TUBE_INNER {
            return Err(GeometryError::OutsideChart(x));
        }
        Ok([x[0] / r, x[1] / r])
    }

    fn boundary_normal(&self, y: [f64; 2]) -> [f64; 2] {
        let r = y[0].hypot(y[1]);
        [y[0] / r, y[1] / r]
    }

    fn curvature(&self, _y: [f64; 2]) -> f64 {
        1.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn projection_is_idempotent_and_normal_unit(r in 0.5f64..1.5, a in 0.0f64..6.3) {
            let d = UnitDisk;
            let y = d.project([r * a.cos(), r * a.sin()]).unwrap();
            let z = d.project(y).unwrap();
            prop_assert!((y[0] - z[0]).abs() < 1e-12 && (y[1] - z[1]).abs() < 1e-12);
            let n = d.boundary_normal(y);
            prop_assert!((n[0].hypot(n[1]) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn origin_is_rejected() {
        assert!(UnitDisk.project([0.0, 0.0]).is_err());
    }
}
