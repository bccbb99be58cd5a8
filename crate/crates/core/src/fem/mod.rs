//! Reference-element machinery: quadrature, orthonormal basis and derivative pushforward.

pub mod basis;
pub mod pushforward;
pub mod quadrature;

pub use basis::{basis_size, Jet, OrthonormalBasis};
pub use pushforward::{MapJet, Pushforward};
pub use quadrature::{
    edge_quadrature, gauss_legendre, segment_rule, triangle_rule, volume_quadrature, SegmentRule,
    TriangleRule,
};

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum FemError {
    #[error("no quadrature rule available for degree {0}")]
    UnsupportedQuadratureDegree(usize),
    #[error("could not orthonormalise the degree {0} basis")]
    BasisConstruction(usize),
}
