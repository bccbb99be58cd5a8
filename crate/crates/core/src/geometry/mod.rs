//! Curved order-2 triangulations of the unit disk and their geometric data.

pub mod chart;
pub mod element;
pub mod generate;
pub mod io;
pub mod mesh;

pub use chart::{DomainChart, UnitDisk};
pub use element::{edge_direction, edge_point, ElementGeometry, REF_VERTICES};
pub use generate::{disk_mesh_with_rings, generate_disk_mesh, graded_rings, uniform_rings, Grading};
pub use io::{read_mesh, read_mesh_str, write_mesh, write_mesh_string};
pub use mesh::{check_mesh, CurvedMesh, Face, FaceKind, FaceRecord, MeshCheck, MeshMetrics};

use crate::fem::FemError;

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("point {0:?} is outside the chart's neighbourhood of the boundary")]
    OutsideChart([f64; 2]),
    #[error("element with vertices {vertices:?} is inverted")]
    InvertedElement { vertices: [usize; 3] },
    #[error("element with vertices {vertices:?} has map deviation {deviation} >= 1")]
    InadmissibleCurvedElement { vertices: [usize; 3], deviation: f64 },
    #[error("edge ({0}, {1}) is shared by more than two elements")]
    NonManifoldEdge(usize, usize),
    #[error("face {0}: boundary flags disagree with topology")]
    BoundaryMismatch(usize),
    #[error("face {0} has a degenerate parameterisation")]
    DegenerateEdge(usize),
    #[error("inverse element map did not converge at {0:?}")]
    InverseMapDiverged([f64; 2]),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("mesh file line {0}: {1}")]
    Parse(usize, String),
    #[error("i/o error: {0}")]
    Io(String),
    #[error(transparent)]
    Fem(#[from] FemError),
}
