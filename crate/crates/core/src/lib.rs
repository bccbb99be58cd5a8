pub mod fem;
pub mod geometry;
pub mod problem;
pub mod space;
pub mod assembly;
pub mod solver;
pub mod harness;
