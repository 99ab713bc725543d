//! Taylor–Hood Q2/Q1 finite elements on quadrilateral meshes.

pub mod basis;
pub mod geometry;
pub mod levels;
pub mod operator;
pub mod space;

pub use geometry::CellGeometry;
pub use levels::Discretization;
pub use operator::{BlockOperator, QpCoefficients};
pub use space::{DofMap, Transfer};
