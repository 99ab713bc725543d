//! Matrix-free finite-element solver for incompressible fluid–structure
//! interaction in an arbitrary Lagrangian–Eulerian frame.

pub mod bench;
pub mod error;
pub mod extension;
pub mod fem;
pub mod krylov;
pub mod materials;
pub mod mesh;
pub mod mg;
pub mod sparse;
pub mod stepper;
pub mod weak_forms;

pub use error::{FsiError, Result};
