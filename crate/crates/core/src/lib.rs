//! Second-order mixed finite element method for the Cahn-Hilliard equation
//! on the unit square, with a Newton solver whose Jacobian systems are solved
//! by MINRES preconditioned with a block-diagonal geometric multigrid.

pub mod error;
pub mod fem;
pub mod linalg;
pub mod mesh;
pub mod presets;
pub mod scheme;
pub mod spectral;
pub mod study;

pub use error::{Error, Result};
