//! Numerical toolkit for curvature positivity of Hermitian metrics on trivial
//! holomorphic vector bundles over boxes in `C^n`.

pub mod calculus;
pub mod constructions;
pub mod curvature;
pub mod error;
pub mod expr;
pub mod field;
pub mod grid;
pub mod linalg;
pub mod samples;

pub use error::{Error, Result};
pub use linalg::{CMatrix, HermitianMatrix, C64};
