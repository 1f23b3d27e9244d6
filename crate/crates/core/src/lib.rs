//! Desingularized boundary element method for the 3-D Helmholtz equation with
//! point monopole sources, multi-domain interface coupling and quadratic
//! curved surface elements, plus an analytic layered-sphere solution used as
//! a reference.

pub mod error;
pub mod field;
pub mod kernel;
pub mod mesh;
pub mod oracle;
pub mod scenario;
pub mod solver;
pub mod special;

pub use error::{Error, Result};
pub use num_complex::Complex64;

/// Point or vector in 3-D space.
pub type Point3 = nalgebra::Vector3<f64>;

/// Formats a float with 17 significant digits (lossless round trip).
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}
