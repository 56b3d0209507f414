//! Automatic versus finite-difference differentiation in neural PDE solvers:
//! system assembly, spectra, truncated entropy and training dynamics.

pub mod assembly;
pub mod error;
pub mod features;
pub mod harness;
pub mod linalg;
pub mod problems;
pub mod spectral;
pub mod training;

pub use error::{Error, Result};

/// A point in at most two dimensions; the second coordinate is zero in 1D.
pub type Point = [f64; 2];
