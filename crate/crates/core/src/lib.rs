//! Exact-solution workbench for the spin-1/2 XXZ chain in the massive
//! regime, with antiperiodic (twisted) and periodic boundaries.
//!
//! * [`model`]: Hamiltonians, conserved charges and the transfer matrix as
//!   matrix-free operators.
//! * [`ed`]: dense and Lanczos exact diagonalization.
//! * [`baes`]: reduced homogeneous Bethe equations, the inhomogeneous T-Q
//!   solution, energies and charges.
//! * [`thermo`]: thermodynamic-limit series.
//! * [`scaling`]: finite-size fits and extrapolation.

pub mod baes;
pub mod ed;
pub mod error;
pub mod linalg;
pub mod model;
pub mod scaling;
pub mod thermo;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;
