//! Simulation and measurement of Gaussian spherical eigenfunctions and the
//! empirical processes of their excursion sets: special functions, Wigner
//! couplings, spherical quadrature, field synthesis, excursion statistics,
//! and a reproducible Monte Carlo harness.

pub mod error;
pub mod excursion;
pub mod field;
pub mod harness;
pub mod specfun;
pub mod sphere;
pub mod wigner;

pub use error::{Error, Result};
