//! Discretizations of the fractional Laplacian and of constrained flows of
//! fractional harmonic maps into spheres.
//!
//! * [`geometry`]: periodic grids, simplicial meshes, nodal fields, lumped masses.
//! * [`spectral`]: Fourier multipliers on the torus and the Leibniz defect.
//! * [`fem`]: Galerkin stiffness matrices of the integral fractional Laplacian.
//! * [`heatflow`]: the semi-implicit constrained L² gradient flow.
//! * [`spin`]: the midpoint spin-dynamics integrator.

pub mod error;
pub mod fem;
pub mod geometry;
pub mod heatflow;
pub mod io;
pub mod linalg;
pub mod quadrature;
pub mod rng;
pub mod spectral;
pub mod spin;

pub use error::{Error, Result};
