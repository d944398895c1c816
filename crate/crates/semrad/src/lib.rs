//! 2D spectral element solver for the linearized potential-flow radiation
//! problem of floating bodies.
//!
//! The solver drives a pseudo-impulsive body motion in the time domain,
//! records the radiation force history, and extracts frequency-dependent
//! added-mass and damping coefficients by Fourier transform. The spatial
//! discretization is a continuous Galerkin spectral element method on
//! unstructured triangular meshes with optional curvilinear body elements;
//! time integration is the classical explicit 4-stage Runge-Kutta scheme.
//!
//! Module map:
//! - [`refelem`]: orthonormal basis and discrete operators on the reference simplex
//! - [`mesh`]: mesh generation, import/export, body-fitted curving, geometric factors
//! - [`assembly`]: global Galerkin operator, boundary data, Dirichlet handling
//! - [`linsolve`]: reverse Cuthill-McKee ordering and direct envelope factorization
//! - [`radiation`]: pseudo-impulse design and the time-domain simulation loop
//! - [`hydro`]: pressures, radiation forces, added mass and damping
//! - [`analysis`]: convergence, stability, scaling and spurious-oscillation studies
//! - [`cli`]: configuration parsing and file-producing commands

pub mod analysis;
pub mod assembly;
pub mod cli;
pub mod hydro;
pub mod linsolve;
pub mod mesh;
pub mod radiation;
pub mod refelem;

mod error;

pub use error::{Error, Result};

/// Gravitational acceleration in m/s^2.
pub const GRAVITY: f64 = 9.81;
