//! Numerical laboratory for the inhomogeneous Landau equation with
//! frozen coefficients near vacuum: phase-space grids, the collision
//! kernel, evolution, weighted norms and inequality checks.

pub mod calculus;
pub mod collision_kernel;
pub mod estimate_lab;
pub mod evolution;
pub mod experiment;
pub mod norms_energy;
pub mod phase_grid;
