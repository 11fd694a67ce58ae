//! MLS-MPM elastic solver.
//!
//! One step is `clear -> p2g_scatter -> grid_update -> g2p_gather`. The
//! sensor is fixed-corotated elastic; object particles are rigid, add mass
//! to the grid, and their occupied nodes are pinned to the object velocity.

pub mod grid;
pub mod kernel;
pub mod material;
pub mod particle;
pub mod step;
pub mod transfer;

pub use grid::{GridState, MASS_EPSILON};
pub use kernel::{bspline_weights, quadratic_bspline, Stencil};
pub use material::{
    inversion_guard, lame_params, pk1_stress, polar_decompose, strain_energy, MaterialParams,
};
pub use particle::{LatticeIndex, Particle, Role};
pub use step::{simulation_step, Obstacle, Simulation};
pub use transfer::{g2p_gather, grid_update, p2g_scatter, AffineUpdate, Reduction, StepParams};
