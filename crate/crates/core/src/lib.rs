//! Elastic tactile sensor simulation.
//!
//! A deformable particle slab is pressed against rigid voxelized objects by
//! a hybrid particle/grid (MLS-MPM) solver. The contact layer's deformation
//! is recorded as `H x W x 3` tactile frames.

pub mod error;
pub mod geometry;
pub mod scene;
pub mod solver;
pub mod tactile_io;

pub use error::{Error, Result};
pub use solver::MaterialParams;
