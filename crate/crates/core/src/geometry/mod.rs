//! Meshes, voxel carving and the sensor slab.

pub mod mesh;
pub mod sensor;
pub mod voxel;

pub use mesh::{load_mesh, parse_obj, TriangleMesh};
pub use sensor::{make_sensor_slab, Pose, SensorLayout};
pub use voxel::voxelize;

use crate::error::{Error, Result};
use crate::solver::particle::{Particle, Role};

/// Particles sharing one role and one rest spacing.
#[derive(Debug, Clone)]
pub struct ParticleCloud {
    pub particles: Vec<Particle>,
    pub spacing: f64,
    pub role: Role,
}

impl ParticleCloud {
    pub fn new(particles: Vec<Particle>, spacing: f64, role: Role) -> Result<Self> {
        if !(spacing > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "particle spacing must be positive, got {spacing}"
            )));
        }
        if particles.is_empty() {
            return Err(Error::InvalidParameter("particle cloud is empty".into()));
        }
        if particles.iter().any(|p| p.role != role) {
            return Err(Error::InvalidParameter("mixed particle roles in one cloud".into()));
        }
        Ok(Self {
            particles,
            spacing,
            role,
        })
    }

    /// Rescales particle masses to `density * rest_volume`.
    pub fn with_density(mut self, density: f64) -> Self {
        for p in &mut self.particles {
            p.mass = density * p.rest_volume;
        }
        self
    }

    pub fn centroid(&self) -> nalgebra::Vector3<f64> {
        self.particles
            .iter()
            .map(|p| p.position)
            .sum::<nalgebra::Vector3<f64>>()
            / self.particles.len() as f64
    }
}
