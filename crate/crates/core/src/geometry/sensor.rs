use nalgebra::{Isometry3, Translation3, UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};

use super::ParticleCloud;
use crate::error::{Error, Result};
use crate::solver::particle::{LatticeIndex, Particle, Role};

/// Rigid placement of the sensor slab: rotation (scaled axis, radians) then translation.
///
/// In the slab's local frame the lattice runs along +x (h), +y (w) and +z (layer);
/// the slab presses toward local -z, so layer 0 is the leading face.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct Pose {
    pub translation: [f64; 3],
    #[serde(default)]
    pub rotation: [f64; 3],
}

impl Pose {
    pub fn identity() -> Self {
        Self::default()
    }

    pub fn from_translation(t: Vector3<f64>) -> Self {
        Self {
            translation: t.into(),
            rotation: [0.0; 3],
        }
    }

    pub fn from_isometry(iso: &Isometry3<f64>) -> Self {
        Self {
            translation: iso.translation.vector.into(),
            rotation: iso.rotation.scaled_axis().into(),
        }
    }

    pub fn isometry(&self) -> Isometry3<f64> {
        Isometry3::from_parts(
            Translation3::from(Vector3::from(self.translation)),
            UnitQuaternion::from_scaled_axis(Vector3::from(self.rotation)),
        )
    }

    /// World direction the slab moves in when pressing.
    pub fn press_direction(&self) -> Vector3<f64> {
        self.isometry().rotation * -Vector3::z()
    }
}

/// Lattice bookkeeping for a sensor slab.
#[derive(Debug, Clone, PartialEq)]
pub struct SensorLayout {
    pub h: usize,
    pub w: usize,
    pub layers: usize,
    /// Lattice index of each sensor particle, in particle order.
    pub indices: Vec<LatticeIndex>,
}

impl SensorLayout {
    /// Particle order used by [`make_sensor_slab`]: layer-major, then h, then w.
    pub fn particle_of(&self, h: usize, w: usize, layer: usize) -> usize {
        (layer * self.h + h) * self.w + w
    }

    /// Particle indices of the contact layer in row-major `(h, w)` order.
    pub fn contact_layer(&self) -> Vec<usize> {
        (0..self.h)
            .flat_map(|h| (0..self.w).map(move |w| (h, w)))
            .map(|(h, w)| self.particle_of(h, w, 0))
            .collect()
    }

    pub fn layer(&self, layer: usize) -> Vec<usize> {
        (0..self.h)
            .flat_map(|h| (0..self.w).map(move |w| (h, w)))
            .map(|(h, w)| self.particle_of(h, w, layer))
            .collect()
    }

    pub fn len(&self) -> usize {
        self.h * self.w * self.layers
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Checks the layout against a particle slice that starts with the sensor particles.
    pub fn validate(&self, particles: &[Particle]) -> Result<()> {
        if self.indices.len() != self.len() || particles.len() < self.len() {
            return Err(Error::InvalidParameter(format!(
                "sensor layout expects {} particles, found {}",
                self.len(),
                self.indices.len().min(particles.len())
            )));
        }
        for (p, idx) in self.indices.iter().enumerate() {
            if particles[p].lattice != Some(*idx) || self.particle_of(idx.h, idx.w, idx.layer) != p {
                return Err(Error::InvalidParameter(format!(
                    "missing or inconsistent lattice index for sensor particle {p}"
                )));
            }
        }
        Ok(())
    }

    /// Local-frame centre of the contact layer.
    pub fn contact_centre_local(&self, spacing: f64) -> Vector3<f64> {
        Vector3::new(
            (self.h - 1) as f64 * spacing / 2.0,
            (self.w - 1) as f64 * spacing / 2.0,
            0.0,
        )
    }
}

/// Builds an `h x w x layers` particle lattice under `pose`.
///
/// Every particle starts at rest with unit density, `alpha = 1`.
pub fn make_sensor_slab(
    h: usize,
    w: usize,
    layers: usize,
    spacing: f64,
    pose: &Isometry3<f64>,
) -> Result<(ParticleCloud, SensorLayout)> {
    if h < 2 || w < 2 {
        return Err(Error::InvalidParameter(format!(
            "sensor lattice must be at least 2x2, got {h}x{w}"
        )));
    }
    if layers < 2 {
        return Err(Error::InvalidParameter(format!(
            "sensor slab needs at least 2 layers, got {layers}"
        )));
    }
    if !(spacing > 0.0 && spacing.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "sensor spacing must be positive, got {spacing}"
        )));
    }
    let volume = spacing.powi(3);
    let mut particles = Vec::with_capacity(h * w * layers);
    let mut indices = Vec::with_capacity(h * w * layers);
    for layer in 0..layers {
        for i in 0..h {
            for j in 0..w {
                let local = nalgebra::Point3::new(
                    i as f64 * spacing,
                    j as f64 * spacing,
                    layer as f64 * spacing,
                );
                let idx = LatticeIndex { h: i, w: j, layer };
                let mut p = Particle::at_rest((pose * local).coords, volume, volume, Role::Sensor);
                p.lattice = Some(idx);
                particles.push(p);
                indices.push(idx);
            }
        }
    }
    let layout = SensorLayout { h, w, layers, indices };
    Ok((ParticleCloud::new(particles, spacing, Role::Sensor)?, layout))
}
