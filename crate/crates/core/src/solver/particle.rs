use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Sensor,
    Object,
}

/// Position of a sensor particle in the slab lattice. Layer 0 is the contact layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct LatticeIndex {
    pub h: usize,
    pub w: usize,
    pub layer: usize,
}

/// A material point.
#[derive(Debug, Clone, PartialEq)]
pub struct Particle {
    pub position: Vector3<f64>,
    pub velocity: Vector3<f64>,
    /// Deformation gradient.
    pub deform_grad: Matrix3<f64>,
    /// Affine velocity matrix carried between transfers.
    pub affine: Matrix3<f64>,
    pub mass: f64,
    pub rest_volume: f64,
    /// Blend between grid velocity (1) and the scripted hand velocity (0).
    pub alpha: f64,
    pub role: Role,
    pub lattice: Option<LatticeIndex>,
}

impl Particle {
    /// Particle at rest: zero velocity, `F = I`, `C = 0`, `alpha = 1`.
    pub fn at_rest(position: Vector3<f64>, mass: f64, rest_volume: f64, role: Role) -> Self {
        Self {
            position,
            velocity: Vector3::zeros(),
            deform_grad: Matrix3::identity(),
            affine: Matrix3::zeros(),
            mass,
            rest_volume,
            alpha: 1.0,
            role,
            lattice: None,
        }
    }

    pub fn non_finite_field(&self) -> Option<&'static str> {
        if !self.position.iter().all(|v| v.is_finite()) {
            Some("position")
        } else if !self.velocity.iter().all(|v| v.is_finite()) {
            Some("velocity")
        } else if !self.deform_grad.iter().all(|v| v.is_finite()) {
            Some("deformation gradient")
        } else if !self.affine.iter().all(|v| v.is_finite()) {
            Some("affine matrix")
        } else {
            None
        }
    }
}
