use std::path::PathBuf;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::geometry::Pose;
use crate::solver::{AffineUpdate, MaterialParams, Reduction, StepParams};

/// Rigid object pressed by the sensor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObjectSpec {
    /// Wavefront OBJ file.
    pub mesh: PathBuf,
    /// Voxel carving spacing.
    pub spacing: f64,
    #[serde(default)]
    pub name: Option<String>,
    /// Scripted rigid velocity; zero keeps the object static.
    #[serde(default)]
    pub velocity: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SensorSpec {
    pub h: usize,
    pub w: usize,
    pub layers: usize,
    pub spacing: f64,
    #[serde(default)]
    pub pose: Pose,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub resolution: [usize; 3],
    pub dx: f64,
    #[serde(default)]
    pub origin: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PressSpec {
    pub dt: f64,
    /// Robot hand velocity `v_r`.
    pub hand_velocity: [f64; 3],
    /// Unit press direction; `hand_velocity` must point along it.
    pub direction: [f64; 3],
    /// Chamfer bound `l` that stops the hand (inclusive).
    pub terminal_threshold: f64,
    pub max_steps: usize,
    #[serde(default = "one")]
    pub record_every: usize,
    /// Zero-velocity relaxation steps after the press ends.
    #[serde(default)]
    pub settle_steps: usize,
    #[serde(default)]
    pub reduction: Reduction,
    #[serde(default)]
    pub affine_update: AffineUpdate,
}

fn one() -> usize {
    1
}

/// Complete description of one press experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PressScenario {
    #[serde(default)]
    pub object: Option<ObjectSpec>,
    pub sensor: SensorSpec,
    #[serde(default)]
    pub material: MaterialParams,
    pub grid: GridSpec,
    pub press: PressSpec,
}

impl PressScenario {
    pub fn validate(&self) -> Result<()> {
        let p = &self.press;
        let d = Vector3::from(p.direction);
        if !((d.norm() - 1.0).abs() <= 1e-9) {
            return Err(invalid(format!(
                "press direction must be a unit vector, got {:?} (norm {})",
                p.direction,
                d.norm()
            )));
        }
        let v = Vector3::from(p.hand_velocity);
        if !v.iter().all(|c| c.is_finite()) {
            return Err(invalid("hand velocity must be finite".into()));
        }
        let speed = v.norm();
        if speed > 0.0 && (v.cross(&d).norm() > 1e-9 * speed || v.dot(&d) < 0.0) {
            return Err(invalid(format!(
                "hand velocity {:?} is not along the press direction {:?}",
                p.hand_velocity, p.direction
            )));
        }
        if !(p.terminal_threshold >= 0.0) {
            return Err(invalid(format!(
                "terminal threshold must be nonnegative, got {}",
                p.terminal_threshold
            )));
        }
        if p.max_steps == 0 {
            return Err(invalid("max_steps must be positive".into()));
        }
        if p.record_every == 0 {
            return Err(invalid("record_every must be positive".into()));
        }
        if let Some(o) = &self.object {
            if !(o.spacing > 0.0) {
                return Err(invalid(format!(
                    "object spacing must be positive, got {}",
                    o.spacing
                )));
            }
        }
        // Re-derive the Lame parameters so hand-edited values cannot drift.
        MaterialParams::with_density(
            self.material.young,
            self.material.poisson,
            self.material.density,
        )?;
        self.step_params().check(self.grid.dx, &self.material)?;
        Ok(())
    }

    pub fn step_params(&self) -> StepParams {
        StepParams {
            dt: self.press.dt,
            reduction: self.press.reduction,
            affine_update: self.press.affine_update,
        }
    }

    pub fn hand_velocity(&self) -> Vector3<f64> {
        Vector3::from(self.press.hand_velocity)
    }

    pub fn direction(&self) -> Vector3<f64> {
        Vector3::from(self.press.direction)
    }

    /// Hex SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("scenario serializes");
        hex::encode(Sha256::digest(&json))
    }
}

fn invalid(msg: String) -> Error {
    Error::InvalidParameter(msg)
}
