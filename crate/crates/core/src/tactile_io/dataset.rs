use std::fs;
use std::path::{Path, PathBuf};

use log::{info, warn};
use nalgebra::{Isometry3, Point3, Translation3, Unit, UnitQuaternion, Vector3};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::export::{export_frame, Formats};
use crate::error::{Error, Result};
use crate::geometry::{load_mesh, voxelize, Pose, SensorLayout, TriangleMesh};
use crate::scene::{PressRun, PressScenario};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    /// Binary frame path relative to the manifest.
    pub frame: PathBuf,
    pub frame_sha256: String,
    pub press_direction: [f64; 3],
    pub press_position: [f64; 3],
    pub terminal_threshold: f64,
    pub final_chamfer: f64,
    pub steps_run: usize,
    pub scenario_hash: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub object: String,
    pub entries: Vec<ManifestEntry>,
}

impl DatasetManifest {
    /// Hex SHA-256 over every frame digest in entry order.
    pub fn digest(&self) -> String {
        let mut h = Sha256::new();
        for e in &self.entries {
            h.update(e.frame_sha256.as_bytes());
            h.update(e.scenario_hash.as_bytes());
        }
        hex::encode(h.finalize())
    }
}

/// `n` roughly uniform unit vectors on a golden-angle spiral.
pub fn fibonacci_directions(n: usize) -> Vec<Vector3<f64>> {
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    (0..n)
        .map(|i| {
            let z = 1.0 - (2 * i + 1) as f64 / n as f64;
            let r = (1.0 - z * z).sqrt();
            let phi = golden * i as f64;
            Vector3::new(r * phi.cos(), r * phi.sin(), z)
        })
        .collect()
}

/// Rotation taking the slab's local press axis (-z) onto `direction`.
pub fn press_rotation(direction: &Vector3<f64>) -> UnitQuaternion<f64> {
    let from = -Vector3::z();
    UnitQuaternion::rotation_between(&from, direction).unwrap_or_else(|| {
        // Antiparallel: any half turn about an axis normal to z works.
        UnitQuaternion::from_axis_angle(&Vector3::x_axis(), std::f64::consts::PI)
    })
}

/// Copy of `base` with the sensor facing `direction`, its contact-layer
/// centre `standoff` outside the surface point hit by a ray from `centre`
/// toward `-direction`.
pub fn aim_scenario(
    base: &PressScenario,
    mesh: &TriangleMesh,
    centre: &Vector3<f64>,
    direction: &Vector3<f64>,
    standoff: f64,
    threshold: f64,
) -> Result<PressScenario> {
    let d = direction.normalize();
    let hits = mesh.ray_hits(&Point3::from(*centre), &-d);
    let t = hits.into_iter().fold(f64::NAN, f64::max);
    if !t.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "no surface found from the object centre along {:?}",
            <[f64; 3]>::from(-d)
        )));
    }
    let surface = centre - d * t;
    let rotation = press_rotation(&d);
    let s = &base.sensor;
    let layout = SensorLayout {
        h: s.h,
        w: s.w,
        layers: s.layers,
        indices: Vec::new(),
    };
    let local_centre = layout.contact_centre_local(s.spacing);
    let target = surface - d * standoff;
    let translation = target - rotation * local_centre;
    let mut out = base.clone();
    out.sensor.pose = Pose::from_isometry(&Isometry3::from_parts(Translation3::from(translation), rotation));
    let speed = base.hand_velocity().norm();
    out.press.direction = d.into();
    out.press.hand_velocity = (d * speed).into();
    out.press.terminal_threshold = threshold;
    Ok(out)
}

/// Runs one press per `(direction, threshold)` pair and writes the final
/// frames plus `manifest.json` into `out_dir`. Failed presses are logged and
/// left out of the manifest.
pub fn generate_dataset(
    base: &PressScenario,
    directions: &[Vector3<f64>],
    thresholds: &[f64],
    out_dir: &Path,
) -> Result<DatasetManifest> {
    if directions.is_empty() || thresholds.is_empty() {
        return Err(Error::InvalidParameter(
            "dataset needs at least one direction and one threshold".into(),
        ));
    }
    let object = base
        .object
        .as_ref()
        .ok_or_else(|| Error::InvalidParameter("dataset generation needs an object".into()))?;
    let mesh = load_mesh(&object.mesh)?;
    let centre = voxelize(&mesh, object.spacing)?.centroid();
    let standoff = 2.0 * object.spacing;
    let name = object.name.clone().unwrap_or_else(|| {
        object
            .mesh
            .file_stem()
            .map_or("object".into(), |s| s.to_string_lossy().into_owned())
    });
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;

    let jobs: Vec<(usize, Vector3<f64>, f64)> = directions
        .iter()
        .flat_map(|d| thresholds.iter().map(move |&t| (*d, t)))
        .enumerate()
        .map(|(i, (d, t))| (i, d, t))
        .collect();
    let results: Vec<Option<ManifestEntry>> = jobs
        .par_iter()
        .map(|&(i, d, t)| {
            let stem = format!("{name}_{i:04}");
            match press_entry(base, &mesh, &centre, &d, standoff, t, out_dir, &stem) {
                Ok(e) => {
                    info!("{stem}: l = {:.3e} after {} steps", e.final_chamfer, e.steps_run);
                    Some(e)
                }
                Err(err) => {
                    warn!("{stem}: press failed: {err}");
                    None
                }
            }
        })
        .collect();
    let manifest = DatasetManifest {
        object: name,
        entries: results.into_iter().flatten().collect(),
    };
    let path = out_dir.join("manifest.json");
    fs::write(&path, serde_json::to_string_pretty(&manifest)?).map_err(|e| Error::io(&path, e))?;
    Ok(manifest)
}

#[allow(clippy::too_many_arguments)]
fn press_entry(
    base: &PressScenario,
    mesh: &TriangleMesh,
    centre: &Vector3<f64>,
    direction: &Vector3<f64>,
    standoff: f64,
    threshold: f64,
    out_dir: &Path,
    stem: &str,
) -> Result<ManifestEntry> {
    let scenario = aim_scenario(base, mesh, centre, direction, standoff, threshold)?;
    let result = PressRun::with_mesh(&scenario, Some(mesh))?.run()?;
    let frame = result.final_frame();
    let files = export_frame(frame, out_dir, stem, Formats { png: true, csv: false })?;
    let bytes = fs::read(&files.binary).map_err(|e| Error::io(&files.binary, e))?;
    Ok(ManifestEntry {
        frame: PathBuf::from(files.binary.file_name().expect("file name")),
        frame_sha256: hex::encode(Sha256::digest(&bytes)),
        press_direction: scenario.press.direction,
        press_position: frame.press_position.into(),
        terminal_threshold: threshold,
        final_chamfer: result.final_chamfer(),
        steps_run: result.steps_run,
        scenario_hash: scenario.hash(),
    })
}

/// Unit vector helper for callers holding raw arrays.
pub fn unit(v: [f64; 3]) -> Result<Vector3<f64>> {
    Unit::try_new(Vector3::from(v), 1e-12)
        .map(|u| u.into_inner())
        .ok_or_else(|| Error::InvalidParameter(format!("zero direction {v:?}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fibonacci_points_are_unit_and_spread() {
        let dirs = fibonacci_directions(50);
        assert_eq!(dirs.len(), 50);
        assert!(dirs.iter().all(|d| (d.norm() - 1.0).abs() < 1e-12));
        let mean: Vector3<f64> = dirs.iter().sum::<Vector3<f64>>() / 50.0;
        assert!(mean.norm() < 0.05);
        assert_eq!(fibonacci_directions(1)[0], Vector3::new(1.0, 0.0, 0.0));
    }

    #[test]
    fn press_rotation_maps_local_axis() {
        for d in fibonacci_directions(20).into_iter().chain([Vector3::z(), -Vector3::z()]) {
            let r = press_rotation(&d);
            assert!((r * -Vector3::z() - d).norm() < 1e-12, "{d:?}");
        }
    }

    #[test]
    fn aimed_sensor_faces_the_surface() {
        let mut base = crate::scene::scenario::tests::bare();
        base.sensor.h = 4;
        base.sensor.w = 4;
        let mesh = TriangleMesh::icosphere(Point3::new(0.5, 0.5, 0.5), 0.2, 3);
        let c = Vector3::new(0.5, 0.5, 0.5);
        let d = Vector3::new(1.0, 0.0, 0.0);
        let s = aim_scenario(&base, &mesh, &c, &d, 0.05, 1e-4).unwrap();
        let pose = s.sensor.pose;
        assert!((pose.press_direction() - d).norm() < 1e-12);
        let local = Point3::new(1.5 * base.sensor.spacing, 1.5 * base.sensor.spacing, 0.0);
        let world = pose.isometry() * local;
        assert!((world.x - (0.5 - 0.2 - 0.05)).abs() < 2e-3, "{world:?}");
        assert!((world.y - 0.5).abs() < 1e-9 && (world.z - 0.5).abs() < 1e-9);
        assert_eq!(s.press.hand_velocity, [0.1, 0.0, 0.0]);
    }
}
