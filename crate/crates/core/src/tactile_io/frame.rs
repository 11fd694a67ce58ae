use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::SensorLayout;
use crate::scene::chamfer_translation_free;
use crate::solver::Particle;

/// Contact-layer deformation at one step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TactileFrame {
    pub h: usize,
    pub w: usize,
    /// Row-major `h x w` displacements, mean translation removed.
    pub displacement: Vec<Vector3<f64>>,
    pub chamfer: f64,
    pub step: usize,
    pub press_direction: Vector3<f64>,
    /// Mean position of the contact layer.
    pub press_position: Vector3<f64>,
}

impl TactileFrame {
    pub fn zeros(h: usize, w: usize) -> Self {
        Self {
            h,
            w,
            displacement: vec![Vector3::zeros(); h * w],
            chamfer: 0.0,
            step: 0,
            press_direction: -Vector3::z(),
            press_position: Vector3::zeros(),
        }
    }

    pub fn at(&self, h: usize, w: usize) -> Vector3<f64> {
        self.displacement[h * self.w + w]
    }

    pub fn magnitudes(&self) -> Vec<f64> {
        self.displacement.iter().map(|d| d.norm()).collect()
    }

    pub fn max_magnitude(&self) -> f64 {
        self.magnitudes().into_iter().fold(0.0, f64::max)
    }

    /// Pixel `(h, w)` with the largest displacement magnitude (first on ties).
    pub fn argmax(&self) -> (usize, usize) {
        let mut best = (0, 0.0);
        for (i, m) in self.magnitudes().into_iter().enumerate() {
            if m > best.1 {
                best = (i, m);
            }
        }
        (best.0 / self.w, best.0 % self.w)
    }

    /// Pixels whose magnitude exceeds `fraction` of the frame maximum.
    pub fn deformed_area(&self, fraction: f64) -> usize {
        let cut = fraction * self.max_magnitude();
        self.magnitudes().into_iter().filter(|&m| m > cut).count()
    }
}

/// Contact-layer positions in row-major `(h, w)` order.
pub fn contact_positions(particles: &[Particle], layout: &SensorLayout) -> Vec<Vector3<f64>> {
    layout
        .contact_layer()
        .into_iter()
        .map(|i| particles[i].position)
        .collect()
}

/// Builds the frame for `step` from the contact layer against its rest positions.
pub fn extract_tactile_frame(
    particles: &[Particle],
    layout: &SensorLayout,
    rest_positions: &[Vector3<f64>],
    step: usize,
    press_direction: Vector3<f64>,
) -> Result<TactileFrame> {
    let n = layout.h * layout.w;
    if rest_positions.len() != n {
        return Err(Error::InvalidParameter(format!(
            "expected {n} rest positions, got {}",
            rest_positions.len()
        )));
    }
    let mut current = Vec::with_capacity(n);
    for h in 0..layout.h {
        for w in 0..layout.w {
            let i = layout.particle_of(h, w, 0);
            let p = particles.get(i).filter(|p| {
                p.lattice.is_some_and(|l| l.h == h && l.w == w && l.layer == 0)
            });
            let Some(p) = p else {
                return Err(Error::InvalidParameter(format!(
                    "no sensor particle with lattice index ({h}, {w}, 0)"
                )));
            };
            current.push(p.position);
        }
    }
    let mean_now = current.iter().sum::<Vector3<f64>>() / n as f64;
    let mean_rest = rest_positions.iter().sum::<Vector3<f64>>() / n as f64;
    let displacement = current
        .iter()
        .zip(rest_positions)
        .map(|(c, r)| (c - mean_now) - (r - mean_rest))
        .collect();
    Ok(TactileFrame {
        h: layout.h,
        w: layout.w,
        displacement,
        chamfer: chamfer_translation_free(&current, rest_positions)?,
        step,
        press_direction,
        press_position: mean_now,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::make_sensor_slab;
    use nalgebra::Isometry3;

    fn slab() -> (Vec<Particle>, SensorLayout) {
        let (cloud, layout) = make_sensor_slab(4, 5, 2, 0.1, &Isometry3::identity()).unwrap();
        (cloud.particles, layout)
    }

    #[test]
    fn rest_frame_is_zero() {
        let (ps, layout) = slab();
        let rest = contact_positions(&ps, &layout);
        let f = extract_tactile_frame(&ps, &layout, &rest, 0, -Vector3::z()).unwrap();
        assert_eq!(f.displacement.len(), 20);
        assert!(f.displacement.iter().all(|d| *d == Vector3::zeros()));
        assert_eq!(f.chamfer, 0.0);
        assert_eq!(f.max_magnitude(), 0.0);
    }

    #[test]
    fn rigid_translation_is_removed() {
        let (mut ps, layout) = slab();
        let rest = contact_positions(&ps, &layout);
        for p in &mut ps {
            p.position += Vector3::new(0.3, -0.2, 0.7);
        }
        let f = extract_tactile_frame(&ps, &layout, &rest, 5, -Vector3::z()).unwrap();
        assert!(f.max_magnitude() < 1e-12);
        assert!(f.chamfer < 1e-20);
        assert_eq!(f.step, 5);
    }

    #[test]
    fn local_dent_is_the_argmax() {
        let (mut ps, layout) = slab();
        let rest = contact_positions(&ps, &layout);
        ps[layout.particle_of(2, 3, 0)].position.z -= 0.05;
        let f = extract_tactile_frame(&ps, &layout, &rest, 1, -Vector3::z()).unwrap();
        assert_eq!(f.argmax(), (2, 3));
        assert_eq!(f.deformed_area(0.1), 1);
        assert!(f.chamfer > 0.0);
    }

    #[test]
    fn missing_lattice_index_is_an_error() {
        let (mut ps, layout) = slab();
        let rest = contact_positions(&ps, &layout);
        ps[3].lattice = None;
        assert!(extract_tactile_frame(&ps, &layout, &rest, 0, -Vector3::z()).is_err());
        assert!(extract_tactile_frame(&ps, &layout, &rest[1..], 0, -Vector3::z()).is_err());
    }
}
