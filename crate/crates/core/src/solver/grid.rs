use std::collections::HashSet;
use std::sync::atomic::AtomicU64;

use nalgebra::Vector3;

use crate::error::{Error, Result};

/// Node masses at or below this are treated as empty.
pub const MASS_EPSILON: f64 = 1e-10;

/// Uniform background lattice. Node `[i, j, k]` sits at `origin + [i, j, k] * dx`.
#[derive(Debug)]
pub struct GridState {
    pub resolution: [usize; 3],
    pub dx: f64,
    pub origin: Vector3<f64>,
    pub node_mass: Vec<f64>,
    pub node_momentum: Vec<Vector3<f64>>,
    pub node_velocity: Vec<Vector3<f64>>,
    pub obstacle: Vec<bool>,
    /// Velocity imposed on obstacle nodes.
    pub obstacle_velocity: Vector3<f64>,
    /// Half-open node box that may hold nonzero accumulators.
    dirty: Option<([usize; 3], [usize; 3])>,
    pub(crate) atomic_scratch: Vec<AtomicU64>,
}

impl GridState {
    pub fn new(resolution: [usize; 3], dx: f64, origin: Vector3<f64>) -> Result<Self> {
        if resolution.iter().any(|&n| n < 4) {
            return Err(Error::InvalidParameter(format!(
                "grid needs at least 4 nodes per axis, got {resolution:?}"
            )));
        }
        if !(dx > 0.0 && dx.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "grid spacing must be positive, got {dx}"
            )));
        }
        let n = resolution.iter().product();
        Ok(Self {
            resolution,
            dx,
            origin,
            node_mass: vec![0.0; n],
            node_momentum: vec![Vector3::zeros(); n],
            node_velocity: vec![Vector3::zeros(); n],
            obstacle: vec![false; n],
            obstacle_velocity: Vector3::zeros(),
            dirty: None,
            atomic_scratch: Vec::new(),
        })
    }

    pub fn num_nodes(&self) -> usize {
        self.node_mass.len()
    }

    #[inline]
    pub fn linear(&self, [i, j, k]: [usize; 3]) -> usize {
        (k * self.resolution[1] + j) * self.resolution[0] + i
    }

    pub fn node_position(&self, [i, j, k]: [usize; 3]) -> Vector3<f64> {
        self.origin + Vector3::new(i as f64, j as f64, k as f64) * self.dx
    }

    /// Zeroes mass, momentum and velocity on every node.
    pub fn clear(&mut self) {
        if let Some((lo, hi)) = self.dirty.take() {
            for k in lo[2]..hi[2] {
                for j in lo[1]..hi[1] {
                    let start = self.linear([lo[0], j, k]);
                    let end = start + (hi[0] - lo[0]);
                    self.node_mass[start..end].fill(0.0);
                    self.node_momentum[start..end].fill(Vector3::zeros());
                    self.node_velocity[start..end].fill(Vector3::zeros());
                }
            }
        }
    }

    pub(crate) fn mark_dirty(&mut self, lo: [usize; 3], hi: [usize; 3]) {
        self.dirty = Some(match self.dirty {
            None => (lo, hi),
            Some((a, b)) => (
                [0, 1, 2].map(|i| a[i].min(lo[i])),
                [0, 1, 2].map(|i| b[i].max(hi[i])),
            ),
        });
    }

    /// Normalizes momentum into velocity; obstacle nodes take the obstacle velocity.
    pub fn update_velocities(&mut self) {
        let Some((lo, hi)) = self.dirty else {
            return;
        };
        for k in lo[2]..hi[2] {
            for j in lo[1]..hi[1] {
                for i in lo[0]..hi[0] {
                    let n = self.linear([i, j, k]);
                    let m = self.node_mass[n];
                    self.node_velocity[n] = if self.obstacle[n] {
                        self.obstacle_velocity
                    } else if m > MASS_EPSILON {
                        self.node_momentum[n] / m
                    } else {
                        Vector3::zeros()
                    };
                }
            }
        }
    }

    pub fn total_mass(&self) -> f64 {
        self.node_mass.iter().sum()
    }

    pub fn total_momentum(&self) -> Vector3<f64> {
        self.node_momentum.iter().sum()
    }

    /// Flags every node whose position falls inside an occupied voxel
    /// (`floor((x - displacement) / spacing)` in `voxels`).
    pub fn rasterize_obstacle(
        &mut self,
        voxels: &HashSet<[i64; 3]>,
        spacing: f64,
        displacement: Vector3<f64>,
    ) {
        self.obstacle.fill(false);
        if voxels.is_empty() {
            return;
        }
        let mut lo = [i64::MAX; 3];
        let mut hi = [i64::MIN; 3];
        for v in voxels {
            for a in 0..3 {
                lo[a] = lo[a].min(v[a]);
                hi[a] = hi[a].max(v[a]);
            }
        }
        let node_range = |a: usize| {
            let min = lo[a] as f64 * spacing + displacement[a];
            let max = (hi[a] + 1) as f64 * spacing + displacement[a];
            let n = self.resolution[a] as i64;
            let first = (((min - self.origin[a]) / self.dx).floor() as i64).clamp(0, n);
            let last = (((max - self.origin[a]) / self.dx).ceil() as i64 + 1).clamp(0, n);
            first as usize..last as usize
        };
        let (rx, ry, rz) = (node_range(0), node_range(1), node_range(2));
        for k in rz {
            for j in ry.clone() {
                for i in rx.clone() {
                    let p = self.node_position([i, j, k]) - displacement;
                    let key = [0, 1, 2].map(|a| (p[a] / spacing).floor() as i64);
                    if voxels.contains(&key) {
                        let n = self.linear([i, j, k]);
                        self.obstacle[n] = true;
                    }
                }
            }
        }
    }
}
