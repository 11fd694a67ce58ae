//! Particle-to-grid scatter, grid velocity update and grid-to-particle gather.

use std::sync::atomic::{AtomicU64, Ordering};

use nalgebra::{Matrix3, Vector3};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::grid::GridState;
use super::kernel::Stencil;
use super::material::{inversion_guard, pk1_stress, MaterialParams};
use super::particle::{Particle, Role};
use crate::error::{Error, Result};

/// How per-node sums are reduced when scattering in parallel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Reduction {
    /// Particles are bucketed into spatial blocks; block partials are merged
    /// in a fixed order. Bit-reproducible for any thread count.
    #[default]
    Deterministic,
    /// Lock-free atomic adds. Faster, last-bit nondeterministic.
    Atomic,
}

/// Which velocity feeds the affine matrix update.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum AffineUpdate {
    /// `C = 4/dx^2 * sum_i w_ip v_i (x_i - x_p)^T` with grid node velocities.
    #[default]
    NodeVelocity,
    /// Same sum with the particle's own new velocity in place of `v_i`.
    /// The weighted offsets sum to zero, so this drives `C` to (numerically) zero.
    ParticleVelocity,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepParams {
    pub dt: f64,
    #[serde(default)]
    pub reduction: Reduction,
    #[serde(default)]
    pub affine_update: AffineUpdate,
}

impl StepParams {
    pub fn new(dt: f64) -> Self {
        Self {
            dt,
            reduction: Reduction::Deterministic,
            affine_update: AffineUpdate::NodeVelocity,
        }
    }

    /// Stress-term coefficient `4 dt / dx^2 * V0`.
    pub fn gamma(&self, dx: f64, rest_volume: f64) -> f64 {
        4.0 * self.dt / (dx * dx) * rest_volume
    }

    /// Largest stable step, `0.5 * dx / c`.
    pub fn cfl_bound(dx: f64, material: &MaterialParams) -> f64 {
        0.5 * dx / material.wave_speed()
    }

    pub fn check(&self, dx: f64, material: &MaterialParams) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "time step must be positive, got {}",
                self.dt
            )));
        }
        let bound = Self::cfl_bound(dx, material);
        if self.dt > bound {
            return Err(Error::Cfl {
                dt: self.dt,
                bound,
                wave_speed: material.wave_speed(),
            });
        }
        Ok(())
    }
}

/// What one particle adds to its stencil nodes:
/// `w * (mass * velocity + affine * (x_node - x_p))` momentum and `w * mass` mass.
struct Contribution {
    stencil: Stencil,
    mass: f64,
    momentum: Vector3<f64>,
    affine: Matrix3<f64>,
}

impl Contribution {
    #[inline]
    fn scatter(&self, mut add: impl FnMut([usize; 3], f64, Vector3<f64>)) {
        self.stencil.for_each(|node, w, off| {
            add(node, w * self.mass, w * (self.momentum + self.affine * off));
        });
    }
}

fn contribution(
    index: usize,
    p: &Particle,
    grid: &GridState,
    step: &StepParams,
    material: &MaterialParams,
) -> Result<Contribution> {
    let stencil = Stencil::new(&p.position, grid).ok_or(Error::OutOfGrid {
        index,
        position: p.position.into(),
    })?;
    let affine = match p.role {
        Role::Sensor => {
            let stress = pk1_stress(&p.deform_grad, material)?;
            p.mass * p.affine
                - step.gamma(grid.dx, p.rest_volume) * stress * p.deform_grad.transpose()
        }
        Role::Object => Matrix3::zeros(),
    };
    Ok(Contribution {
        stencil,
        mass: p.mass,
        momentum: p.mass * p.velocity,
        affine,
    })
}

/// Side length, in nodes, of the blocks used by the deterministic reduction.
const BLOCK: usize = 8;
const HALO: usize = BLOCK + 2;

/// Accumulates particle mass and momentum on the grid. The grid must be cleared.
pub fn p2g_scatter(
    particles: &[Particle],
    grid: &mut GridState,
    step: &StepParams,
    material: &MaterialParams,
) -> Result<()> {
    let contributions: Vec<Contribution> = particles
        .par_iter()
        .enumerate()
        .map(|(i, p)| contribution(i, p, grid, step, material))
        .collect::<Result<_>>()?;
    if contributions.is_empty() {
        return Ok(());
    }

    let mut lo = [usize::MAX; 3];
    let mut hi = [0usize; 3];
    for c in &contributions {
        for a in 0..3 {
            lo[a] = lo[a].min(c.stencil.base[a]);
            hi[a] = hi[a].max(c.stencil.base[a] + 3);
        }
    }
    grid.mark_dirty(lo, hi);

    match step.reduction {
        Reduction::Deterministic => scatter_blocked(&contributions, grid),
        Reduction::Atomic => scatter_atomic(&contributions, grid, lo, hi),
    }
    Ok(())
}

fn scatter_blocked(contributions: &[Contribution], grid: &mut GridState) {
    let block_of = |c: &Contribution| c.stencil.base.map(|b| b / BLOCK);
    let mut order: Vec<(usize, [usize; 3])> = contributions
        .iter()
        .enumerate()
        .map(|(i, c)| (i, block_of(c)))
        .collect();
    order.sort_unstable_by_key(|&(i, b)| ([b[2], b[1], b[0]], i));
    let groups: Vec<&[(usize, [usize; 3])]> = order.chunk_by(|a, b| a.1 == b.1).collect();

    let partials: Vec<([usize; 3], Vec<f64>, Vec<Vector3<f64>>)> = groups
        .par_iter()
        .map(|group| {
            let origin = group[0].1.map(|b| b * BLOCK);
            let mut mass = vec![0.0; HALO * HALO * HALO];
            let mut momentum = vec![Vector3::zeros(); HALO * HALO * HALO];
            for &(i, _) in group.iter() {
                contributions[i].scatter(|node, m, mv| {
                    let l = ((node[2] - origin[2]) * HALO + (node[1] - origin[1])) * HALO
                        + (node[0] - origin[0]);
                    mass[l] += m;
                    momentum[l] += mv;
                });
            }
            (origin, mass, momentum)
        })
        .collect();

    let res = grid.resolution;
    for (origin, mass, momentum) in partials {
        for k in 0..HALO.min(res[2] - origin[2]) {
            for j in 0..HALO.min(res[1] - origin[1]) {
                for i in 0..HALO.min(res[0] - origin[0]) {
                    let l = (k * HALO + j) * HALO + i;
                    if mass[l] == 0.0 && momentum[l] == Vector3::zeros() {
                        continue;
                    }
                    let n = grid.linear([origin[0] + i, origin[1] + j, origin[2] + k]);
                    grid.node_mass[n] += mass[l];
                    grid.node_momentum[n] += momentum[l];
                }
            }
        }
    }
}

#[inline]
fn atomic_add(slot: &AtomicU64, v: f64) {
    let _ = slot.fetch_update(Ordering::Relaxed, Ordering::Relaxed, |bits| {
        Some((f64::from_bits(bits) + v).to_bits())
    });
}

fn scatter_atomic(contributions: &[Contribution], grid: &mut GridState, lo: [usize; 3], hi: [usize; 3]) {
    let n = grid.num_nodes();
    if grid.atomic_scratch.len() != 4 * n {
        grid.atomic_scratch = (0..4 * n).map(|_| AtomicU64::new(0)).collect();
    }
    {
        let scratch = &grid.atomic_scratch;
        let res = grid.resolution;
        contributions.par_iter().for_each(|c| {
            c.scatter(|node, m, mv| {
                let l = 4 * ((node[2] * res[1] + node[1]) * res[0] + node[0]);
                atomic_add(&scratch[l], m);
                atomic_add(&scratch[l + 1], mv.x);
                atomic_add(&scratch[l + 2], mv.y);
                atomic_add(&scratch[l + 3], mv.z);
            });
        });
    }
    for k in lo[2]..hi[2] {
        for j in lo[1]..hi[1] {
            for i in lo[0]..hi[0] {
                let node = grid.linear([i, j, k]);
                let take = |s: &AtomicU64| f64::from_bits(s.swap(0, Ordering::Relaxed));
                let s = &grid.atomic_scratch[4 * node..4 * node + 4];
                let (m, x, y, z) = (take(&s[0]), take(&s[1]), take(&s[2]), take(&s[3]));
                grid.node_mass[node] += m;
                grid.node_momentum[node] += Vector3::new(x, y, z);
            }
        }
    }
}

/// Node velocities from momentum and mass, with obstacle nodes pinned.
pub fn grid_update(grid: &mut GridState) {
    grid.update_velocities();
}

/// Pulls velocity and affine state back to the particles and advects them.
///
/// Sensor particles blend the interpolated grid velocity with `hand_velocity`
/// by their `alpha`; object particles move rigidly with `object_velocity`.
pub fn g2p_gather(
    particles: &mut [Particle],
    grid: &GridState,
    hand_velocity: &Vector3<f64>,
    object_velocity: &Vector3<f64>,
    step: &StepParams,
) -> Result<()> {
    let dt = step.dt;
    let scale = 4.0 / (grid.dx * grid.dx);
    particles
        .par_iter_mut()
        .enumerate()
        .try_for_each(|(index, p)| {
            let out_of_grid = |p: &Particle| Error::OutOfGrid {
                index,
                position: p.position.into(),
            };
            if p.role == Role::Object {
                p.velocity = *object_velocity;
                p.position += dt * object_velocity;
                return Ok(());
            }
            let stencil = Stencil::new(&p.position, grid).ok_or_else(|| out_of_grid(p))?;
            let mut v_grid = Vector3::zeros();
            let mut b = Matrix3::zeros();
            let mut offset_sum = Vector3::zeros();
            stencil.for_each(|node, w, off| {
                let vi = grid.node_velocity[grid.linear(node)];
                v_grid += w * vi;
                b += (w * vi) * off.transpose();
                offset_sum += w * off;
            });
            let v = p.alpha * v_grid + (1.0 - p.alpha) * hand_velocity;
            let c = match step.affine_update {
                AffineUpdate::NodeVelocity => scale * b,
                AffineUpdate::ParticleVelocity => scale * v * offset_sum.transpose(),
            };
            p.velocity = v;
            p.affine = c;
            p.position += dt * v;
            p.deform_grad = inversion_guard(&((Matrix3::identity() + dt * c) * p.deform_grad));
            if Stencil::new(&p.position, grid).is_none() {
                return Err(out_of_grid(p));
            }
            Ok(())
        })
}
