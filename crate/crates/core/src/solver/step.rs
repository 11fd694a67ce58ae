use std::collections::HashSet;

use nalgebra::Vector3;

use super::grid::GridState;
use super::kernel::Stencil;
use super::material::MaterialParams;
use super::particle::{Particle, Role};
use super::transfer::{g2p_gather, grid_update, p2g_scatter, StepParams};
use crate::error::{Error, Result};
use crate::geometry::ParticleCloud;

/// Rigid object occupancy, rasterized onto grid nodes every step it moves.
#[derive(Debug, Clone)]
pub struct Obstacle {
    pub voxels: HashSet<[i64; 3]>,
    pub spacing: f64,
    pub velocity: Vector3<f64>,
    /// Accumulated rigid displacement since voxelization.
    pub displacement: Vector3<f64>,
}

impl Obstacle {
    /// Occupancy of a voxelized object; particles must sit on voxel centres.
    pub fn from_cloud(cloud: &ParticleCloud) -> Self {
        let s = cloud.spacing;
        let voxels = cloud
            .particles
            .iter()
            .map(|p| [0, 1, 2].map(|a| (p.position[a] / s).floor() as i64))
            .collect();
        Self {
            voxels,
            spacing: s,
            velocity: Vector3::zeros(),
            displacement: Vector3::zeros(),
        }
    }
}

/// Particles, grid and parameters for one running simulation.
#[derive(Debug)]
pub struct Simulation {
    pub particles: Vec<Particle>,
    pub grid: GridState,
    pub material: MaterialParams,
    pub params: StepParams,
    pub obstacle: Option<Obstacle>,
    pub steps_taken: usize,
}

impl Simulation {
    /// Checks the CFL bound and that every particle starts inside the grid margin.
    pub fn new(
        particles: Vec<Particle>,
        mut grid: GridState,
        material: MaterialParams,
        params: StepParams,
        obstacle: Option<Obstacle>,
    ) -> Result<Self> {
        params.check(grid.dx, &material)?;
        for (index, p) in particles.iter().enumerate() {
            if Stencil::new(&p.position, &grid).is_none() {
                return Err(Error::OutOfGrid {
                    index,
                    position: p.position.into(),
                });
            }
        }
        if let Some(ob) = &obstacle {
            grid.rasterize_obstacle(&ob.voxels, ob.spacing, ob.displacement);
            grid.obstacle_velocity = ob.velocity;
        }
        Ok(Self {
            particles,
            grid,
            material,
            params,
            obstacle,
            steps_taken: 0,
        })
    }

    /// One step: clear, scatter, grid update, gather.
    pub fn step(&mut self, hand_velocity: &Vector3<f64>) -> Result<()> {
        self.grid.clear();
        p2g_scatter(&self.particles, &mut self.grid, &self.params, &self.material)?;
        grid_update(&mut self.grid);
        let object_velocity = self
            .obstacle
            .as_ref()
            .map_or_else(Vector3::zeros, |o| o.velocity);
        g2p_gather(
            &mut self.particles,
            &self.grid,
            hand_velocity,
            &object_velocity,
            &self.params,
        )?;
        self.steps_taken += 1;
        if let Some(ob) = &mut self.obstacle {
            if ob.velocity != Vector3::zeros() {
                ob.displacement += self.params.dt * ob.velocity;
                self.grid
                    .rasterize_obstacle(&ob.voxels, ob.spacing, ob.displacement);
            }
        }
        for (index, p) in self.particles.iter().enumerate() {
            if p.role == Role::Sensor {
                if let Some(what) = p.non_finite_field() {
                    return Err(Error::NonFinite {
                        step: self.steps_taken,
                        index,
                        what,
                    });
                }
            }
        }
        Ok(())
    }
}

pub fn simulation_step(sim: &mut Simulation, hand_velocity: &Vector3<f64>) -> Result<()> {
    sim.step(hand_velocity)
}
