use std::collections::HashSet;

use log::{debug, info};
use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use super::scenario::PressScenario;
use super::{alpha_field, chamfer_translation_free, terminal_check};
use crate::error::{Error, Result};
use crate::geometry::{load_mesh, make_sensor_slab, voxelize, SensorLayout, TriangleMesh};
use crate::solver::{GridState, Obstacle, Simulation};
use crate::tactile_io::{contact_positions, extract_tactile_frame, TactileFrame};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Threshold,
    MaxSteps,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PressResult {
    /// One frame per recorded press step, always including the last one.
    pub frames: Vec<TactileFrame>,
    /// `l` for each entry of `frames`.
    pub chamfer_series: Vec<f64>,
    pub terminated_by: Termination,
    pub steps_run: usize,
    /// Frames recorded during zero-velocity relaxation.
    pub settle_frames: Vec<TactileFrame>,
    /// Rigid travel of the hand, `steps_run * dt * v_r`.
    pub hand_displacement: Vector3<f64>,
}

impl PressResult {
    pub fn final_frame(&self) -> &TactileFrame {
        self.frames.last().expect("a press records at least one frame")
    }

    pub fn final_chamfer(&self) -> f64 {
        self.chamfer_series.last().copied().unwrap_or(0.0)
    }
}

/// An initialized press: sensor particles first, then object particles.
#[derive(Debug)]
pub struct PressRun {
    pub sim: Simulation,
    pub layout: SensorLayout,
    /// Contact-layer rest positions, row-major.
    pub rest: Vec<Vector3<f64>>,
    scenario: PressScenario,
}

impl PressRun {
    /// Loads the object mesh named by the scenario, if any.
    pub fn new(scenario: &PressScenario) -> Result<Self> {
        let mesh = match &scenario.object {
            Some(o) => Some(load_mesh(&o.mesh)?),
            None => None,
        };
        Self::with_mesh(scenario, mesh.as_ref())
    }

    /// Uses `mesh` in place of the scenario's mesh path.
    pub fn with_mesh(scenario: &PressScenario, mesh: Option<&TriangleMesh>) -> Result<Self> {
        scenario.validate()?;
        let s = &scenario.sensor;
        let material = scenario.material;
        let (cloud, layout) = make_sensor_slab(s.h, s.w, s.layers, s.spacing, &s.pose.isometry())?;
        let mut particles = cloud.with_density(material.density).particles;
        // The slab is already travelling with the hand when the press starts.
        for (p, a) in particles.iter_mut().zip(alpha_field(&layout)) {
            p.alpha = a;
            p.velocity = scenario.hand_velocity();
        }
        let rest = contact_positions(&particles, &layout);

        let mut obstacle = None;
        if let (Some(spec), Some(mesh)) = (&scenario.object, mesh) {
            let object = voxelize(mesh, spec.spacing)?.with_density(material.density);
            let mut ob = Obstacle::from_cloud(&object);
            ob.velocity = Vector3::from(spec.velocity);
            check_clear(&particles, &ob.voxels, spec.spacing)?;
            debug!("object carved into {} particles", object.particles.len());
            particles.extend(object.particles);
            obstacle = Some(ob);
        }

        let g = &scenario.grid;
        let grid = GridState::new(g.resolution, g.dx, Vector3::from(g.origin))?;
        let sim = Simulation::new(particles, grid, material, scenario.step_params(), obstacle)?;
        Ok(Self {
            sim,
            layout,
            rest,
            scenario: scenario.clone(),
        })
    }

    pub fn scenario(&self) -> &PressScenario {
        &self.scenario
    }

    pub fn frame(&self) -> Result<TactileFrame> {
        extract_tactile_frame(
            &self.sim.particles,
            &self.layout,
            &self.rest,
            self.sim.steps_taken,
            self.scenario.direction(),
        )
    }

    pub fn chamfer(&self) -> Result<f64> {
        chamfer_translation_free(&contact_positions(&self.sim.particles, &self.layout), &self.rest)
    }

    /// Presses until the terminal check fires or `max_steps`, then relaxes.
    pub fn run(mut self) -> Result<PressResult> {
        let press = self.scenario.press.clone();
        let hand = self.scenario.hand_velocity();
        let mut frames = Vec::new();
        let mut chamfer_series = Vec::new();
        let mut terminated_by = Termination::MaxSteps;
        let mut steps_run = 0;
        for n in 1..=press.max_steps {
            self.sim.step(&hand)?;
            steps_run = n;
            let l = self.chamfer()?;
            let terminal = terminal_check(l, &self.scenario);
            if n % press.record_every == 0 || terminal || n == press.max_steps {
                frames.push(self.frame()?);
                chamfer_series.push(l);
            }
            if terminal {
                terminated_by = Termination::Threshold;
                info!("terminal chamfer {l:.3e} reached at step {n}");
                break;
            }
        }
        let mut settle_frames = Vec::new();
        for k in 1..=press.settle_steps {
            self.sim.step(&Vector3::zeros())?;
            if k % press.record_every == 0 || k == press.settle_steps {
                settle_frames.push(self.frame()?);
            }
        }
        Ok(PressResult {
            frames,
            chamfer_series,
            terminated_by,
            steps_run,
            settle_frames,
            hand_displacement: hand * (press.dt * steps_run as f64),
        })
    }
}

pub fn run_press(scenario: &PressScenario) -> Result<PressResult> {
    PressRun::new(scenario)?.run()
}

fn check_clear(
    particles: &[crate::solver::Particle],
    voxels: &HashSet<[i64; 3]>,
    spacing: f64,
) -> Result<()> {
    for (i, p) in particles.iter().enumerate() {
        let key = [0, 1, 2].map(|a| (p.position[a] / spacing).floor() as i64);
        if voxels.contains(&key) {
            return Err(Error::InvalidParameter(format!(
                "sensor particle {i} starts inside the object at {:?}",
                <[f64; 3]>::from(p.position)
            )));
        }
    }
    Ok(())
}
