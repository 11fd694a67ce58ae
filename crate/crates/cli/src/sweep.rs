//! One press per parameter value at a fixed hand travel.

use std::fmt::Write as _;
use std::path::Path;

use clap::ValueEnum;
use eip_core::scene::{run_press, PressScenario, Termination};
use eip_core::tactile_io::{export_frame, Formats};
use eip_core::MaterialParams;
use log::info;
use rayon::prelude::*;

use crate::error::CliError;
use crate::{create_dir, write};

/// Fraction of the frame maximum above which a pixel counts as deformed.
pub const AREA_FRACTION: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SweepParameter {
    /// Grid nodes per axis; the domain extent is kept.
    Grid,
    /// Young's modulus.
    Young,
    /// Hand travel distance.
    Depth,
}

impl SweepParameter {
    pub fn name(self) -> &'static str {
        match self {
            SweepParameter::Grid => "grid",
            SweepParameter::Young => "young",
            SweepParameter::Depth => "depth",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub value: f64,
    pub final_chamfer: f64,
    pub deformed_area: usize,
    pub max_displacement: f64,
    pub steps_run: usize,
}

/// Runs the sweep and writes `sweep_<parameter>.csv` plus one final frame
/// per value into `out`.
pub fn cmd_sweep(
    base: &PressScenario,
    parameter: SweepParameter,
    values: &[f64],
    travel: Option<f64>,
    out: &Path,
) -> Result<Vec<SweepRow>, CliError> {
    if values.is_empty() {
        return Err(CliError::usage("--values needs at least one value"));
    }
    let speed = base.hand_velocity().norm();
    if !(speed > 0.0) {
        return Err(CliError::config("sweeps need a nonzero hand velocity"));
    }
    let travel = match (parameter, travel) {
        (SweepParameter::Depth, _) => None,
        (_, Some(t)) => Some(t),
        (_, None) => Some(threshold_travel(base)?),
    };
    let scenarios = values
        .iter()
        .map(|&v| variant(base, parameter, v, travel.unwrap_or(v)))
        .collect::<Result<Vec<_>, _>>()?;
    create_dir(out)?;
    let rows = scenarios
        .par_iter()
        .enumerate()
        .map(|(i, s)| {
            let r = run_press(s)?;
            let f = r.final_frame();
            export_frame(f, out, &format!("{}_{i:02}", parameter.name()), Formats { png: true, csv: false })?;
            Ok(SweepRow {
                value: values[i],
                final_chamfer: r.final_chamfer(),
                deformed_area: f.deformed_area(AREA_FRACTION),
                max_displacement: f.max_magnitude(),
                steps_run: r.steps_run,
            })
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let mut csv = String::from("value,final_chamfer,deformed_area,max_displacement,steps_run\n");
    for r in &rows {
        let _ = writeln!(
            csv,
            "{},{:e},{},{:e},{}",
            r.value, r.final_chamfer, r.deformed_area, r.max_displacement, r.steps_run
        );
    }
    write(&out.join(format!("sweep_{}.csv", parameter.name())), &csv)?;
    Ok(rows)
}

/// Hand travel at which `base` reaches its threshold, or its full travel.
fn threshold_travel(base: &PressScenario) -> Result<f64, CliError> {
    let r = run_press(base)?;
    if r.terminated_by == Termination::MaxSteps {
        log::warn!("reference press never reached its threshold; using its full travel");
    }
    let t = r.hand_displacement.norm();
    info!("sweep travel {t:.4e} ({} steps)", r.steps_run);
    Ok(t)
}

fn variant(
    base: &PressScenario,
    parameter: SweepParameter,
    value: f64,
    travel: f64,
) -> Result<PressScenario, CliError> {
    let mut s = base.clone();
    match parameter {
        SweepParameter::Grid => {
            if !(value >= 4.0 && value.fract() == 0.0) {
                return Err(CliError::usage(format!("grid value {value} is not an integer >= 4")));
            }
            let n = value as usize;
            let extent = base.grid.dx * base.grid.resolution[0] as f64;
            s.grid.resolution = [n; 3];
            s.grid.dx = extent / n as f64;
        }
        SweepParameter::Young => {
            s.material = MaterialParams::with_density(value, base.material.poisson, base.material.density)?;
        }
        SweepParameter::Depth => {}
    }
    if !(travel > 0.0) {
        return Err(CliError::usage(format!("hand travel must be positive, got {travel}")));
    }
    let step = base.hand_velocity().norm() * base.press.dt;
    let steps = (travel / step).round().max(1.0) as usize;
    s.press.max_steps = steps;
    s.press.record_every = steps;
    s.press.terminal_threshold = f64::MAX;
    s.validate()?;
    Ok(s)
}
