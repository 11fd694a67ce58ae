//! `eip` command-line driver: single presses, direction batches, parameter
//! sweeps and frame inspection.

pub mod config;
pub mod error;
pub mod sweep;

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use eip_core::scene::{PressRun, PressScenario};
use eip_core::solver::Reduction;
use eip_core::tactile_io::{
    export_frame, fibonacci_directions, generate_dataset, read_frame, Formats,
};
use log::info;
use serde_json::json;

pub use config::load_scenario;
pub use error::CliError;
pub use sweep::{SweepParameter, SweepRow};

#[derive(Debug, Parser)]
#[command(name = "eip", version, about = "Elastic tactile sensor press simulator")]
pub struct Cli {
    /// Worker threads for batch and sweep fan-out and the solver.
    #[arg(long, global = true, env = "EIP_THREADS")]
    pub workers: Option<usize>,
    /// Force the bit-reproducible scatter reduction.
    #[arg(long, global = true)]
    pub deterministic: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one press and write its frames, chamfer series and summary.
    Run(ScenarioArgs),
    /// Press along Fibonacci-sphere directions and write a dataset manifest.
    Batch(BatchArgs),
    /// Repeat the press over parameter values and write a comparison CSV.
    Sweep(SweepArgs),
    /// Print statistics of an EIPF frame.
    Inspect(InspectArgs),
}

#[derive(Debug, Args)]
pub struct ScenarioArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Config override, `dotted.key=value` or a unique `leaf=value`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
}

#[derive(Debug, Args)]
pub struct BatchArgs {
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub directions: u64,
    /// Terminal thresholds per direction; defaults to the config value.
    #[arg(long, value_delimiter = ',')]
    pub thresholds: Vec<f64>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    #[arg(long, value_enum)]
    pub parameter: SweepParameter,
    #[arg(long, value_delimiter = ',', required = true)]
    pub values: Vec<f64>,
    /// Hand travel for grid and young sweeps; defaults to the travel at
    /// which the unmodified config reaches its threshold.
    #[arg(long)]
    pub travel: Option<f64>,
}

#[derive(Debug, Args)]
pub struct InspectArgs {
    pub frame: PathBuf,
    /// Re-export the magnitude image to this PNG.
    #[arg(long)]
    pub png: Option<PathBuf>,
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return 0;
            }
            let text = e.to_string();
            let first = text.lines().next().unwrap_or("invalid arguments");
            eprintln!("{}", CliError::usage(first.trim_start_matches("error: ")));
            return 2;
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("{e}");
            e.exit_code
        }
    }
}

pub fn execute(cli: &Cli) -> Result<(), CliError> {
    if let Some(n) = cli.workers {
        if n == 0 {
            return Err(CliError::usage("--workers must be at least 1"));
        }
        // Ignored if a pool already exists, e.g. when called twice in-process.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    match &cli.command {
        Command::Run(a) => cmd_run(&scenario(a, cli.deterministic)?, &a.out),
        Command::Batch(a) => {
            let s = scenario(&a.scenario, cli.deterministic)?;
            let thresholds = if a.thresholds.is_empty() {
                vec![s.press.terminal_threshold]
            } else {
                a.thresholds.clone()
            };
            cmd_batch(&s, a.directions as usize, &thresholds, &a.scenario.out)
        }
        Command::Sweep(a) => {
            let s = scenario(&a.scenario, cli.deterministic)?;
            sweep::cmd_sweep(&s, a.parameter, &a.values, a.travel, &a.scenario.out).map(|_| ())
        }
        Command::Inspect(a) => cmd_inspect(&a.frame, a.png.as_deref()),
    }
}

fn scenario(a: &ScenarioArgs, deterministic: bool) -> Result<PressScenario, CliError> {
    let mut s = load_scenario(&a.config, &a.set)?;
    if deterministic {
        s.press.reduction = Reduction::Deterministic;
    }
    Ok(s)
}

pub(crate) fn create_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(format!("cannot create {}: {e}", dir.display())))
}

pub(crate) fn write(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| CliError::io(format!("cannot write {}: {e}", path.display())))
}

pub fn cmd_run(s: &PressScenario, out: &Path) -> Result<(), CliError> {
    let started = Instant::now();
    create_dir(out)?;
    let result = PressRun::new(s)?.run()?;
    let frames_dir = out.join("frames");
    for f in &result.frames {
        export_frame(f, &frames_dir, &format!("frame_{:06}", f.step), Formats { png: true, csv: false })?;
    }
    for f in &result.settle_frames {
        export_frame(f, &frames_dir, &format!("settle_{:06}", f.step), Formats { png: true, csv: false })?;
    }
    let mut csv = String::from("step,chamfer\n");
    for (f, l) in result.frames.iter().zip(&result.chamfer_series) {
        csv.push_str(&format!("{},{:e}\n", f.step, l));
    }
    write(&out.join("chamfer.csv"), &csv)?;
    let effective = toml::to_string(s).map_err(|e| CliError::io(e.to_string()))?;
    write(&out.join("effective.toml"), &effective)?;
    let summary = json!({
        "steps_run": result.steps_run,
        "terminated_by": result.terminated_by,
        "final_chamfer": result.final_chamfer(),
        "frames": result.frames.len(),
        "settle_frames": result.settle_frames.len(),
        "hand_displacement": result.hand_displacement,
        "wall_time_s": started.elapsed().as_secs_f64(),
        "scenario_hash": s.hash(),
        "scenario": s,
    });
    write(&out.join("summary.json"), &serde_json::to_string_pretty(&summary)?)?;
    info!(
        "{} steps, {:?}, l = {:.3e}",
        result.steps_run,
        result.terminated_by,
        result.final_chamfer()
    );
    Ok(())
}

pub fn cmd_batch(
    s: &PressScenario,
    directions: usize,
    thresholds: &[f64],
    out: &Path,
) -> Result<(), CliError> {
    if directions == 0 {
        return Err(CliError::usage("--directions must be at least 1"));
    }
    let dirs = fibonacci_directions(directions);
    let manifest = generate_dataset(s, &dirs, thresholds, out)?;
    println!(
        "{} of {} presses written, digest {}",
        manifest.entries.len(),
        dirs.len() * thresholds.len(),
        manifest.digest()
    );
    Ok(())
}

pub fn cmd_inspect(path: &Path, png: Option<&Path>) -> Result<(), CliError> {
    let frame = read_frame(path)?;
    let mags = frame.magnitudes();
    let (min, max) = mags
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), &m| (lo.min(m), hi.max(m)));
    let mean = mags.iter().sum::<f64>() / mags.len().max(1) as f64;
    let min = if mags.is_empty() { 0.0 } else { min };
    println!("H {} W {} step {}", frame.h, frame.w, frame.step);
    println!("magnitude min {min:e} max {max:e} mean {mean:e}");
    if let Some(p) = png {
        let norm = if max > 0.0 { max } else { 1.0 };
        eip_core::tactile_io::export::write_png(p, frame.h, frame.w, &mags, norm)?;
        println!("wrote {}", p.display());
    }
    Ok(())
}
