use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use eip_core::geometry::TriangleMesh;
use eip_core::tactile_io::{encode, TactileFrame};
use nalgebra::Point3;

fn eip(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_eip"))
        .args(args)
        .env_remove("EIP_THREADS")
        .output()
        .expect("spawn eip")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// Writes a small, fast scenario next to its mesh and returns the config path.
fn small_config(dir: &Path) -> PathBuf {
    let mesh = TriangleMesh::icosphere(Point3::new(0.5, 0.5, 0.5), 0.2, 2);
    std::fs::write(dir.join("ball.obj"), mesh.to_obj_string()).unwrap();
    let config = r#"
[object]
mesh = "ball.obj"
spacing = 0.03125

[sensor]
h = 8
w = 8
layers = 2
spacing = 0.03125

[sensor.pose]
translation = [0.390625, 0.390625, 0.734375]

[grid]
resolution = [32, 32, 32]
dx = 0.03125

[press]
dt = 0.0005
hand_velocity = [0.0, 0.0, -0.2]
direction = [0.0, 0.0, -1.0]
terminal_threshold = 1e-4
max_steps = 600
record_every = 10
"#;
    let path = dir.join("small.toml");
    std::fs::write(&path, config).unwrap();
    path
}

fn assert_one_line_error(o: &Output) {
    let e = stderr(o);
    let lines: Vec<&str> = e.lines().filter(|l| !l.trim().is_empty()).collect();
    assert_eq!(lines.len(), 1, "expected one line, got {e:?}");
    assert!(lines[0].starts_with("error["), "{e}");
}

#[test]
fn run_writes_outputs_and_reruns_identically() {
    let dir = tempfile::tempdir().unwrap();
    let config = small_config(dir.path());
    let out = dir.path().join("run");
    let o = eip(&["run", "--config", config.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));

    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["terminated_by"], "threshold");
    assert!(summary["final_chamfer"].as_f64().unwrap() >= 1e-4);
    let steps = summary["steps_run"].as_u64().unwrap();
    assert!(out.join(format!("frames/frame_{steps:06}.eipf")).exists());
    assert!(out.join(format!("frames/frame_{steps:06}.png")).exists());

    // Rerunning the effective config from another directory reproduces the series.
    let rerun = dir.path().join("rerun");
    let effective = out.join("effective.toml");
    let o = Command::new(env!("CARGO_BIN_EXE_eip"))
        .current_dir("/")
        .args(["run", "--config", effective.to_str().unwrap(), "--out", rerun.to_str().unwrap()])
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(
        std::fs::read_to_string(out.join("chamfer.csv")).unwrap(),
        std::fs::read_to_string(rerun.join("chamfer.csv")).unwrap()
    );
}

#[test]
fn overrides_reach_the_scenario() {
    let dir = tempfile::tempdir().unwrap();
    let config = small_config(dir.path());
    let out = dir.path().join("run");
    let o = eip(&[
        "run",
        "--config",
        config.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--set",
        "max_steps=3",
        "--set",
        "press.terminal_threshold=1.0",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["steps_run"], 3);
    assert_eq!(summary["terminated_by"], "max_steps");
}

#[test]
fn bad_poisson_ratio_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let config = small_config(dir.path());
    let o = eip(&[
        "run",
        "--config",
        config.to_str().unwrap(),
        "--out",
        dir.path().join("x").to_str().unwrap(),
        "--set",
        "material.poisson=0.6",
    ]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("Poisson ratio out of range"), "{}", stderr(&o));
    assert_one_line_error(&o);
}

#[test]
fn large_time_step_violates_cfl() {
    let dir = tempfile::tempdir().unwrap();
    let config = small_config(dir.path());
    let o = eip(&[
        "run",
        "--config",
        config.to_str().unwrap(),
        "--out",
        dir.path().join("x").to_str().unwrap(),
        "--set",
        "dt=1e-2",
    ]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("CFL bound"), "{}", stderr(&o));
    assert_one_line_error(&o);
}

#[test]
fn usage_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let config = small_config(dir.path());
    let c = config.to_str().unwrap();
    let out = dir.path().join("x");
    let o = eip(&["batch", "--config", c, "--out", out.to_str().unwrap(), "--directions", "0"]);
    assert_eq!(o.status.code(), Some(2));
    assert_one_line_error(&o);

    let o = eip(&[
        "sweep", "--config", c, "--out", out.to_str().unwrap(), "--parameter", "colour", "--values", "1",
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert_one_line_error(&o);

    let o = eip(&["run", "--config", c, "--out", out.to_str().unwrap(), "--set", "bogus=1"]);
    assert_eq!(o.status.code(), Some(2));
    assert_one_line_error(&o);

    assert!(eip(&["--help"]).status.success());
}

#[test]
fn missing_mesh_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let config = small_config(dir.path());
    std::fs::remove_file(dir.path().join("ball.obj")).unwrap();
    let o = eip(&["run", "--config", config.to_str().unwrap(), "--out", dir.path().join("x").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("ball.obj"));
    assert_one_line_error(&o);
}

#[test]
fn inspect_reports_sizes_and_zero_frames() {
    let dir = tempfile::tempdir().unwrap();
    let mut frame = TactileFrame::zeros(4, 4);
    frame.step = 7;
    let bytes = encode(&frame).unwrap();
    let zero = dir.path().join("zero.eipf");
    std::fs::write(&zero, &bytes).unwrap();
    let png = dir.path().join("zero.png");
    let o = eip(&["inspect", zero.to_str().unwrap(), "--png", png.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = String::from_utf8_lossy(&o.stdout);
    assert!(text.contains("H 4 W 4 step 7"), "{text}");
    assert!(text.contains("max 0e0"), "{text}");
    assert!(png.exists());

    let cut = dir.path().join("cut.eipf");
    std::fs::write(&cut, &bytes[..bytes.len() - 5]).unwrap();
    let o = eip(&["inspect", cut.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let e = stderr(&o);
    assert!(e.contains(&format!("expected {} bytes, got {}", bytes.len(), bytes.len() - 5)), "{e}");
    assert_one_line_error(&o);
}

#[test]
fn batch_writes_a_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let config = small_config(dir.path());
    let out = dir.path().join("batch");
    let o = eip(&[
        "--workers",
        "1",
        "batch",
        "--config",
        config.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--directions",
        "2",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(String::from_utf8_lossy(&o.stdout).starts_with("2 of 2 presses written"));
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["entries"].as_array().unwrap().len(), 2);
}

#[test]
fn depth_sweep_chamfer_grows_with_travel() {
    let dir = tempfile::tempdir().unwrap();
    let config = small_config(dir.path());
    let out = dir.path().join("depth");
    let o = eip(&[
        "sweep",
        "--config",
        config.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--parameter",
        "depth",
        "--values",
        "0.02,0.03,0.04",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = std::fs::read_to_string(out.join("sweep_depth.csv")).unwrap();
    let chamfer: Vec<f64> = csv.lines().skip(1).map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    assert_eq!(chamfer.len(), 3);
    assert!(chamfer.windows(2).all(|w| w[1] > w[0]), "{chamfer:?}");
    assert!(out.join("depth_02.eipf").exists());
}
