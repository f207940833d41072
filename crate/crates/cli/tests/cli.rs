//! Subcommand behavior through the real binary: file round trips,
//! deterministic re-runs, exit codes and diagnostics.

use std::path::{Path, PathBuf};
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_panoptrack"))
}

struct TempDir(PathBuf);

impl TempDir {
    fn new(tag: &str) -> Self {
        let dir = std::env::temp_dir().join(format!("panoptrack-cli-{tag}-{}", std::process::id()));
        let _ = std::fs::remove_dir_all(&dir);
        std::fs::create_dir_all(&dir).unwrap();
        Self(dir)
    }

    fn path(&self, name: &str) -> PathBuf {
        self.0.join(name)
    }
}

impl Drop for TempDir {
    fn drop(&mut self) {
        let _ = std::fs::remove_dir_all(&self.0);
    }
}

fn run_ok(cmd: &mut Command) {
    let out = cmd.output().unwrap();
    assert!(
        out.status.success(),
        "command failed\nstdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

fn simulate(dir: &Path, scenario: &str) {
    run_ok(
        bin()
            .args(["simulate", "--scenario"])
            .arg(format!("builtin:{scenario}"))
            .arg("--out")
            .arg(dir),
    );
}

#[test]
fn simulate_track_eval_round_trip() {
    let tmp = TempDir::new("roundtrip");
    let sim = tmp.path("sim");
    simulate(&sim, "overlap_duplicate");
    for f in ["detections.jsonl", "poses.jsonl", "gt.jsonl"] {
        assert!(sim.join(f).exists(), "{f} missing");
    }

    let result = tmp.path("result.jsonl");
    run_ok(
        bin()
            .arg("track")
            .arg("--detections")
            .arg(sim.join("detections.jsonl"))
            .arg("--poses")
            .arg(sim.join("poses.jsonl"))
            .args(["--pipeline", "merge-track", "--motion", "none"])
            .arg("--out")
            .arg(&result),
    );

    let report = tmp.path("report.json");
    let curves = tmp.path("curves.csv");
    run_ok(
        bin()
            .arg("eval")
            .arg("--result")
            .arg(&result)
            .arg("--gt")
            .arg(sim.join("gt.jsonl"))
            .args(["--matcher", "bev:2.0", "--n-points", "40"])
            .arg("--out")
            .arg(&report)
            .arg("--curves")
            .arg(&curves),
    );

    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert!(json["mean"]["amota"].as_f64().unwrap() > 0.9);
    let curve_text = std::fs::read_to_string(&curves).unwrap();
    assert!(curve_text.starts_with("category,target_recall,threshold,"));
    // 39 recall points for one category plus the header
    assert_eq!(curve_text.lines().count(), 1 + 39);
}

#[test]
fn single_and_merge_pipelines_agree_on_single_camera_input() {
    let tmp = TempDir::new("degenerate");
    let sim = tmp.path("sim");
    simulate(&sim, "occlusion_gap");
    // occlusion_gap's object stays inside camera 0's wedge: drop every
    // other camera's detections to make the input single-camera.
    let dets = std::fs::read_to_string(sim.join("detections.jsonl")).unwrap();
    let filtered: String = dets
        .lines()
        .filter(|l| {
            serde_json::from_str::<serde_json::Value>(l).unwrap()["camera_id"]
                .as_u64()
                .unwrap()
                == 0
        })
        .map(|l| format!("{l}\n"))
        .collect();
    std::fs::write(sim.join("detections.jsonl"), filtered).unwrap();

    let out_single = tmp.path("single.jsonl");
    let out_merge = tmp.path("merge.jsonl");
    for (pipeline, out) in [("single", &out_single), ("merge-track", &out_merge)] {
        run_ok(
            bin()
                .arg("track")
                .arg("--detections")
                .arg(sim.join("detections.jsonl"))
                .arg("--poses")
                .arg(sim.join("poses.jsonl"))
                .args(["--pipeline", pipeline, "--motion", "none"])
                .arg("--out")
                .arg(out),
        );
    }
    assert_eq!(
        std::fs::read(&out_single).unwrap(),
        std::fs::read(&out_merge).unwrap(),
        "single-camera input must make both pipelines identical"
    );
}

#[test]
fn reruns_are_byte_identical() {
    let tmp = TempDir::new("determinism");
    let sim_a = tmp.path("a");
    let sim_b = tmp.path("b");
    simulate(&sim_a, "boundary_crossing");
    simulate(&sim_b, "boundary_crossing");
    for f in ["detections.jsonl", "poses.jsonl", "gt.jsonl"] {
        assert_eq!(
            std::fs::read(sim_a.join(f)).unwrap(),
            std::fs::read(sim_b.join(f)).unwrap(),
            "{f} differs between runs"
        );
    }

    let res_a = tmp.path("ra.jsonl");
    let res_b = tmp.path("rb.jsonl");
    for out in [&res_a, &res_b] {
        run_ok(
            bin()
                .arg("track")
                .arg("--detections")
                .arg(sim_a.join("detections.jsonl"))
                .arg("--poses")
                .arg(sim_a.join("poses.jsonl"))
                .args(["--pipeline", "merge-track", "--motion", "kf3d"])
                .arg("--out")
                .arg(out),
        );
    }
    assert_eq!(
        std::fs::read(&res_a).unwrap(),
        std::fs::read(&res_b).unwrap()
    );
}

#[test]
fn seed_env_var_changes_output() {
    let tmp = TempDir::new("seedenv");
    let sim_a = tmp.path("a");
    let sim_b = tmp.path("b");
    run_ok(
        bin()
            .args(["simulate", "--scenario", "builtin:crowd", "--out"])
            .arg(&sim_a)
            .env("PANOPTRACK_SEED", "777"),
    );
    run_ok(
        bin()
            .args(["simulate", "--scenario", "builtin:crowd", "--out"])
            .arg(&sim_b)
            .env("PANOPTRACK_SEED", "778"),
    );
    assert_ne!(
        std::fs::read(sim_a.join("detections.jsonl")).unwrap(),
        std::fs::read(sim_b.join("detections.jsonl")).unwrap()
    );
    // explicit flag wins over the environment
    let sim_c = tmp.path("c");
    run_ok(
        bin()
            .args([
                "simulate",
                "--scenario",
                "builtin:crowd",
                "--seed",
                "777",
                "--out",
            ])
            .arg(&sim_c)
            .env("PANOPTRACK_SEED", "9999"),
    );
    assert_eq!(
        std::fs::read(sim_a.join("detections.jsonl")).unwrap(),
        std::fs::read(sim_c.join("detections.jsonl")).unwrap()
    );
}

#[test]
fn malformed_detections_exit_code_2_with_line_number() {
    let tmp = TempDir::new("malformed");
    let sim = tmp.path("sim");
    simulate(&sim, "occlusion_gap");
    // corrupt line 3
    let dets = std::fs::read_to_string(sim.join("detections.jsonl")).unwrap();
    let mut lines: Vec<&str> = dets.lines().collect();
    lines[2] = "{\"frame\": not json";
    std::fs::write(sim.join("detections.jsonl"), lines.join("\n")).unwrap();

    let out = bin()
        .arg("track")
        .arg("--detections")
        .arg(sim.join("detections.jsonl"))
        .arg("--poses")
        .arg(sim.join("poses.jsonl"))
        .arg("--out")
        .arg(tmp.path("r.jsonl"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains(":3:"), "missing line number: {stderr}");
    assert!(
        stderr.contains("detections.jsonl"),
        "missing path: {stderr}"
    );
}

#[test]
fn semantically_invalid_input_also_exits_2() {
    let tmp = TempDir::new("badscore");
    let sim = tmp.path("sim");
    simulate(&sim, "occlusion_gap");
    let dets = std::fs::read_to_string(sim.join("detections.jsonl")).unwrap();
    let mut lines: Vec<String> = dets.lines().map(String::from).collect();
    let mut v: serde_json::Value = serde_json::from_str(&lines[0]).unwrap();
    v["score"] = serde_json::json!(3.5);
    lines[0] = serde_json::to_string(&v).unwrap();
    std::fs::write(sim.join("detections.jsonl"), lines.join("\n")).unwrap();

    let out = bin()
        .arg("track")
        .arg("--detections")
        .arg(sim.join("detections.jsonl"))
        .arg("--poses")
        .arg(sim.join("poses.jsonl"))
        .arg("--out")
        .arg(tmp.path("r.jsonl"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains(":1:"));
}

#[test]
fn unknown_builtin_scenario_exits_2() {
    let tmp = TempDir::new("nobuiltin");
    let out = bin()
        .args(["simulate", "--scenario", "builtin:nope", "--out"])
        .arg(tmp.path("sim"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("boundary_crossing"));
}

#[test]
fn config_with_unknown_key_exits_2() {
    let tmp = TempDir::new("badconfig");
    let sim = tmp.path("sim");
    simulate(&sim, "occlusion_gap");
    std::fs::write(tmp.path("bad.toml"), "[tracker]\nbogus_knob = 1\n").unwrap();
    let out = bin()
        .arg("track")
        .arg("--detections")
        .arg(sim.join("detections.jsonl"))
        .arg("--poses")
        .arg(sim.join("poses.jsonl"))
        .arg("--config")
        .arg(tmp.path("bad.toml"))
        .arg("--out")
        .arg(tmp.path("r.jsonl"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn scenario_and_rig_toml_files_load() {
    let tmp = TempDir::new("tomlfiles");
    std::fs::write(
        tmp.path("rig.toml"),
        r#"
[[cameras]]
yaw = 0.0
fov_half_angle = 0.7853981633974483
max_range = 30.0

[[cameras]]
yaw = 1.5707963267948966
fov_half_angle = 0.7853981633974483
max_range = 30.0
"#,
    )
    .unwrap();
    std::fs::write(
        tmp.path("scenario.toml"),
        r#"
frames = 10
frame_rate = 2.0
seed = 5
embedding_sigma = 0.05

[noise]
center_sigma0 = 0.05

[[objects]]
category = "car"
dims = [4.0, 2.0, 1.6]

[objects.path]
kind = "constant_velocity"
start = [10.0, -2.0, 0.0]
velocity = [0.0, 0.4, 0.0]
"#,
    )
    .unwrap();
    let sim = tmp.path("sim");
    run_ok(
        bin()
            .arg("simulate")
            .arg("--scenario")
            .arg(tmp.path("scenario.toml"))
            .arg("--rig")
            .arg(tmp.path("rig.toml"))
            .arg("--out")
            .arg(&sim),
    );
    let gt = std::fs::read_to_string(sim.join("gt.jsonl")).unwrap();
    assert_eq!(gt.lines().count(), 10);
}

#[test]
fn eval_accepts_iou3d_matcher() {
    let tmp = TempDir::new("ioumatcher");
    let sim = tmp.path("sim");
    simulate(&sim, "occlusion_gap");
    let result = tmp.path("result.jsonl");
    run_ok(
        bin()
            .arg("track")
            .arg("--detections")
            .arg(sim.join("detections.jsonl"))
            .arg("--poses")
            .arg(sim.join("poses.jsonl"))
            .args(["--pipeline", "merge-track"])
            .arg("--out")
            .arg(&result),
    );
    for matcher in ["iou3d:0.3", "iou3d:0.5"] {
        run_ok(
            bin()
                .arg("eval")
                .arg("--result")
                .arg(&result)
                .arg("--gt")
                .arg(sim.join("gt.jsonl"))
                .args(["--matcher", matcher])
                .arg("--out")
                .arg(tmp.path("report.json")),
        );
    }
}
