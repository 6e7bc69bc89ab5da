use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use nlpid_core::io::read_csv;
use nlpid_core::sim::Trajectory;

fn examples() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("examples")
}

fn nlpid(args: &[&str], config: Option<&Path>, out: &Path) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_nlpid"));
    if let Some(c) = config {
        cmd.arg("--config").arg(c);
    }
    cmd.arg("--out").arg(out).args(args).output().unwrap()
}

fn write_config(dir: &Path, body: &str) -> PathBuf {
    let path = dir.join("cfg.json");
    fs::write(&path, body).unwrap();
    path
}

const SHORT: &str = r#"{
  "version": 1,
  "controller": { "a": 60.0, "b": 1100.0, "c": 3000.0, "d": 2.0, "e": -10.0 },
  "disturbance": { "kind": "constant", "amplitude": -100.0 },
  "simulation": { "dt": 1e-3, "duration": 1.0, "y0": -1.0 }
}"#;

#[test]
fn stability_report_for_paper_example() {
    let dir = tempfile::tempdir().unwrap();
    let out = nlpid(&["stability"], Some(&examples().join("paper_sec3_example.json")), dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_slice(&fs::read(dir.path().join("stability.json")).unwrap()).unwrap();
    assert_eq!(v["routh_hurwitz"]["stable"], true);
    assert!(v["circle_exact"]["stable"].is_boolean());
    assert!(v.get("circle_extended").is_none());
}

#[test]
fn missing_config_is_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = nlpid(&["stability"], None, dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn malformed_and_invalid_configs_are_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    for body in [
        "{ not json",
        &SHORT.replace("\"version\": 1", "\"version\": 9"),
        &SHORT.replace("\"a\": 60.0", "\"a\": -1.0"),
        &SHORT.replace("\"e\": -10.0", "\"e\": 1.0"),
        &SHORT.replace("\"dt\": 1e-3", "\"dt\": 0.0"),
        &SHORT.replace("\"kind\": \"constant\"", "\"kind\": \"chirp\""),
    ] {
        let cfg = write_config(dir.path(), body);
        let out = nlpid(&["simulate"], Some(&cfg), dir.path());
        assert_eq!(out.status.code(), Some(2), "{body}");
    }
}

#[test]
fn unreadable_config_and_output_are_exit_4() {
    let dir = tempfile::tempdir().unwrap();
    let out = nlpid(&["stability"], Some(&dir.path().join("absent.json")), dir.path());
    assert_eq!(out.status.code(), Some(4));

    let cfg = write_config(dir.path(), SHORT);
    let blocker = dir.path().join("file");
    fs::write(&blocker, "x").unwrap();
    let out = nlpid(&["simulate"], Some(&cfg), &blocker.join("sub"));
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn divergence_is_exit_3_with_partial_trajectory() {
    let dir = tempfile::tempdir().unwrap();
    // c > ab: the linear loop is unstable
    let body = SHORT
        .replace("\"c\": 3000.0, \"d\": 2.0, \"e\": -10.0", "\"c\": 1e6, \"d\": 0.0, \"e\": 0.0")
        .replace("\"duration\": 1.0", "\"duration\": 100.0");
    let cfg = write_config(dir.path(), &body);
    let out = nlpid(&["simulate"], Some(&cfg), dir.path());
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
    let partial = fs::read_to_string(dir.path().join("trajectory.csv")).unwrap();
    let traj = Trajectory::from_csv(&partial, 0.0).unwrap();
    assert!(!traj.is_empty() && *traj.t.last().unwrap() < 100.0);
}

#[test]
fn trajectory_csv_round_trips_bit_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SHORT);
    assert!(nlpid(&["simulate"], Some(&cfg), dir.path()).status.success());
    let text = fs::read_to_string(dir.path().join("trajectory.csv")).unwrap();
    let traj = Trajectory::from_csv(&text, 0.0).unwrap();
    assert_eq!(traj.len(), 1001);
    assert_eq!(traj.to_csv(), text);
    let metrics: serde_json::Value =
        serde_json::from_slice(&fs::read(dir.path().join("metrics.json")).unwrap()).unwrap();
    assert_eq!(metrics["peak_abs_error"], 1.0);
}

#[test]
fn sweeps_are_identical_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SHORT);
    let (one, many) = (dir.path().join("one"), dir.path().join("many"));
    for (jobs, out) in [("1", &one), ("4", &many)] {
        let o = nlpid(&["--jobs", jobs, "simulate", "--sweep", "e"], Some(&cfg), out);
        assert!(o.status.success());
    }
    for name in ["sim_pid.csv", "sim_d2_e-10.csv", "sim_d2_e-100.csv", "sim_d2_e-1000.csv", "sweep_e_metrics.json"] {
        assert_eq!(fs::read(one.join(name)).unwrap(), fs::read(many.join(name)).unwrap(), "{name}");
    }
}

#[test]
fn freq_outputs_share_the_analysis_grid() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = examples().join("paper_sec3_example.json");
    assert!(nlpid(&["freq"], Some(&cfg), dir.path()).status.success());
    assert!(nlpid(&["freq", "--wide"], Some(&cfg), dir.path()).status.success());
    let wide = read_csv(
        &fs::read_to_string(dir.path().join("freq_wide.csv")).unwrap(),
        &["omega", "magnitude_1c", "magnitude_2c", "magnitude_3c", "magnitude_4c"],
    )
    .unwrap();
    for (k, m) in ["1", "2", "3", "4"].iter().enumerate() {
        let narrow = read_csv(
            &fs::read_to_string(dir.path().join(format!("freq_{m}c.csv"))).unwrap(),
            &["omega", "magnitude"],
        )
        .unwrap();
        assert_eq!(narrow[0], wide[0]);
        assert_eq!(narrow[1], wide[k + 1]);
    }
    assert_eq!(wide[0].len(), 2000);
}

#[test]
fn step_rejects_degenerate_omega() {
    let dir = tempfile::tempdir().unwrap();
    let out = nlpid(&["step", "--lambda1", "10", "--omegas", "500,1000"], None, dir.path());
    assert_eq!(out.status.code(), Some(2));
    let out = nlpid(&["step", "--lambda1", "10", "--omegas", "500,2000"], None, dir.path());
    assert!(out.status.success());
    let peaks: serde_json::Value =
        serde_json::from_slice(&fs::read(dir.path().join("step_peaks.json")).unwrap()).unwrap();
    assert!(peaks[0]["peak"].as_f64().unwrap() > peaks[1]["peak"].as_f64().unwrap());
}

#[test]
fn benchmark_needs_an_actuator() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SHORT);
    assert_eq!(nlpid(&["benchmark"], Some(&cfg), dir.path()).status.code(), Some(2));
}

#[test]
fn benchmark_on_table_gains() {
    let dir = tempfile::tempdir().unwrap();
    let out = nlpid(&["benchmark"], Some(&examples().join("paper_table1.json")), dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_slice(&fs::read(dir.path().join("benchmark.json")).unwrap()).unwrap();
    let names: Vec<&str> = v["controllers"].as_array().unwrap().iter().map(|c| c["name"].as_str().unwrap()).collect();
    assert_eq!(names, ["PD", "PID", "nl-PID"]);
    assert_eq!(v["rank_by_final_error"].as_array().unwrap().len(), 3);
    let hurwitz: Vec<bool> = v["controllers"]
        .as_array()
        .unwrap()
        .iter()
        .map(|c| c["linearized_hurwitz"].as_bool().unwrap())
        .collect();
    // c(1 + d) = 10⁴ = ab puts the nl-PID linearization on the Routh boundary
    // before the actuator lag is added; the lag tips it over.
    assert_eq!(hurwitz, [true, true, false]);
    assert_eq!(v["rank_by_final_error"][0], "PID");
}
