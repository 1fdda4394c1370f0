//! End-to-end checks of the command-line interface: exit codes, the JSONL
//! trace, and the summary.csv schema.

use std::path::{Path, PathBuf};
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_leashsim"))
}

fn city_config() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios/city.json")
}

fn temp_dir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("leashsim-cli-{tag}-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

#[test]
fn simulate_writes_trace_and_succeeds() {
    let dir = temp_dir("simulate");
    let trace = dir.join("trace.jsonl");
    let out = bin()
        .args(["simulate", "--config"])
        .arg(city_config())
        .args(["--seed", "4", "--trace"])
        .arg(&trace)
        .arg("--quiet")
        .output()
        .unwrap();
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));

    let text = std::fs::read_to_string(&trace).unwrap();
    let first = text.lines().next().expect("trace has frames");
    let frame: serde_json::Value = serde_json::from_str(first).unwrap();
    for key in [
        "step",
        "physical_user",
        "virtual_user",
        "robot",
        "dog",
        "companion_mode",
        "reset_active",
        "rc_error",
        "leash_tension",
    ] {
        assert!(frame.get(key).is_some(), "trace frame missing {key}");
    }
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn missing_config_exits_with_code_1() {
    let out = bin()
        .args(["simulate", "--config", "/nonexistent/nope.json", "--seed", "1"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn invalid_config_exits_with_code_1() {
    let dir = temp_dir("invalid");
    let bad = dir.join("bad.json");
    std::fs::write(&bad, r#"{ "condition": "guided" }"#).unwrap();
    let out = bin()
        .args(["simulate", "--config"])
        .arg(&bad)
        .args(["--seed", "1"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn fault_exits_with_code_2() {
    // Degenerate trigger distance plus 1 Hz stepping lets the user stride
    // across the boundary band and escape.
    let dir = temp_dir("fault");
    let mut scenario = leashsim::scenario::Scenario::default_city();
    scenario.condition = leashsim::scenario::Condition::Unguided;
    scenario.redirection.reset.trigger_distance = 1e-6;
    scenario.redirection.guidance_distance = 0.0;
    scenario.run.hz = 1.0;
    scenario.start_physical = Some(leashsim::world::Pose::new(
        leashsim::math::Vec2::new(3.5, 0.0),
        0.0,
    ));
    let path = dir.join("fault.json");
    std::fs::write(&path, serde_json::to_string(&scenario).unwrap()).unwrap();
    let out = bin()
        .args(["simulate", "--config"])
        .arg(&path)
        .args(["--seed", "1", "--quiet"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn batch_writes_summary_csv_with_expected_columns() {
    let dir = temp_dir("batch");
    let out = bin()
        .args(["batch", "--config"])
        .arg(city_config())
        .args(["--runs", "2", "--conditions", "guided,unguided", "--seed", "5", "--out"])
        .arg(&dir)
        .arg("--quiet")
        .output()
        .unwrap();
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));

    let csv = std::fs::read_to_string(dir.join("summary.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "seed,condition,bips,completed,completion_time,mean_rc_error,max_rc_error,physical_path_length,virtual_path_length"
    );
    // 2 runs x 2 conditions, paired seeds 5 and 6.
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 4);
    assert!(rows[0].starts_with("5,guided,"));
    assert!(rows[1].starts_with("6,guided,"));
    assert!(rows[2].starts_with("5,unguided,"));
    assert!(rows[3].starts_with("6,unguided,"));
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn hz_override_changes_the_step_count() {
    let dir = temp_dir("hz");
    let trace45 = dir.join("t45.jsonl");
    let trace90 = dir.join("t90.jsonl");
    for (hz, path) in [("45", &trace45), ("90", &trace90)] {
        let out = bin()
            .args(["simulate", "--config"])
            .arg(city_config())
            .args(["--seed", "4", "--hz", hz, "--trace"])
            .arg(path)
            .arg("--quiet")
            .output()
            .unwrap();
        assert!(out.status.success());
    }
    let n45 = std::fs::read_to_string(&trace45).unwrap().lines().count();
    let n90 = std::fs::read_to_string(&trace90).unwrap().lines().count();
    assert!(n45 < n90, "coarser stepping should need fewer frames");
    let _ = std::fs::remove_dir_all(&dir);
}
