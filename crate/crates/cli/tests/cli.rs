use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn selfpower(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_selfpower"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", stdout(out)))
}

fn schema(name: &str) -> jsonschema::Validator {
    let path = Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("schemas")
        .join(name);
    let schema: Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    jsonschema::validator_for(&schema).unwrap()
}

fn assert_valid(schema_name: &str, value: &Value) {
    let v = schema(schema_name);
    let errors: Vec<String> = v.iter_errors(value).map(|e| e.to_string()).collect();
    assert!(errors.is_empty(), "{schema_name}: {errors:?}\n{value:#}");
}

fn num(v: &Value, key: &str) -> f64 {
    v[key]
        .as_f64()
        .unwrap_or_else(|| panic!("{key} missing in {v}"))
}

#[test]
fn open_loop_step_response() {
    let out = selfpower(&["step-response", "--preset", "mica2"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_valid("step_response.schema.json", &v);
    assert!((num(&v, "percent_overshoot") - 50.64).abs() < 1.0);
    assert!((num(&v, "dc_gain") - 0.8117).abs() < 1e-3);
}

#[test]
fn closed_loop_step_response() {
    let out = selfpower(&["step-response", "--preset", "mica2", "--closed-loop"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_valid("step_response.schema.json", &v);
    assert_eq!(v["loop"], "closed");
    assert!(num(&v, "rise_time_s") < 0.1);
    assert!(num(&v, "percent_overshoot") < 5.0);
}

#[test]
fn critically_damped_plant_has_no_overshoot() {
    let v = json(&selfpower(&["step-response", "--plant", "1,2,1"]));
    assert_eq!(num(&v, "percent_overshoot"), 0.0);
}

#[test]
fn unsettled_trace_exits_with_two() {
    let out = selfpower(&["step-response", "--t-end", "1"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("not settled"));
}

#[test]
fn step_response_csv_header() {
    let out = selfpower(&["step-response", "--format", "csv"]);
    assert!(stdout(&out).starts_with("t,input,output,doutput\n"));
}

#[test]
fn tune_from_ultimate_parameters() {
    let v = json(&selfpower(&["tune", "--ku", "33.727", "--tu", "3.90176"]));
    assert_valid("tuning.schema.json", &v);
    assert!((num(&v, "kp") - 20.2362).abs() < 5e-4);
    assert!((num(&v, "ki") - 10.3728).abs() < 5e-4);
    assert!((num(&v, "kd") - 9.8697).abs() < 5e-4);

    let v = json(&selfpower(&["tune", "--ku", "1", "--tu", "1"]));
    assert_eq!(
        (num(&v, "kp"), num(&v, "ki"), num(&v, "kd")),
        (0.6, 1.2, 0.075)
    );
}

#[test]
fn tune_search_matches_library_golden() {
    let out = selfpower(&["tune", "--search", "--sample-period", "0.05"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_valid("tuning.schema.json", &v);
    let golden_path =
        Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/golden/find_ultimate_h0.05.json");
    let golden: Value =
        serde_json::from_str(&std::fs::read_to_string(golden_path).unwrap()).unwrap();
    assert!((num(&v, "ku") - num(&golden, "ku")).abs() <= 1e-9 * num(&golden, "ku"));
    assert!((num(&v, "tu_s") - num(&golden, "tu_s")).abs() <= 1e-9 * num(&golden, "tu_s"));
}

#[test]
fn failed_search_exits_with_three() {
    let out = selfpower(&["tune", "--search", "--gain-hi", "1"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("sample period"));
}

#[test]
fn stability_exit_codes() {
    let out = selfpower(&[
        "stability",
        "--preset",
        "mica2",
        "--closed-loop",
        "--format",
        "json",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_valid("stability.schema.json", &v);
    assert_eq!(v["sign_changes"], 0);
    assert!(v["first_column"]
        .as_array()
        .unwrap()
        .iter()
        .all(|x| x.as_f64().unwrap() > 0.0));

    assert_eq!(
        selfpower(&["stability", "--poly", "1,1,1"]).status.code(),
        Some(0)
    );

    let out = selfpower(&["stability", "--poly", "1,1,-1,-1", "--format", "json"]);
    assert_eq!(out.status.code(), Some(4));
    let v = json(&out);
    assert_valid("stability.schema.json", &v);
    assert_eq!(v["sign_changes"], 1);

    let out = selfpower(&["stability", "--poly", "1,0,1", "--format", "json"]);
    assert_eq!(out.status.code(), Some(5));
    assert_valid("stability.schema.json", &json(&out));

    assert_eq!(
        selfpower(&["stability", "--poly", "0"]).status.code(),
        Some(1)
    );
}

#[test]
fn stability_text_report() {
    let out = selfpower(&["stability", "--closed-loop"]);
    let text = stdout(&out);
    assert!(text.contains("s^3 |"));
    assert!(text.contains("s^0 |"));
    assert!(text.contains("verdict: stable"));
}

#[test]
fn energy_breakdowns() {
    let v = json(&selfpower(&[
        "energy",
        "--preset",
        "mica2",
        "--distance",
        "50",
    ]));
    assert_valid("energy.schema.json", &v);
    assert!((num(&v, "total_J") - 0.09216).abs() < 5e-6);

    let v = json(&selfpower(&["energy", "--distance", "0"]));
    assert!((num(&v, "transmit_J") - 4.0e-5).abs() < 1e-15);
    assert!((num(&v, "receive_J") - 4.0e-5).abs() < 1e-15);
    assert_eq!(v["branch"], "free_space");

    let v = json(&selfpower(&["energy", "--distance", "87.706"]));
    assert_eq!(v["branch"], "multipath");

    assert_eq!(
        selfpower(&["energy", "--distance=-1"]).status.code(),
        Some(1)
    );
}

#[test]
fn simulate_controlled_and_passive() {
    let with_pid = json(&selfpower(&["simulate", "--preset", "mica2"]));
    assert_valid("summary.schema.json", &with_pid);
    assert_eq!(with_pid["periodic"], true);
    assert!(with_pid["cycles"].as_u64().unwrap() >= 3);

    let passive = json(&selfpower(&[
        "simulate",
        "--preset",
        "mica2",
        "--no-controller",
    ]));
    assert_valid("summary.schema.json", &passive);
    let fast = num(&with_pid, "first_recharge_s");
    if let Some(slow) = passive["first_recharge_s"].as_f64() {
        assert!(fast < slow);
    }
}

#[test]
fn simulate_zero_duration() {
    let out = selfpower(&["simulate", "--t-end", "0", "--format", "csv"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "t,mode,residual_J,harvested_J,consumed_J,z_m");
    assert_eq!(lines.len(), 2);
    assert!(lines[1].contains(",on,"));
}

#[test]
fn livelock_exits_with_six() {
    let out = selfpower(&["--preset", "mica2-alpha1", "simulate"]);
    assert_eq!(out.status.code(), Some(6));
}

#[test]
fn artifacts_are_written_and_deterministic() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for dir in [&a, &b] {
        let out = selfpower(&[
            "simulate",
            "--t-end",
            "60",
            "--svg",
            "--out",
            dir.path().to_str().unwrap(),
        ]);
        assert_eq!(out.status.code(), Some(0));
    }
    for name in ["node_trace.csv", "summary.json", "node_trace.svg"] {
        let x = std::fs::read(a.path().join(name)).unwrap();
        let y = std::fs::read(b.path().join(name)).unwrap();
        assert!(!x.is_empty());
        assert_eq!(x, y, "{name} differs between runs");
    }
    let svg = std::fs::read_to_string(a.path().join("node_trace.svg")).unwrap();
    assert!(svg.starts_with("<svg") && svg.contains("<polyline"));

    let out = selfpower(&[
        "step-response",
        "--svg",
        "--out",
        a.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    for name in [
        "step_response.csv",
        "step_response.json",
        "step_response.svg",
    ] {
        assert!(a.path().join(name).exists(), "{name}");
    }
}

#[test]
fn scenario_file_and_flag_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("scenario.json");
    std::fs::write(
        &path,
        r#"{"harvest": {"distance_m": 0}, "tuning": {"kp": 1, "ki": 0.5, "kd": 0.1}}"#,
    )
    .unwrap();
    let p = path.to_str().unwrap();

    let v = json(&selfpower(&["--scenario", p, "energy"]));
    assert_eq!(num(&v, "distance_m"), 0.0);
    let v = json(&selfpower(&["--scenario", p, "energy", "--distance", "10"]));
    assert_eq!(num(&v, "distance_m"), 10.0);

    let v = json(&selfpower(&["--scenario", p, "tune"]));
    assert_eq!(
        (num(&v, "kp"), num(&v, "ki"), num(&v, "kd")),
        (1.0, 0.5, 0.1)
    );
    assert!(v["ku"].is_null());

    std::fs::write(&path, r#"{"plant": {"mass_kg": -1}}"#).unwrap();
    assert_eq!(
        selfpower(&["--scenario", p, "energy"]).status.code(),
        Some(1)
    );
    assert_eq!(
        selfpower(&["--scenario", "/nonexistent.json", "energy"])
            .status
            .code(),
        Some(1)
    );
}

#[test]
fn show_preset_round_trips() {
    let out = selfpower(&["show-preset", "--preset", "mica2"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_valid("scenario.schema.json", &v);
    assert_eq!(v["energy"]["i_sens_mA"], 25.0);
    assert_eq!(v["plant"]["stiffness_N_per_m"], 1.232);

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("echo.json");
    std::fs::write(&path, stdout(&out)).unwrap();
    let again = selfpower(&[
        "show-preset",
        "--preset",
        "mica2-alpha1",
        "--scenario",
        path.to_str().unwrap(),
    ]);
    assert_eq!(stdout(&again), stdout(&out));

    assert_valid(
        "scenario.schema.json",
        &json(&selfpower(&["show-preset", "--preset", "mica2-alpha1"])),
    );
}

#[test]
fn usage_errors_exit_with_one() {
    assert_eq!(selfpower(&["bogus"]).status.code(), Some(1));
    assert_eq!(
        selfpower(&["--preset", "nope", "energy"]).status.code(),
        Some(1)
    );
    assert_eq!(
        selfpower(&["step-response", "--plant", "1,2"])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(selfpower(&["--help"]).status.code(), Some(0));
}
