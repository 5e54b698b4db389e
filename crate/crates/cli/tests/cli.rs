//! The `modal-sim` binary: subcommands, outputs and exit codes.

use std::fmt::Write as _;
use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_modal-sim"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn write_scenario(dir: &Path, name: &str, body: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn help_and_version() {
    let help = run(&["--help"]);
    assert_eq!(help.status.code(), Some(0));
    let text = stdout(&help);
    for sub in ["calibrate", "run", "serve"] {
        assert!(text.contains(sub), "{text}");
    }
    let version = run(&["--version"]);
    assert_eq!(version.status.code(), Some(0));
    assert!(stdout(&version).starts_with("modal-sim "));
}

#[test]
fn presets_are_listed_and_runnable_by_name() {
    let list = stdout(&run(&["presets"]));
    for name in ["bike_safety", "bike_safety_no_reset", "car_comfort", "bus_bias", "bus_bias_unbiased", "default"] {
        assert!(list.lines().any(|l| l == name), "{list}");
    }
    let out = run(&["run", "--scenario", "default"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout(&out).lines().count(), 401);
}

#[test]
fn three_ticks_give_four_lines_that_conserve_shares() {
    let dir = tempfile::tempdir().unwrap();
    let s = write_scenario(dir.path(), "short.json", r#"{"config": {"ticks": 3, "seeds": [5]}, "events": []}"#);
    let out = run(&["run", "--scenario", &s]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 4);
    assert_eq!(
        lines[0],
        "tick,share_car,share_bike,share_bus,share_walk,sat_car,sat_bike,sat_bus,sat_walk,\
         n_by_habit,n_habit_contrary,n_biased,n_constrained"
    );
    for (i, line) in lines[1..].iter().enumerate() {
        let cells: Vec<&str> = line.split(',').collect();
        assert_eq!(cells[0], (i + 1).to_string());
        let total: f64 = cells[1..5].iter().map(|c| c.parse::<f64>().unwrap()).sum();
        assert!((total - 1.0).abs() < 1e-9);
    }
}

#[test]
fn zero_ticks_give_a_header_only() {
    let dir = tempfile::tempdir().unwrap();
    let s = write_scenario(dir.path(), "empty.json", r#"{"config": {"ticks": 0, "seeds": [1]}, "events": []}"#);
    let out = run(&["run", "--scenario", &s]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout(&out).lines().count(), 1);
}

#[test]
fn per_seed_files_aggregate_and_repeat_identically() {
    let dir = tempfile::tempdir().unwrap();
    let s = write_scenario(
        dir.path(),
        "ramp.json",
        r#"{"config": {"ticks": 30, "seeds": [1, 2, 3]},
            "events": [{"at": 0, "every": 10, "count": 3, "action": "adjust_value", "mode": "bike", "criterion": "safety", "delta": 5}]}"#,
    );
    let out_a = dir.path().join("a");
    let out_b = dir.path().join("b");
    for out in [&out_a, &out_b] {
        let o = run(&["run", "--scenario", &s, "--out", out.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    }
    for name in ["ramp_seed1.csv", "ramp_seed2.csv", "ramp_seed3.csv", "ramp_aggregate.csv"] {
        let a = std::fs::read(out_a.join(name)).unwrap();
        let b = std::fs::read(out_b.join(name)).unwrap();
        assert_eq!(a, b, "{name} differs between runs");
    }

    // The aggregate mean equals the mean recomputed from the per-seed files.
    let share_car = |name: &str| -> Vec<f64> {
        std::fs::read_to_string(out_a.join(name))
            .unwrap()
            .lines()
            .skip(1)
            .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
            .collect()
    };
    let seeds: Vec<Vec<f64>> = (1..=3).map(|s| share_car(&format!("ramp_seed{s}.csv"))).collect();
    let aggregate = std::fs::read_to_string(out_a.join("ramp_aggregate.csv")).unwrap();
    let header: Vec<&str> = aggregate.lines().next().unwrap().split(',').collect();
    assert_eq!(&header[..3], ["tick", "share_car_mean", "share_car_sd"]);
    for (t, line) in aggregate.lines().skip(1).enumerate() {
        let mean: f64 = line.split(',').nth(1).unwrap().parse().unwrap();
        let expect = seeds.iter().map(|s| s[t]).sum::<f64>() / 3.0;
        assert!((mean - expect).abs() < 1e-12);
    }
}

#[test]
fn json_output_mirrors_csv_fields() {
    let dir = tempfile::tempdir().unwrap();
    let s = write_scenario(dir.path(), "j.json", r#"{"config": {"ticks": 2, "seeds": [4]}, "events": []}"#);
    let out = run(&["run", "--scenario", &s, "--format", "json"]);
    assert_eq!(out.status.code(), Some(0));
    let rows: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    let rows = rows.as_array().unwrap();
    assert_eq!(rows.len(), 2);
    for key in ["tick", "share_car", "sat_walk", "n_by_habit", "n_habit_contrary", "n_biased", "n_constrained"] {
        assert!(rows[0].get(key).is_some(), "missing {key}");
    }
}

#[test]
fn validation_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad = [
        r#"{"config": {"ticks": 3, "seeds": [1]}, "events": [{"at": -2, "action": "reset_habits"}]}"#,
        r#"{"config": {"ticks": 3, "seeds": [1], "speed": 2}, "events": []}"#,
        r#"{"config": {"ticks": 3, "seeds": [1]}, "events": [{"at": 1, "action": "teleport"}]}"#,
        "not json",
    ];
    for (i, body) in bad.iter().enumerate() {
        let s = write_scenario(dir.path(), &format!("bad{i}.json"), body);
        let out = run(&["run", "--scenario", &s]);
        assert_eq!(out.status.code(), Some(2), "{body}");
        assert!(String::from_utf8_lossy(&out.stderr).contains("error"));
    }
    assert_eq!(run(&["run", "--scenario", "no_such_preset"]).status.code(), Some(2));
    assert_eq!(run(&["bogus"]).status.code(), Some(2));
    let calib = write_scenario(dir.path(), "calib.json", r#"{"national_shares": {}}"#);
    assert_eq!(run(&["run", "--scenario", "default", "--calibration", &calib]).status.code(), Some(2));
}

#[test]
fn runtime_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing.csv");
    let out = run(&["calibrate", "--survey", missing.to_str().unwrap(), "--out", "x.json"]);
    assert_eq!(out.status.code(), Some(1));
    let blocker = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
    let port = blocker.local_addr().unwrap().port().to_string();
    let out = run(&["serve", "--port", &port]);
    assert_eq!(out.status.code(), Some(1), "{}", String::from_utf8_lossy(&out.stderr));
}

fn survey_csv() -> String {
    let modes = ["car", "bike", "bus", "walk"];
    let criteria = ["ecology", "comfort", "price", "practicality", "time", "safety"];
    let mut header = vec!["usual_mode".to_string(), "distance_km".to_string()];
    header.extend(criteria.iter().map(|c| format!("prio_{c}")));
    for m in modes {
        header.extend(criteria.iter().map(|c| format!("eval_{m}_{c}")));
    }
    let mut text = header.join(",");
    for i in 0..40 {
        let own = modes[i % 4];
        let distance = [18.0, 5.0, 9.0, 1.2][i % 4] + (i / 4) as f64 * 0.1;
        write!(text, "\n{own},{distance}").unwrap();
        for c in 0..6 {
            write!(text, ",{}", 4 + (i + c) % 6).unwrap();
        }
        for m in modes {
            for c in 0..6 {
                write!(text, ",{}", if m == own { 8 } else { 3 + (i + c) % 5 }).unwrap();
            }
        }
    }
    text
}

#[test]
fn calibrate_then_run_with_the_result() {
    let dir = tempfile::tempdir().unwrap();
    let survey = dir.path().join("survey.csv");
    std::fs::write(&survey, survey_csv()).unwrap();
    let calib = dir.path().join("calib.json");
    let out = run(&[
        "calibrate",
        "--survey",
        survey.to_str().unwrap(),
        "--caps",
        "walk=10,bike=55,car=195,bus=100",
        "--out",
        calib.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&calib).unwrap()).unwrap();
    for key in ["national_shares", "mean_priorities", "distance_stats", "access_prob", "prototypes", "objective_layout"] {
        assert!(json.get(key).is_some(), "missing {key}");
    }
    assert_eq!(json["provenance"]["row_counts"]["parsed"], 40);

    let dir_s = tempfile::tempdir().unwrap();
    let s = write_scenario(dir_s.path(), "s.json", r#"{"config": {"ticks": 5, "seeds": [1]}, "events": []}"#);
    let out = run(&["run", "--scenario", &s, "--calibration", calib.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(stdout(&out).lines().count(), 6);

    let bad_caps = run(&["calibrate", "--survey", survey.to_str().unwrap(), "--caps", "tram=3", "--out", "y.json"]);
    assert_eq!(bad_caps.status.code(), Some(2));
}
