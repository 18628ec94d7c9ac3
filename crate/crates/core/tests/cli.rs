use std::path::Path;
use std::process::{Command, Output};

fn flexifal(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_flexifal"))
        .current_dir(dir)
        .args(args)
        .env_remove("FLEXIFAL_SEED")
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn schema(name: &str) -> String {
    format!("{}/schema/{name}", env!("CARGO_MANIFEST_DIR"))
}

/// Validates with Python's `jsonschema`; skipped when it is not installed.
fn validate(instance: &Path, schema_path: &str) {
    let probe = Command::new("python3").args(["-c", "import jsonschema"]).output();
    if !probe.is_ok_and(|o| o.status.success()) {
        eprintln!("python jsonschema unavailable, skipping schema check");
        return;
    }
    let script = "import json, sys, jsonschema\n\
                  s = json.load(open(sys.argv[1]))\n\
                  jsonschema.Draft202012Validator.check_schema(s)\n\
                  jsonschema.validate(json.load(open(sys.argv[2])), s, cls=jsonschema.Draft202012Validator)";
    let out = Command::new("python3")
        .args(["-c", script, schema_path])
        .arg(instance)
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "{} violates {schema_path}: {}",
        instance.display(),
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn dtfal_report_matches_schema() {
    let dir = tempfile::tempdir().unwrap();
    let out = flexifal(
        dir.path(),
        &["dtfal", "--system", "bb", "--spec", "BB1", "-N", "200", "--out", "r.json", "--traj-dir", "traj"],
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    validate(&dir.path().join("r.json"), &schema("dtfal-report.schema.json"));
    let report: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("r.json")).unwrap()).unwrap();
    assert_eq!(report["status"], "falsified");
    let traj = report["counterexamples"][0]["trajectory"].as_str().unwrap();
    assert!(dir.path().join(traj).is_file());
}

#[test]
fn unviolable_spec_exits_two_with_valid_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = flexifal(
        dir.path(),
        &["dtfal", "--system", "const1d", "--spec", "SAFE", "-N", "50", "-R", "5", "--epochs", "2", "--out", "r.json"],
    );
    assert_eq!(out.status.code(), Some(2));
    validate(&dir.path().join("r.json"), &schema("dtfal-report.schema.json"));
}

#[test]
fn nnfal_report_matches_schema() {
    let dir = tempfile::tempdir().unwrap();
    let steps: [&[&str]; 3] = [
        &["gen-data", "--mode", "nn", "--system", "const1d", "-N", "200", "--out", "nn.csv"],
        &["train-nn", "--data", "nn.csv", "--hidden", "16,16", "--lr", "0.01", "--epochs", "40", "--out", "m.bin"],
        &["nnfal", "--system", "const1d", "--model", "m.bin", "--unsafe", "0.5:inf", "--out", "r.json"],
    ];
    for args in steps {
        let out = flexifal(dir.path(), args);
        assert_eq!(out.status.code(), Some(0), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    }
    validate(&dir.path().join("r.json"), &schema("nnfal-report.schema.json"));
}

#[test]
fn monitor_prints_robustness() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("t.csv"), "time,x\n0,5\n5,5\n10,5\n").unwrap();
    let out = flexifal(dir.path(), &["monitor", "--traj", "t.csv", "--spec", "G[0,10] x < 20"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout(&out).trim(), "15");
    let late = flexifal(dir.path(), &["monitor", "--traj", "t.csv", "--spec", "x > 4", "--at", "5"]);
    assert_eq!(stdout(&late).trim(), "1");
}

#[test]
fn dod_of_half_space_is_near_fifty() {
    let dir = tempfile::tempdir().unwrap();
    let out = flexifal(dir.path(), &["dod", "--system", "const1d", "--spec", "G[0,1] x < 0.5"]);
    assert_eq!(out.status.code(), Some(0));
    let pct: f64 = stdout(&out).trim().parse().unwrap();
    assert!((pct - 50.0).abs() <= 3.0, "{pct}");
}

#[test]
fn errors_exit_one_with_message() {
    let dir = tempfile::tempdir().unwrap();
    let out = flexifal(dir.path(), &["dod", "--system", "warp-drive", "--spec", "x < 1"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown system"));

    let out = flexifal(dir.path(), &["dod", "--system", "const1d", "--spec", "G[0,1] (x <"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--spec"));
}

#[test]
fn tree_pipeline_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let steps: [&[&str]; 2] = [
        &["gen-data", "--mode", "rob", "--system", "bb", "--spec", "BB1", "-N", "100", "--out", "d.csv"],
        &["fit-tree", "--data", "d.csv", "--max-depth", "3", "--out", "t.json"],
    ];
    for args in steps {
        assert_eq!(flexifal(dir.path(), args).status.code(), Some(0), "{args:?}");
    }
    assert!(dir.path().join("d.csv.meta.json").is_file());
    let dump = stdout(&flexifal(dir.path(), &["dump-tree", "--tree", "t.json"]));
    assert!(dump.contains("x0_0"), "{dump}");
    let leaf = stdout(&flexifal(dir.path(), &["dump-tree", "--tree", "t.json", "--leaf", "3"]));
    assert!(leaf.lines().last().unwrap().starts_with("leaf #3 "), "{leaf}");
}
