use std::path::Path;
use std::process::{Command, Output};

use bbm_cli::output::{RunManifest, MANIFEST_FILE};

fn bbm(args: &[&str], root: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bbm"))
        .args(args)
        .env("BBM_OUT_ROOT", root)
        .output()
        .unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn manifest(dir: &Path) -> RunManifest {
    RunManifest::load(&dir.join(MANIFEST_FILE)).unwrap()
}

#[test]
fn simulate_writes_manifest_and_tables() {
    let tmp = tempfile::tempdir().unwrap();
    let run = tmp.path().join("sim");
    let out = bbm(
        &["simulate", "--t", "3", "--replicas", "200", "--dump-trees", "1", "--out", run.to_str().unwrap()],
        tmp.path(),
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let m = manifest(&run);
    assert_eq!(m.command, "simulate");
    assert_eq!(m.replicas, 200);
    for f in &m.outputs {
        assert!(run.join(&f.path).is_file(), "{}", f.path);
    }
    let names: Vec<_> = m.outputs.iter().map(|f| f.path.as_str()).collect();
    assert!(names.contains(&"summaries.csv"));
    assert!(names.contains(&"trees/replica_0_records.csv"));
    let header = std::fs::read_to_string(run.join("summaries.csv")).unwrap();
    assert!(header.starts_with("run_id,"));
}

#[test]
fn rerun_reproduces_digests() {
    let tmp = tempfile::tempdir().unwrap();
    let digests = |name: &str, jobs: &str| {
        let run = tmp.path().join(name);
        let out = bbm(
            &["simulate", "--t", "4", "--replicas", "300", "--seed", "9", "-j", jobs, "--out", run.to_str().unwrap()],
            tmp.path(),
        );
        assert!(out.status.success(), "{}", stderr(&out));
        manifest(&run).digests()
    };
    let a = digests("a", "1");
    assert_eq!(a, digests("b", "1"));
    assert_eq!(a, digests("c", "3"));
}

#[test]
fn envelope_exponent_outside_range_is_a_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let out = bbm(&["envelopes", "--t", "6", "--replicas", "10", "--alpha", "0.6"], tmp.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("0<α<1/2"), "{}", stderr(&out));
}

#[test]
fn unknown_flag_is_a_usage_error() {
    let tmp = tempfile::tempdir().unwrap();
    let out = bbm(&["simulate", "--no-such-flag", "1"], tmp.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn particle_cap_exits_with_capacity_code() {
    let tmp = tempfile::tempdir().unwrap();
    let out = bbm(&["simulate", "--t", "8", "--replicas", "5", "--max-particles", "50"], tmp.path());
    assert_eq!(out.status.code(), Some(3), "{}", stderr(&out));
}

#[test]
fn failing_check_exits_four_only_with_check_flag() {
    let tmp = tempfile::tempdir().unwrap();
    // the tube holds no extremal particle at this horizon
    let args = ["tube", "--t", "6", "--replicas", "100", "--r", "1"];
    let plain = bbm(&args, tmp.path());
    assert_eq!(plain.status.code(), Some(0), "{}", stderr(&plain));
    let mut strict = args.to_vec();
    strict.push("--check");
    let checked = bbm(&strict, tmp.path());
    assert_eq!(checked.status.code(), Some(4), "{}", stderr(&checked));
}

#[test]
fn report_collects_checks_from_runs() {
    let tmp = tempfile::tempdir().unwrap();
    let runs = tmp.path().join("runs");
    for (name, args) in [
        ("sim", vec!["simulate", "--t", "3", "--replicas", "100"]),
        ("bridge", vec!["bridge-validate", "--trials", "2000", "--bound-draws", "50", "--bridge-grid-dt", "0.01"]),
    ] {
        let dir = runs.join(name);
        let mut a = args.clone();
        a.extend(["--out", dir.to_str().unwrap()]);
        let out = bbm(&a, tmp.path());
        assert!(out.status.success(), "{name}: {}", stderr(&out));
    }
    let report = tmp.path().join("report");
    let out = bbm(&["report", runs.to_str().unwrap(), "--out", report.to_str().unwrap()], tmp.path());
    assert!(out.status.success(), "{}", stderr(&out));
    let csv = std::fs::read_to_string(report.join("report.csv")).unwrap();
    assert!(csv.lines().any(|l| l.contains(",simulate,")));
    assert!(csv.lines().any(|l| l.contains(",bridge-validate,")));
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(report.join("report.json")).unwrap()).unwrap();
    assert!(json.as_object().is_some_and(|o| !o.is_empty()));

    let empty = tempfile::tempdir().unwrap();
    let out = bbm(&["report", empty.path().to_str().unwrap()], tmp.path());
    assert_eq!(out.status.code(), Some(2));
}
