mod common;

use std::path::Path;
use std::process::Command;

use frontlab::scenario::{run, validate, Scenario, Severity};

fn frontlab() -> Command {
    Command::new(env!("CARGO_BIN_EXE_frontlab"))
}

const FLAT: &str = r#"
name = "flat"
experiments = ["eigen", "speed"]
[lattice]
periods = [1.0]
resolution = [16]
[domain]
whole_space = true
[reaction]
kind = "tabulated"
u = [0.0, 1.0]
f = [0.0, 0.0]
[ladder]
gamma = 0.0
n_max = 0
"#;

const LOGISTIC: &str = r#"
name = "logistic"
experiments = ["speed"]
[lattice]
periods = [1.0]
resolution = [20]
[domain]
whole_space = true
[reaction]
kind = "logistic"
rate = 1.0
[ladder]
gamma = 0.0
n_max = 0
[speed]
directions = [[1.0]]
"#;

fn write(dir: &Path, name: &str, text: &str) -> std::path::PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

#[test]
fn lists_all_experiments() {
    let out = frontlab().arg("list-experiments").output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    for name in [
        "eigen", "eigen-ladder", "steady", "steady-ladder", "speed", "speed-ladder", "spread", "certificate", "front",
        "block-scan",
    ] {
        assert!(text.lines().any(|l| l.split_whitespace().next() == Some(name)), "{name}");
    }
}

#[test]
fn zero_reaction_has_zero_eigenvalue() {
    let s = Scenario::from_toml(&FLAT.replace(r#"experiments = ["eigen", "speed"]"#, r#"experiment = "eigen""#)).unwrap();
    let r = run(&s).unwrap();
    assert!(r.passed());
    let values = &r.experiments[0].tables[0];
    let v: f64 = values.rows[0][2].parse().unwrap();
    assert!(v.abs() < 1e-10, "{v}");
    // speed is refused: the zero state is stable
    assert!(run(&Scenario::from_toml(FLAT).unwrap()).is_err());
}

#[test]
fn logistic_speed_in_report() {
    let s = Scenario::from_toml(LOGISTIC).unwrap();
    let r = run(&s).unwrap();
    let c: f64 = r.experiments[0].tables[0].rows[0][5].parse().unwrap();
    assert!((c - 2.0).abs() < 0.01);
    let text = r.summary_text();
    assert!(text.contains("resolution [20]") && text.contains("lambda cutoff: 20") && text.contains("gamma = 0"));
}

#[test]
fn validate_findings() {
    let fine = LOGISTIC.replace("resolution = [20]", "resolution = [8]");
    let f = validate(&Scenario::from_toml(&fine).unwrap());
    assert!(f.iter().any(|x| x.severity == Severity::Warning && x.message.contains("drift under-resolved")));

    let r31 = LOGISTIC.replace(
        "kind = \"logistic\"\nrate = 1.0",
        "kind = \"remark31\"\nlambda = 2.0\ns0 = 0.3\nsaturation = 1.0\nkpp = true",
    );
    let f = validate(&Scenario::from_toml(&r31).unwrap());
    assert!(f.iter().any(|x| x.severity == Severity::Error && x.message.contains("KPP")), "{f:?}");

    let cert = r#"
experiment = "certificate"
[lattice]
periods = [1.0, 2.0]
resolution = [8, 16]
[[domain.primitive]]
kind = "slab"
normal = [0.0, 1.0]
a = 0.5
b = 1.5
[diffusion]
kind = "oscillating"
base = [[1.0, 0.0], [0.0, 1.0]]
amplitude = 0.3
[reaction]
kind = "logistic"
rate = 4.0
[ladder]
gamma = 1.0
n_max = 4
"#;
    let f = validate(&Scenario::from_toml(cert).unwrap());
    assert!(f.iter().any(|x| x.severity == Severity::Error && x.message.contains("not constant")));
}

#[test]
fn validate_command_exit_status() {
    let dir = tempfile::tempdir().unwrap();
    let ok = write(dir.path(), "ok.toml", LOGISTIC);
    assert!(frontlab().arg("validate").arg(&ok).status().unwrap().success());
    let bad = write(dir.path(), "bad.toml", &LOGISTIC.replace("n_max = 0", "n_max = 0\nrungs = [3]"));
    assert_eq!(frontlab().arg("validate").arg(&bad).status().unwrap().code(), Some(1));
    let broken = write(dir.path(), "broken.toml", &LOGISTIC.replace("rate = 1.0", "rate = \"fast\""));
    let out = frontlab().arg("validate").arg(&broken).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("line") && err.contains("broken.toml"), "{err}");
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = common::scenario_path("homogeneous-1d.toml");
    let mut bodies = Vec::new();
    for (k, jobs) in ["1", "3"].iter().enumerate() {
        let out = dir.path().join(format!("run{k}"));
        let st = frontlab().arg("run").arg(&scenario).arg("--out").arg(&out).arg("--jobs").arg(jobs).status().unwrap();
        assert!(st.success());
        let mut files: Vec<_> = std::fs::read_dir(&out)
            .unwrap()
            .map(|e| e.unwrap().path())
            .filter(|p| p.extension().is_some_and(|x| x == "csv"))
            .collect();
        files.sort();
        assert!(!files.is_empty());
        let first = std::fs::read_to_string(&files[0]).unwrap();
        assert!(first.lines().next().unwrap().contains('['), "header names units: {first}");
        bodies.push(files.iter().map(|p| (p.file_name().unwrap().to_owned(), std::fs::read(p).unwrap())).collect::<Vec<_>>());
        assert!(out.join("report.txt").exists());
    }
    assert_eq!(bodies[0], bodies[1]);
}

#[test]
fn failed_assertion_sets_exit_status() {
    let dir = tempfile::tempdir().unwrap();
    let text = r#"
experiment = "front"
[lattice]
periods = [1.0]
resolution = [8]
[domain]
whole_space = true
[reaction]
kind = "logistic"
rate = 1.0
[ladder]
gamma = 0.0
n_max = 0
[speed]
directions = [[1.0]]
[front]
cells = 40
time = 5.0
compare = true
speed_rel = 0.0001
"#;
    let p = write(dir.path(), "strict.toml", text);
    let out = frontlab().arg("run").arg(&p).arg("--out").arg(dir.path().join("o")).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8(out.stdout).unwrap().contains("[FAIL]"));
}
