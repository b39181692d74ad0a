use std::process::{Command, Output};

fn relaxnn(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_relaxnn")).args(args).output().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn evaluate_without_reference_fails() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().display().to_string();
    let o = relaxnn(&["evaluate", "--problem", "burgers-riemann", "--out", &out]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("missing reference"), "{}", stderr(&o));
}

#[test]
fn evaluate_without_parameters_fails() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().display().to_string();
    let common = ["--problem", "burgers-riemann", "--out", &out];
    assert!(relaxnn(&[&["reference"][..], &common].concat()).status.success());
    let o = relaxnn(&[&["evaluate"][..], &common].concat());
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("missing parameters"), "{}", stderr(&o));
}

#[test]
fn config_is_required() {
    let o = relaxnn(&["train"]);
    assert!(!o.status.success());
    let o = relaxnn(&["train", "--config", "a.toml", "--problem", "swe-dam"]);
    assert!(!o.status.success());
}

#[test]
fn bad_config_file_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    std::fs::write(&path, "problem = \"burgers-riemann\"\nbogus = 1\n").unwrap();
    let o = relaxnn(&["train", "--config", &path.display().to_string()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).starts_with("error: "), "{}", stderr(&o));

    let o = relaxnn(&["train", "--config", &dir.path().join("absent.toml").display().to_string()]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn relax_type_out_of_range() {
    let o = relaxnn(&["train", "--problem", "euler-sod", "--relax-type", "4"]);
    assert!(!o.status.success());
}

#[test]
fn uq_rejects_deterministic_problem() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().display().to_string();
    let o = relaxnn(&["uq", "--problem", "swe-dam", "--out", &out, "--no-train"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("no stochastic inputs"), "{}", stderr(&o));
}

#[test]
fn short_training_run_writes_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().display().to_string();
    let o = relaxnn(&["train", "--problem", "burgers-sine", "--out", &out, "--epochs", "3"]);
    assert!(o.status.success(), "{}", stderr(&o));
    for f in ["config.toml", "points.csv", "history.jsonl", "u.params", "v.params"] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
    let history = std::fs::read_to_string(dir.path().join("history.jsonl")).unwrap();
    assert_eq!(history.lines().count(), 3);
}
