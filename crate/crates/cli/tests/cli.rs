use std::path::Path;
use std::process::{Command, Output};

fn brodylab(args: &[&str], config: Option<&str>, out: &Path) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_brodylab"));
    cmd.args(args).arg("--out").arg(out).env("BRODYLAB_THREADS", "1");
    if let Some(text) = config {
        let path = out.join("input.cfg");
        std::fs::create_dir_all(out).unwrap();
        std::fs::write(&path, text).unwrap();
        cmd.arg("--config").arg(path);
    }
    cmd.output().unwrap()
}

fn report(out: &Path, name: &str) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(out.join(format!("{name}.json"))).unwrap()).unwrap()
}

#[test]
fn list_shows_every_experiment_with_an_anchor() {
    let out = Command::new(env!("CARGO_BIN_EXE_brodylab")).arg("list").output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let names = [
        "example-random-family",
        "ruelle-check",
        "brody-bound",
        "metric-lemma",
        "tame-growth",
        "nsa-ergodic",
        "rescale-family",
        "glue-decay",
    ];
    for name in names {
        let line = text.lines().find(|l| l.starts_with(name)).unwrap_or_else(|| panic!("{name} not listed"));
        assert!(line[name.len()..].trim().len() > 3, "{name} has no anchor");
    }
    assert!(text.contains("= 12/L²") && text.contains("= 2/L²"));
}

#[test]
fn constant_curve_is_brody_with_zero_derivative() {
    let dir = tempfile::tempdir().unwrap();
    let out = brodylab(&["run", "brody-bound"], Some("curve = constant\n"), dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let r = report(dir.path(), "brody-bound");
    assert_eq!(r["schema"], "brodylab-report/1");
    assert_eq!(r["metrics"]["max_df"]["value"].as_f64(), Some(0.0));
    assert_eq!(r["verdicts"]["brody"]["status"], "pass");
    assert_eq!(r["verdicts"]["brody"]["metric"], "max_df");
    let csv = r["artifacts"][0].as_str().unwrap();
    assert!(dir.path().join(csv).exists());
}

fn strip_runtime(text: &str) -> String {
    text.lines().filter(|l| !l.contains("\"runtime_seconds\"")).collect::<Vec<_>>().join("\n")
}

#[test]
fn same_seed_gives_identical_reports() {
    let cfg = "curve = lattice\nsamples = 3\nresolution = 16\n";
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for dir in [&a, &b] {
        let out = brodylab(&["run", "brody-bound", "--seed", "11"], Some(cfg), dir.path());
        assert_eq!(out.status.code(), Some(0));
    }
    let read = |d: &tempfile::TempDir, f: &str| std::fs::read_to_string(d.path().join(f)).unwrap();
    assert_eq!(strip_runtime(&read(&a, "brody-bound.json")), strip_runtime(&read(&b, "brody-bound.json")));
    assert_eq!(read(&a, "brody-bound-certificates.csv"), read(&b, "brody-bound-certificates.csv"));
    let c = tempfile::tempdir().unwrap();
    brodylab(&["run", "brody-bound", "--seed", "12"], Some(cfg), c.path());
    assert_ne!(read(&a, "brody-bound-certificates.csv"), read(&c, "brody-bound-certificates.csv"));
}

#[test]
fn config_seed_is_overridden_by_flag() {
    let dir = tempfile::tempdir().unwrap();
    brodylab(&["run", "glue-decay", "--seed", "5"], Some("seed = 4\npoints = 8\n"), dir.path());
    assert_eq!(report(dir.path(), "glue-decay")["config"]["seed"], 5);
}

#[test]
fn glue_decay_passes_with_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let out = brodylab(&["run", "glue-decay"], None, dir.path());
    assert_eq!(out.status.code(), Some(0));
    let slope = report(dir.path(), "glue-decay")["metrics"]["decay_slope"]["value"].as_f64().unwrap();
    assert!((slope + 3.0).abs() < 0.3);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(brodylab(&["run", "no-such-experiment"], None, dir.path()).status.code(), Some(2));
    assert_eq!(brodylab(&["frobnicate"], None, dir.path()).status.code(), Some(2));
    assert_eq!(brodylab(&["run", "glue-decay"], Some("bogus = 1\n"), dir.path()).status.code(), Some(2));
    assert_eq!(brodylab(&["run", "glue-decay"], Some("points = many\n"), dir.path()).status.code(), Some(2));
    assert_eq!(brodylab(&["run", "glue-decay"], Some("not a line\n"), dir.path()).status.code(), Some(2));
    // A criterion that cannot hold.
    let fail = brodylab(&["run", "glue-decay"], Some("slope_target = -2\nslope_tolerance = 0.1\n"), dir.path());
    assert_eq!(fail.status.code(), Some(1));
    assert_eq!(report(dir.path(), "glue-decay")["verdicts"]["decay"]["status"], "fail");
    // A numeric failure inside the run.
    let bad = brodylab(&["run", "rescale-family"], Some("target = 1.0\nsamples_per_side = 16\n"), dir.path());
    assert_eq!(bad.status.code(), Some(1));
    let r = report(dir.path(), "rescale-family");
    assert_eq!(r["overall"], "inconclusive");
    assert!(r["error"].as_str().unwrap().contains("target"));
}

#[test]
fn thread_setting_is_validated() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_brodylab"))
        .args(["run", "glue-decay", "--out"])
        .arg(dir.path())
        .env("BRODYLAB_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}
