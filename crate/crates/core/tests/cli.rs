use std::path::Path;
use std::process::Command;

use exes_lab::output::{load_manifest, MANIFEST_FILE, REPORT_FILE};

fn lab() -> Command {
    Command::new(env!("CARGO_BIN_EXE_exes-lab"))
}

fn run_ok(args: &[&str]) -> String {
    let out = lab().args(args).env_remove("EXES_LAB_SEED").output().unwrap();
    assert!(
        out.status.success(),
        "exes-lab {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn small(dir: &Path) -> Vec<String> {
    vec![
        "--out".into(),
        dir.display().to_string(),
        "--set".into(),
        "dyads=6".into(),
        "--set".into(),
        "rounds=12".into(),
    ]
}

fn report(dir: &Path) -> String {
    std::fs::read_to_string(dir.join(REPORT_FILE)).unwrap()
}

#[test]
fn simulate_writes_a_complete_run() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("sim");
    let mut args = small(&dir);
    args.extend(["--set", "mode=dynamic", "--set", "payoffs.high_value=4", "simulate"].map(String::from));
    let args: Vec<&str> = args.iter().map(String::as_str).collect();
    let text = run_ok(&args);
    assert!(text.contains("written to"));
    let manifest = load_manifest(&dir).unwrap();
    assert!(dir.join(MANIFEST_FILE).exists());
    for artifact in &manifest.artifacts {
        assert!(dir.join(artifact).exists(), "missing {artifact}");
    }
    let parsed: serde_json::Value = serde_json::from_str(&report(&dir)).unwrap();
    assert_eq!(parsed["dyads"].as_array().unwrap().len(), 6);
}

#[test]
fn same_seed_gives_identical_reports() {
    let tmp = tempfile::tempdir().unwrap();
    let mut reports = Vec::new();
    for name in ["a", "b"] {
        let dir = tmp.path().join(name);
        let mut args = small(&dir);
        args.extend(["--seed", "7", "simulate"].map(String::from));
        let args: Vec<&str> = args.iter().map(String::as_str).collect();
        run_ok(&args);
        reports.push(report(&dir));
    }
    assert_eq!(reports[0], reports[1]);
}

#[test]
fn seed_comes_from_the_environment_unless_flagged() {
    let tmp = tempfile::tempdir().unwrap();
    let run = |name: &str, env: Option<&str>, flag: Option<&str>| {
        let dir = tmp.path().join(name);
        let mut cmd = lab();
        cmd.args(small(&dir)).env_remove("EXES_LAB_SEED");
        if let Some(seed) = env {
            cmd.env("EXES_LAB_SEED", seed);
        }
        if let Some(seed) = flag {
            cmd.args(["--seed", seed]);
        }
        assert!(cmd.arg("simulate").status().unwrap().success());
        report(&dir)
    };
    let flagged = run("flag", None, Some("31"));
    assert_eq!(run("env", Some("31"), None), flagged);
    assert_eq!(run("both", Some("5"), Some("31")), flagged);
    assert_ne!(run("other", Some("5"), None), flagged);
}

#[test]
fn invalid_gamma_exits_with_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let out = lab()
        .args(["--out", &tmp.path().join("x").display().to_string()])
        .args(["--set", "adaptive.gamma=1.5", "simulate"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("adaptive.gamma ∈ [0,1]"));
    assert!(!tmp.path().join("x").exists());
}

#[test]
fn unknown_keys_and_bad_flags_exit_2() {
    let out = lab().args(["--set", "adaptive.gama=0.4", "simulate"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown config key"));
    assert_eq!(lab().arg("frobnicate").output().unwrap().status.code(), Some(2));
    assert_eq!(lab().arg("--help").output().unwrap().status.code(), Some(0));
}

#[test]
fn stats_and_plots_on_a_benchmark_run() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("bench");
    let mut args = small(&dir);
    args.push("benchmark".into());
    let args: Vec<&str> = args.iter().map(String::as_str).collect();
    run_ok(&args);
    let d = dir.display().to_string();

    let kw: serde_json::Value = serde_json::from_str(&run_ok(&["stats", &d, "--metric", "efficiency"])).unwrap();
    assert_eq!(kw["groups"].as_array().unwrap().len(), 4);
    assert_eq!(kw["result"]["method"], "kruskal_wallis");
    let mw: serde_json::Value = serde_json::from_str(&run_ok(&[
        "stats",
        &d,
        "--metric",
        "stability",
        "--groups",
        "dynamic-high,dynamic-low",
    ]))
    .unwrap();
    assert!(mw["result"]["method"].as_str().unwrap().starts_with("mann_whitney"));

    for kind in ["bars", "conventions"] {
        run_ok(&["plot", &d, "--kind", kind]);
    }
    assert!(dir.join("bars.svg").exists());
    assert!(dir.join("conventions-dyad0.svg").exists());

    let out = lab()
        .args(["plot", &d, "--kind", "conventions", "--dyad", "99"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("0..=5"));

    let out = lab()
        .args(["stats", &tmp.path().join("nope").display().to_string()])
        .output()
        .unwrap();
    assert_ne!(out.status.code(), Some(0));
}
