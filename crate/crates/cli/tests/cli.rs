use std::path::Path;
use std::process::{Command, Output};

fn mcflab(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mcflab"))
        .arg("--out")
        .arg(out)
        .args(args)
        .env_remove("MCFLAB_RESULTS")
        .output()
        .expect("spawn mcflab")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn unknown_flag_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = mcflab(dir.path(), &["--no-such-flag", "suite"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn unknown_override_key_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let o = mcflab(dir.path(), &["--set", "nonsense=1", "expander"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn invalid_cone_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = mcflab(dir.path(), &["expander", "--beta", "-1"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn expander_writes_profile_and_residuals() {
    let dir = tempfile::tempdir().unwrap();
    let o = mcflab(dir.path(), &["--quick", "expander", "--n", "2", "--beta", "1"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(dir.path().join("expander/n2_beta1_profile.csv")).unwrap();
    assert!(csv.lines().count() > 100);
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("expander/n2_beta1_residuals.json")).unwrap()).unwrap();
    let a = json["metrics"]["a"].as_f64().unwrap();
    assert!(a > 1.0 && a < 3.0, "a = {a}");
}

#[test]
fn print_config_round_trips_through_config() {
    let dir = tempfile::tempdir().unwrap();
    let o = mcflab(dir.path(), &["--set", "t_final=3", "--print-config", "evolve", "zero"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.contains("t_final = 3"), "{text}");
    let cfg = dir.path().join("zero.toml");
    std::fs::write(&cfg, &text).unwrap();
    let again = mcflab(dir.path(), &["--config", cfg.to_str().unwrap(), "--print-config", "evolve"]);
    assert!(again.status.success());
    assert_eq!(stdout(&again), text);
}

#[test]
fn short_evolution_writes_csvs() {
    let dir = tempfile::tempdir().unwrap();
    let o = mcflab(dir.path(), &["--quick", "--set", "t_final=2", "evolve", "zero"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["zero_diagnostics.csv", "zero_final.csv", "zero_trace.csv"] {
        assert!(dir.path().join("evolve").join(f).exists(), "{f}");
    }
}

#[test]
fn scenario_list_names_builtins() {
    let dir = tempfile::tempdir().unwrap();
    let o = mcflab(dir.path(), &["experiment", "--list"]);
    assert!(o.status.success());
    assert!(stdout(&o).lines().any(|l| l == "family"));
}

#[test]
fn suite_rejects_unknown_criterion() {
    let dir = tempfile::tempdir().unwrap();
    let o = mcflab(dir.path(), &["suite", "--only", "15"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn single_criterion_writes_summary() {
    let dir = tempfile::tempdir().unwrap();
    let o = mcflab(dir.path(), &["--quick", "suite", "--only", "7"]);
    assert!(o.status.success(), "{}", stdout(&o));
    assert!(stdout(&o).contains("[PASS]"));
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("suite/summary.json")).unwrap()).unwrap();
    assert_eq!(summary["passed"], 1);
}
