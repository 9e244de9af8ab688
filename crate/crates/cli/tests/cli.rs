use std::path::Path;
use std::process::{Command, Output};

fn geoxray(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_geoxray"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs")
}

fn manifest(out: &Path, command: &str) -> serde_json::Value {
    let text = std::fs::read_to_string(out.join(format!("{command}.manifest.json"))).unwrap();
    serde_json::from_str(&text).unwrap()
}

#[test]
fn validate_surface_on_euclidean_passes() {
    let dir = tempfile::tempdir().unwrap();
    let run = geoxray(&["validate-surface"], dir.path());
    assert_eq!(run.status.code(), Some(0));
    let m = manifest(dir.path(), "validate-surface");
    assert_eq!(m["passed"], true);
    assert_eq!(m["config_hash"].as_str().unwrap().len(), 64);
    assert!(m["criteria"].as_array().unwrap().iter().all(|c| c["passed"] == true));
}

#[test]
fn validate_surface_flags_conjugate_points() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("c.toml");
    std::fs::write(&config, "surface = \"near_constant_curvature(4)\"\n").unwrap();
    let run = geoxray(&["validate-surface", "--config", config.to_str().unwrap()], dir.path());
    assert_eq!(run.status.code(), Some(1));
    let m = manifest(dir.path(), "validate-surface");
    let conj = m["criteria"].as_array().unwrap().iter().find(|c| c["name"] == "conjugate_points").unwrap();
    assert_eq!(conj["passed"], false);
}

#[test]
fn kernel_check_with_seed_7_passes() {
    let dir = tempfile::tempdir().unwrap();
    let run = geoxray(&["kernel-check", "--seed", "7"], dir.path());
    assert_eq!(run.status.code(), Some(0), "{}", String::from_utf8_lossy(&run.stdout));
    let m = manifest(dir.path(), "kernel-check");
    let sup = m["criteria"][0]["value"].as_f64().unwrap();
    assert!(sup <= 1e-4);
}

#[test]
fn forward_is_byte_identical_across_runs_and_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert!(geoxray(&["forward", "--seed", "3", "--threads", "1"], &a).status.success());
    assert!(geoxray(&["forward", "--seed", "3", "--threads", "3"], &b).status.success());
    let ca = std::fs::read(a.join("forward.csv")).unwrap();
    let cb = std::fs::read(b.join("forward.csv")).unwrap();
    assert_eq!(ca.len(), cb.len());
    assert!(ca == cb);
    assert_eq!(manifest(&a, "forward")["config_hash"], manifest(&b, "forward")["config_hash"]);
}

#[test]
fn unknown_config_key_gives_json_error_record() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("bad.toml");
    std::fs::write(&config, "[rays]\nn_betas = 4\n").unwrap();
    let run = geoxray(&["forward", "--config", config.to_str().unwrap()], dir.path());
    assert_eq!(run.status.code(), Some(2));
    let record: serde_json::Value = serde_json::from_slice(&run.stderr).unwrap();
    assert_eq!(record["error"]["kind"], "config");
    assert!(record["error"]["message"].as_str().unwrap().contains("n_betas"));
}

#[test]
fn registry_errors_are_reported() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("c.toml");
    std::fs::write(&config, "surface = \"saddle(1)\"\n").unwrap();
    let run = geoxray(&["validate-surface", "--config", config.to_str().unwrap()], dir.path());
    assert_eq!(run.status.code(), Some(2));
    let record: serde_json::Value = serde_json::from_slice(&run.stderr).unwrap();
    assert_eq!(record["error"]["kind"], "Registry");
    assert!(dir.path().join("validate-surface.error.json").exists());
}

#[test]
fn strict_mode_fails_on_warnings() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("c.toml");
    std::fs::write(&config, "[rays]\nn_beta = 4\nn_inc = 4\n[trace]\nstep = 0.05\n[forward]\nunderresolved_threshold = 1e-12\n").unwrap();
    let args = ["forward", "--config", config.to_str().unwrap()];
    assert_eq!(geoxray(&args, dir.path()).status.code(), Some(0));
    let mut strict = args.to_vec();
    strict.push("--strict");
    assert_eq!(geoxray(&strict, dir.path()).status.code(), Some(1));
    assert!(!manifest(dir.path(), "forward")["warnings"].as_array().unwrap().is_empty());
}
