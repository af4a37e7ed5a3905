use std::path::Path;
use std::process::{Command, Output};

const CONFIG: &str = r#"
seed = 5

[[experiments]]
kind = "brownian_engine"
horizon = 1.0
steps = 32
replicates = 300

[[experiments]]
kind = "power_oracles"
exponents = [2.0]
points = [0.5, 2.0]
tol = 1e-4
atoms = 4
"#;

fn cli(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_orlicz-bdg")).args(args).env("ORLICZ_BDG_OUT", out).output().unwrap()
}

#[test]
fn list_verbs_print_registries() {
    let dir = tempfile::tempdir().unwrap();
    let gauges = String::from_utf8(cli(&["list-gauges"], dir.path()).stdout).unwrap();
    assert!(gauges.contains("lambda_alpha_2"));
    assert!(gauges.contains("exp_minus_one"));
    let kinds = String::from_utf8(cli(&["list-experiments"], dir.path()).stdout).unwrap();
    for kind in ["good_lambda", "orlicz_bdg", "coarsening", "ORLICZ_BDG_OUT"] {
        assert!(kinds.contains(kind), "{kind}");
    }
}

#[test]
fn run_writes_to_env_directory_and_repeats_bytewise() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("small.toml");
    std::fs::write(&config, CONFIG).unwrap();
    let config = config.to_str().unwrap();

    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    let first = cli(&["run", config], &a);
    assert!(first.status.success(), "{}", String::from_utf8_lossy(&first.stdout));
    assert!(cli(&["--sequential", "run", config], &b).status.success());

    let csv = std::fs::read(a.join("results.csv")).unwrap();
    assert_eq!(csv, std::fs::read(b.join("results.csv")).unwrap());
    let text = String::from_utf8(csv).unwrap();
    assert!(text.starts_with("experiment,params_hash,lhs_mean"));
    assert!(a.join("summary.txt").exists());
}

#[test]
fn bad_config_exits_with_error_code() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("bad.toml");
    std::fs::write(&config, CONFIG.replace("brownian_engine", "brownian")).unwrap();
    let out = cli(&["run", config.to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("error"));
}
