use orlicz_bdg::exec::Execution;
use orlicz_bdg::runner::{all_pass, emit_report, verify_preset, write_csv, RunConfig, CSV_FILE, SUMMARY_FILE};

const SMALL: &str = r#"
seed = 11

[[experiments]]
kind = "scalar_bdg"
rules = ["constant_e1", "sign_of_B1"]
phi = { family = "power", p = 1.0 }
horizon = 1.0
steps = 64
stop = { kind = "deterministic", t = 1.0 }
scales = [0.5, 1.0, 2.0]
replicates = 400

[[experiments]]
kind = "power_oracles"
exponents = [1.5, 2.0, 3.0]
points = [0.1, 0.5, 2.0, 10.0]
tol = 1e-4
atoms = 8
"#;

fn csv(cfg: &RunConfig, exec: Execution) -> Vec<u8> {
    let mut buf = Vec::new();
    write_csv(&cfg.run(exec).unwrap(), &mut buf).unwrap();
    buf
}

#[test]
fn small_config_runs_and_reports() {
    let cfg = RunConfig::parse(SMALL).unwrap();
    let reports = cfg.run(Execution::default()).unwrap();
    assert!(reports.iter().any(|r| r.experiment == "scalar_bdg"));
    assert!(reports.iter().any(|r| r.experiment == "power_oracles"));
    let dir = tempfile::tempdir().unwrap();
    emit_report(&reports, dir.path()).unwrap();
    let text = std::fs::read_to_string(dir.path().join(CSV_FILE)).unwrap();
    assert_eq!(
        text.lines().next().unwrap(),
        "experiment,params_hash,lhs_mean,lhs_stderr,rhs_mean,rhs_stderr,ratio,bound,grid_n,verdict"
    );
    assert_eq!(text.lines().count(), reports.len() + 1);
    assert!(dir.path().join(SUMMARY_FILE).exists());
}

#[test]
fn sequential_and_parallel_agree_bytewise() {
    let cfg = RunConfig::parse(SMALL).unwrap();
    assert_eq!(csv(&cfg, Execution::Sequential), csv(&cfg, Execution::Parallel));
}

#[test]
fn seed_changes_the_output() {
    let a = RunConfig::parse(SMALL).unwrap();
    let b = RunConfig { seed: 12, ..a.clone() };
    assert_ne!(csv(&a, Execution::default()), csv(&b, Execution::default()));
}

#[test]
fn fast_preset_entries_pass_individually() {
    // the cheap deterministic entries; the Monte Carlo ones run in the acceptance target
    for entry in verify_preset(true).iter().filter(|e| matches!(e.criterion, Some(1) | Some(2) | Some(9))) {
        let reports = entry.config.run(1, Execution::default()).unwrap();
        assert!(all_pass(&reports), "{}", entry.config.kind());
    }
}

#[test]
fn unknown_gauge_family_names_its_path() {
    let bad = SMALL.replace("family = \"power\"", "family = \"powr\"");
    let err = RunConfig::parse(&bad).unwrap_err().to_string();
    assert!(err.contains("experiments[0].phi"), "{err}");
}

#[test]
fn unknown_field_is_rejected() {
    let bad = SMALL.replace("horizon = 1.0", "horizon = 1.0\nhorizn = 2.0");
    assert!(RunConfig::parse(&bad).is_err());
}
