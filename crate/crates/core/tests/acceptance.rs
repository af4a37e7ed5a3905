//! Acceptance suite: runs the full-size verification preset and prints one
//! pass/fail line per criterion. Exits non-zero if any criterion fails.

use std::io::Write;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use orlicz_bdg::exec::Execution;
use orlicz_bdg::runner::{verify_config, verify_preset, write_csv, DEFAULT_SEED};
use orlicz_bdg::RatioReport;

const TITLES: [&str; 10] = [
    "power-gauge oracles",
    "Young inequality",
    "Brownian engine",
    "Ito isometry at stopping times",
    "good-lambda inequalities",
    "scalar BDG bracket and scaling",
    "Doob-Orlicz audit and conclusion",
    "Orlicz BDG stability and Luxemburg path",
    "block-average coarsening",
    "determinism of verify-paper",
];

fn budget(criterion: u8) -> Option<Duration> {
    match criterion {
        1 => Some(Duration::from_secs(10)),
        3 => Some(Duration::from_secs(120)),
        5 => Some(Duration::from_secs(300)),
        _ => None,
    }
}

fn csv_bytes(reports: &[RatioReport]) -> Vec<u8> {
    let mut buf = Vec::new();
    write_csv(reports, &mut buf).expect("csv");
    buf
}

fn line(out: &mut impl Write, criterion: u8, pass: bool, detail: &str) {
    let verdict = if pass { "PASS" } else { "FAIL" };
    writeln!(out, "C{criterion:<2} {verdict} {:<40} {detail}", TITLES[criterion as usize - 1]).unwrap();
}

fn main() -> ExitCode {
    let mut out = std::io::stdout();
    let exec = Execution::default();
    let preset = verify_preset(false);
    let mut all = true;

    for criterion in 1..=9u8 {
        let started = Instant::now();
        let mut reports = Vec::new();
        let mut error = None;
        for entry in preset.iter().filter(|e| e.criterion == Some(criterion)) {
            match entry.config.run(DEFAULT_SEED, exec) {
                Ok(r) => reports.extend(r),
                Err(e) => error = Some(e.to_string()),
            }
        }
        let elapsed = started.elapsed();
        let failed: Vec<&RatioReport> = reports.iter().filter(|r| !r.verdict).collect();
        let slow = budget(criterion).is_some_and(|b| elapsed > b);
        let pass = error.is_none() && failed.is_empty() && !reports.is_empty() && !slow;
        let mut detail = format!("{}/{} rows, {:.1}s", reports.len() - failed.len(), reports.len(), elapsed.as_secs_f64());
        if let Some(b) = budget(criterion) {
            detail += &format!(" (budget {}s)", b.as_secs());
        }
        if let Some(e) = &error {
            detail += &format!("; error: {e}");
        }
        line(&mut out, criterion, pass, &detail);
        for r in &failed {
            writeln!(
                out,
                "      failed: {} | {} | lhs {:e} +- {:e}, rhs {:e}, {:?}",
                r.anchor, r.params, r.lhs.mean, r.lhs.stderr, r.rhs.mean, r.check
            )
            .unwrap();
        }
        all &= pass;
    }

    let started = Instant::now();
    let cfg = verify_config(true, DEFAULT_SEED);
    let runs: Vec<_> = (0..2).map(|_| cfg.run(exec).map(|r| csv_bytes(&r))).collect();
    let pass = match (&runs[0], &runs[1]) {
        (Ok(a), Ok(b)) => a == b && !a.is_empty(),
        _ => false,
    };
    let size = runs[0].as_ref().map_or(0, Vec::len);
    line(&mut out, 10, pass, &format!("{size} CSV bytes per run, {:.1}s", started.elapsed().as_secs_f64()));
    all &= pass;

    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
