use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use orlicz_bdg::exec::Execution;
use orlicz_bdg::gauge::registry;
use orlicz_bdg::runner::{self, RunConfig, EXPERIMENTS, OUTPUT_ENV};
use orlicz_bdg::RatioReport;

#[derive(Parser)]
#[command(name = "orlicz-bdg", version, about = "Monte Carlo checks of maximal inequalities in Orlicz spaces")]
struct Cli {
    /// Run replicate batches on one thread.
    #[arg(long, global = true)]
    sequential: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiments of a TOML config.
    Run { config: PathBuf },
    /// Run the full verification suite.
    VerifyPaper {
        /// Smaller grids and replicate counts.
        #[arg(long)]
        fast: bool,
        #[arg(long, default_value_t = runner::DEFAULT_SEED)]
        seed: u64,
    },
    /// List the registered gauges.
    ListGauges,
    /// List the experiment kinds accepted in configs.
    ListExperiments,
}

fn finish(reports: &[RatioReport], dir: &Path) -> Result<ExitCode, orlicz_bdg::Error> {
    runner::emit_report(reports, dir)?;
    let failed = reports.iter().filter(|r| !r.verdict).count();
    println!("{} rows, {failed} failed; reports in {}", reports.len(), dir.display());
    for r in reports.iter().filter(|r| !r.verdict) {
        println!("FAIL {} | {} | {}", r.experiment, r.anchor, r.params);
    }
    Ok(if failed == 0 { ExitCode::SUCCESS } else { ExitCode::FAILURE })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let exec = if cli.sequential { Execution::Sequential } else { Execution::Parallel };
    let result = match cli.command {
        Command::Run { config } => RunConfig::load(&config).and_then(|cfg| {
            let reports = cfg.run(exec)?;
            finish(&reports, &cfg.output_dir(Path::new("orlicz-bdg-out")))
        }),
        Command::VerifyPaper { fast, seed } => {
            let cfg = runner::verify_config(fast, seed);
            cfg.run(exec).and_then(|reports| finish(&reports, &cfg.output_dir(Path::new("verify-paper-out"))))
        }
        Command::ListGauges => {
            for (name, g) in registry() {
                println!("{name:<16} {:<14} {}", g.family().tag(), g.family().formula());
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::ListExperiments => {
            for (kind, what) in EXPERIMENTS {
                println!("{kind:<18} {what}");
            }
            println!("\noutput directory override: {OUTPUT_ENV}");
            Ok(ExitCode::SUCCESS)
        }
    };
    result.unwrap_or_else(|e| {
        eprintln!("error: {e}");
        ExitCode::from(2)
    })
}
