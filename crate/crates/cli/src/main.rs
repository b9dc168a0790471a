//! `stage run` executes a mission and writes a report directory;
//! `stage replay` re-validates one.
//!
//! Exit codes: 0 mission complete (or iteration cap reached), 2 mission
//! failure or replay violation, 1 configuration or I/O error.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use stage_core::mission::{
    emit_report, replay_report, run_with, MissionConfig, Outcome, PlannerKind,
};

#[derive(Parser)]
#[command(name = "stage", version, about = "Two-layer graph exploration planner")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a mission and write its report.
    Run {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long, default_value = "stage")]
        planner: PlannerKind,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long = "max-iters")]
        max_iters: Option<u64>,
    },
    /// Re-validate a report directory.
    Replay {
        #[arg(long)]
        report: PathBuf,
    },
}

fn run(cli: Cli) -> stage_core::Result<ExitCode> {
    match cli.command {
        Command::Run {
            scenario,
            planner,
            out,
            seed,
            max_iters,
        } => {
            let mut cfg = MissionConfig::load(&scenario, planner)?;
            if let Some(s) = seed {
                cfg = cfg.with_seed(s);
            }
            if let Some(n) = max_iters {
                cfg = cfg.with_max_iterations(n)?;
            }
            let report = run_with(&cfg, planner)?;
            emit_report(&report, &cfg, &out)?;
            println!(
                "{:?} after {} iterations, coverage {:.3}, explored {:.2} m3",
                report.outcome,
                report.metrics.len(),
                report.coverage(),
                report.explored_volume()
            );
            Ok(match report.outcome {
                Outcome::Failure => ExitCode::from(2),
                _ => ExitCode::SUCCESS,
            })
        }
        Command::Replay { report } => {
            let findings = replay_report(&report)?;
            for f in &findings {
                println!("violation: {f}");
            }
            if findings.is_empty() {
                println!("replay ok");
                Ok(ExitCode::SUCCESS)
            } else {
                Ok(ExitCode::from(2))
            }
        }
    }
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
