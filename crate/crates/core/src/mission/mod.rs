//! Mission runner: the sense, map, plan, refine, check and execute loop,
//! plus the nearest-frontier baseline and report output.

mod config;
mod report;
mod runner;

pub use config::{MissionConfig, PlannerConfig, PlannerKind, Scenario};
pub use report::{
    emit_report, metrics_csv, replay_report, ReplayFinding, StitchRow, Summary, TimingRecord,
    TraceRecord,
};
pub use runner::{
    run_baseline, run_mission, run_with, LogEvent, MetricsRecord, MissionReport, Mode, Outcome,
};
