//! Report files and offline re-validation.
//!
//! A report directory holds:
//!
//! | file | contents |
//! |------|----------|
//! | `metrics.csv` | one row per iteration, deterministic |
//! | `timing.csv` | wall-clock planning time per iteration |
//! | `stitch.csv` | stitch checks and overlap sizes per iteration |
//! | `events.jsonl` | mission event log, one JSON object per line |
//! | `trace.csv` | robot pose after each iteration |
//! | `summary.json` | totals and per-mode timing statistics |
//! | `map.txt`, `graph.txt` | final map and global graph dumps |
//! | `scenario.json`, `world.txt` | inputs, for replay |

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::{MissionConfig, PlannerKind};
use super::runner::{run_with, LogEvent, MetricsRecord, MissionReport, Mode, Outcome};
use crate::nav_graph::{parse_graph_dump, write_graph_dump};
use crate::voxel_map::{parse_map_dump, write_map_dump};
use crate::world_sim::{parse_world, write_world, RobotState};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingRecord {
    pub iteration: u64,
    pub mode: Mode,
    pub planning_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StitchRow {
    pub iteration: u64,
    pub checks: usize,
    pub overlap_nodes: usize,
    pub edges_added: usize,
    /// Every checked segment had both endpoints in the overlap box.
    pub all_inside: bool,
    pub gap: bool,
    pub home_reachable: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub iteration: u64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub yaw: f64,
}

impl TraceRecord {
    pub fn new(iteration: u64, pose: &RobotState) -> Self {
        Self {
            iteration,
            x: pose.x,
            y: pose.y,
            z: pose.z,
            yaw: pose.yaw,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeTiming {
    pub count: usize,
    pub total_ms: f64,
    pub mean_ms: f64,
    pub max_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub planner: PlannerKind,
    pub seed: u64,
    pub outcome: Outcome,
    pub iterations: usize,
    pub explored_volume: f64,
    pub coverage: f64,
    pub reachable_free: usize,
    pub path_length: f64,
    pub stitch_checks: usize,
    pub edges_invalidated: usize,
    pub graph_nodes: usize,
    pub safety_violations: usize,
    pub planning_time: BTreeMap<String, ModeTiming>,
}

impl Summary {
    pub fn new(r: &MissionReport) -> Self {
        let mut planning_time: BTreeMap<String, ModeTiming> = BTreeMap::new();
        for t in &r.timings {
            let e = planning_time
                .entry(t.mode.as_str().to_string())
                .or_insert(ModeTiming {
                    count: 0,
                    total_ms: 0.0,
                    mean_ms: 0.0,
                    max_ms: 0.0,
                });
            e.count += 1;
            e.total_ms += t.planning_ms;
            e.max_ms = e.max_ms.max(t.planning_ms);
        }
        for e in planning_time.values_mut() {
            e.mean_ms = e.total_ms / e.count as f64;
        }
        let last = r.metrics.last();
        Self {
            planner: r.planner,
            seed: r.seed,
            outcome: r.outcome.clone(),
            iterations: r.metrics.len(),
            explored_volume: r.explored_volume(),
            coverage: r.coverage(),
            reachable_free: r.reachable_free.len(),
            path_length: last.map_or(0.0, |m| m.path_length),
            stitch_checks: r.metrics.iter().map(|m| m.stitch_checks).sum(),
            edges_invalidated: last.map_or(0, |m| m.edges_invalidated),
            graph_nodes: r.graph.graph.len(),
            safety_violations: r.safety_violations,
            planning_time,
        }
    }
}

fn csv_string<T: Serialize>(rows: &[T], header: &[&str]) -> Result<String> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(Vec::new());
    w.write_record(header).map_err(csv_err)?;
    for r in rows {
        w.serialize(r).map_err(csv_err)?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| Error::Simulation(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

fn csv_err(e: csv::Error) -> Error {
    Error::Simulation(format!("csv: {e}"))
}

pub const METRICS_HEADER: [&str; 8] = [
    "iteration",
    "explored_volume",
    "path_length",
    "stitch_checks",
    "overlap_nodes",
    "edges_invalidated",
    "graph_nodes",
    "mode",
];

pub fn metrics_csv(metrics: &[MetricsRecord]) -> Result<String> {
    csv_string(metrics, &METRICS_HEADER)
}

fn write(dir: &Path, name: &str, text: &str) -> Result<()> {
    let p = dir.join(name);
    fs::write(&p, text).map_err(|e| Error::io(p, e))
}

fn read(dir: &Path, name: &str) -> Result<String> {
    let p = dir.join(name);
    fs::read_to_string(&p).map_err(|e| Error::io(p, e))
}

/// Writes every report file into `dir`, creating it if needed.
pub fn emit_report(report: &MissionReport, config: &MissionConfig, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write(dir, "metrics.csv", &metrics_csv(&report.metrics)?)?;
    write(
        dir,
        "timing.csv",
        &csv_string(&report.timings, &["iteration", "mode", "planning_ms"])?,
    )?;
    write(
        dir,
        "stitch.csv",
        &csv_string(
            &report.stitches,
            &[
                "iteration",
                "checks",
                "overlap_nodes",
                "edges_added",
                "all_inside",
                "gap",
                "home_reachable",
            ],
        )?,
    )?;
    write(
        dir,
        "trace.csv",
        &csv_string(&report.trace, &["iteration", "x", "y", "z", "yaw"])?,
    )?;
    let mut events = String::new();
    for e in &report.events {
        events.push_str(&serde_json::to_string(e).expect("events serialize"));
        events.push('\n');
    }
    write(dir, "events.jsonl", &events)?;
    let summary = serde_json::to_string_pretty(&Summary::new(report)).expect("summary serializes");
    write(dir, "summary.json", &(summary + "\n"))?;
    write(dir, "map.txt", &write_map_dump(&report.map))?;
    write(dir, "graph.txt", &write_graph_dump(&report.graph))?;
    let mut scenario = config.scenario.clone();
    scenario.world = "world.txt".into();
    write(dir, "world.txt", &write_world(&config.world))?;
    let sc = serde_json::to_string_pretty(&scenario).expect("scenario serializes");
    write(dir, "scenario.json", &(sc + "\n"))?;
    Ok(())
}

/// A violated invariant found while re-validating a report.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReplayFinding(pub String);

impl std::fmt::Display for ReplayFinding {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

fn parse_csv<T: for<'de> Deserialize<'de>>(text: &str, name: &str) -> Result<Vec<T>> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    r.deserialize()
        .enumerate()
        .map(|(i, row)| row.map_err(|e| Error::parse(name, i + 2, e.to_string())))
        .collect()
}

/// Checks that mode changes follow the planner's grammar: re-positioning
/// only after an exhausted local plan, homing only after no frontiers.
pub fn mode_grammar(events: &[LogEvent]) -> Vec<ReplayFinding> {
    let mut out = Vec::new();
    for e in events {
        if let LogEvent::Mode {
            iteration,
            from,
            to,
            reason,
        } = e
        {
            let ok = match (from, to) {
                (Mode::Local, Mode::Reposition) => reason == "exhausted",
                (_, Mode::Homing) => reason == "no_frontiers",
                (Mode::Reposition, Mode::Local) => reason == "arrived",
                _ => false,
            };
            if !ok {
                out.push(ReplayFinding(format!(
                    "iteration {iteration}: illegal mode change {from:?} -> {to:?} ({reason})"
                )));
            }
        }
    }
    out
}

/// Re-validates a report directory and re-runs the mission to confirm the
/// metrics are reproduced byte for byte. An empty list means every check
/// passed.
pub fn replay_report(dir: &Path) -> Result<Vec<ReplayFinding>> {
    let mut findings = Vec::new();
    let mut bad = |s: String| findings.push(ReplayFinding(s));

    let summary: Summary = serde_json::from_str(&read(dir, "summary.json")?)
        .map_err(|e| Error::parse("summary.json", e.line(), e.to_string()))?;
    let metrics_text = read(dir, "metrics.csv")?;
    let metrics: Vec<MetricsRecord> = parse_csv(&metrics_text, "metrics.csv")?;
    let stitches: Vec<StitchRow> = parse_csv(&read(dir, "stitch.csv")?, "stitch.csv")?;
    let trace: Vec<TraceRecord> = parse_csv(&read(dir, "trace.csv")?, "trace.csv")?;
    let mut events = Vec::new();
    for (i, line) in read(dir, "events.jsonl")?.lines().enumerate() {
        events.push(
            serde_json::from_str::<LogEvent>(line)
                .map_err(|e| Error::parse("events.jsonl", i + 1, e.to_string()))?,
        );
    }
    let map = parse_map_dump(&read(dir, "map.txt")?)?;
    parse_graph_dump(&read(dir, "graph.txt")?)?;

    if metrics.len() != summary.iterations {
        bad(format!(
            "{} metric rows but {} iterations",
            metrics.len(),
            summary.iterations
        ));
    }
    for w in metrics.windows(2) {
        if w[1].explored_volume < w[0].explored_volume {
            bad(format!(
                "explored volume drops at iteration {}",
                w[1].iteration
            ));
        }
    }
    if let Some(last) = metrics.last() {
        let vol = map.known_count() as f64 * map.resolution().powi(3);
        if (vol - last.explored_volume).abs() > 1e-6 * vol.max(1.0) {
            bad(format!(
                "map dump volume {vol} disagrees with metrics {}",
                last.explored_volume
            ));
        }
    }
    for s in &stitches {
        if !s.all_inside {
            bad(format!(
                "iteration {}: stitch check outside the overlap",
                s.iteration
            ));
        }
        if s.checks > s.overlap_nodes * s.overlap_nodes {
            bad(format!(
                "iteration {}: {} checks exceed |N_overlap|^2",
                s.iteration, s.checks
            ));
        }
    }
    for f in mode_grammar(&events) {
        bad(f.0);
    }

    let scenario = super::Scenario::parse(&read(dir, "scenario.json")?)?;
    let world = parse_world(&read(dir, "world.txt")?)?;
    let config = MissionConfig::new(scenario, world, summary.planner)?;
    let rerun = run_with(&config, summary.planner)?;
    if metrics_csv(&rerun.metrics)? != metrics_text {
        bad("re-run metrics differ from metrics.csv".into());
    }
    if rerun.trace != trace {
        bad("re-run pose trace differs from trace.csv".into());
    }
    if rerun.events != events {
        bad("re-run event log differs from events.jsonl".into());
    }
    if rerun.safety_violations > 0 {
        bad(format!(
            "{} poses inside occupied voxels",
            rerun.safety_violations
        ));
    }
    Ok(findings)
}
