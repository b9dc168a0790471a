//! Acceptance run: every criterion prints one PASS/FAIL line, and the
//! process fails if any criterion does.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::io::Write;
use std::path::PathBuf;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use stage_core::fixtures::DOOR;
use stage_core::geometry::{Aabb, Point};
use stage_core::global_planner::{plan_reposition, Reposition, SegmentVerdict};
use stage_core::local_planner::{node_reward, plan_local, LocalParams, LocalPlan, RewardWeights};
use stage_core::mission::{
    emit_report, metrics_csv, replay_report, run_with, LogEvent, MissionConfig, MissionReport,
    Outcome, PlannerKind,
};
use stage_core::nav_graph::{
    shortest_paths, GlobalGraph, NodeId, PlanningSpace, Roadmap, SpaceMode, SubGraph,
};
use stage_core::voxel_map::{GridSpec, OccupancyMap, VoxelCoord, VoxelCounts, VoxelState};

const CAVE_SEEDS: [u64; 5] = [1, 2, 3, 4, 5];

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        pass,
        detail: detail.into(),
    }
}

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures")
        .join(name)
}

struct Run {
    name: String,
    config: MissionConfig,
    report: MissionReport,
    elapsed: Duration,
}

fn run(file: &str, kind: PlannerKind, seed: Option<u64>) -> Run {
    let mut config = MissionConfig::load(&fixture(file), kind).expect("fixture loads");
    if let Some(s) = seed {
        config = config.with_seed(s);
    }
    let t = Instant::now();
    let report = run_with(&config, kind).expect("mission runs");
    let name = format!("{file}/{kind:?}/seed {}", config.scenario.seed);
    Run {
        name,
        config,
        report,
        elapsed: t.elapsed(),
    }
}

// ---------------------------------------------------------------- 1

fn brute_frontiers(map: &OccupancyMap, k_min: u32) -> BTreeMap<VoxelCoord, u32> {
    let g = map.grid();
    let mut out = BTreeMap::new();
    for i in 0..g.len() {
        let c = g.coord_from_linear(i);
        if map.state(c) != Some(VoxelState::Free) {
            continue;
        }
        let mut n = 0;
        for dz in -1..=1 {
            for dy in -1..=1 {
                for dx in -1..=1 {
                    if (dx, dy, dz) != (0, 0, 0)
                        && map.state(c.offset(dx, dy, dz)) == Some(VoxelState::Unknown)
                    {
                        n += 1;
                    }
                }
            }
        }
        if n >= k_min {
            out.insert(c, n);
        }
    }
    out
}

fn frontier_oracle() -> Verdict {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut mismatches = 0;
    let mut total = 0;
    for m in 0..200 {
        let grid = GridSpec::new(Point::origin(), [32, 32, 32], 0.5).unwrap();
        let mut map = OccupancyMap::new(grid);
        let p_unknown = [0.05, 0.3, 0.6][m % 3];
        for i in 0..grid.len() {
            let r: f64 = rng.random();
            let s = if r < p_unknown {
                VoxelState::Unknown
            } else if r < p_unknown + (1.0 - p_unknown) * 0.8 {
                VoxelState::Free
            } else {
                VoxelState::Occupied
            };
            map.set_state(grid.coord_from_linear(i), s).unwrap();
        }
        let k_min = rng.random_range(1..=8);
        let got: BTreeMap<VoxelCoord, u32> = map
            .detect_frontiers(&map.bounds(), k_min)
            .into_iter()
            .map(|f| (f.coord, f.unknown_neighbors))
            .collect();
        total += got.len();
        if got != brute_frontiers(&map, k_min) {
            mismatches += 1;
        }
    }
    let el = t.elapsed();
    verdict(
        mismatches == 0 && el < Duration::from_secs(10),
        format!("200 maps, {total} frontiers, {mismatches} mismatching maps, {el:.2?}"),
    )
}

// ---------------------------------------------------------------- 2

fn bellman_ford(g: &Roadmap, source: NodeId) -> Vec<f64> {
    let mut d = vec![f64::INFINITY; g.len()];
    d[source.index()] = 0.0;
    for _ in 0..g.len() {
        let mut changed = false;
        for e in g.edges() {
            let (a, b) = (e.a.index(), e.b.index());
            if d[a] + e.length < d[b] {
                d[b] = d[a] + e.length;
                changed = true;
            }
            if d[b] + e.length < d[a] {
                d[a] = d[b] + e.length;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    d
}

fn random_graph(rng: &mut ChaCha8Rng, integer: bool) -> Roadmap {
    let n = rng.random_range(1..=200);
    let mut g = Roadmap::new();
    let mut used = std::collections::HashSet::new();
    while g.len() < n {
        let p = if integer {
            let (x, y) = (rng.random_range(0..30i32), rng.random_range(0..30i32));
            if !used.insert((x, y)) {
                continue;
            }
            Point::new(f64::from(x), f64::from(y), 0.0)
        } else {
            Point::new(
                rng.random_range(0.0..20.0),
                rng.random_range(0.0..20.0),
                rng.random_range(0.0..5.0),
            )
        };
        g.add_node(p, 0);
    }
    let m = rng.random_range(0..=4 * n);
    for _ in 0..m {
        let a = NodeId(rng.random_range(0..n as u32));
        let b = NodeId(rng.random_range(0..n as u32));
        let (pa, pb) = (g.node(a).position, g.node(b).position);
        // Integer graphs keep axis-aligned edges so lengths are whole numbers.
        if integer && pa.x != pb.x && pa.y != pb.y {
            continue;
        }
        g.add_edge(a, b);
    }
    g
}

fn dijkstra_oracle() -> Verdict {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst: f64 = 0.0;
    let mut exact_fail = 0;
    let mut float_fail = 0;
    for k in 0..1000 {
        let integer = k % 2 == 0;
        let g = random_graph(&mut rng, integer);
        let s = NodeId(rng.random_range(0..g.len() as u32));
        let sp = shortest_paths(&g, s);
        let bf = bellman_ford(&g, s);
        for (i, &want) in bf.iter().enumerate() {
            let got = sp.cost[i];
            if integer {
                if got != want {
                    exact_fail += 1;
                }
            } else if want.is_infinite() || got.is_infinite() {
                if got != want {
                    float_fail += 1;
                }
            } else {
                let err = (got - want).abs();
                worst = worst.max(err);
                if err > 1e-9 {
                    float_fail += 1;
                }
            }
        }
    }
    let el = t.elapsed();
    verdict(
        exact_fail == 0 && float_fail == 0 && el < Duration::from_secs(30),
        format!(
            "1000 graphs, {exact_fail} integer and {float_fail} float mismatches, worst float error {worst:.1e}, {el:.2?}"
        ),
    )
}

// ---------------------------------------------------------------- 3

fn direct_reward(p: &Point, c: &VoxelCounts, x: f64, y: f64, yaw: f64, w: &RewardWeights) -> f64 {
    let (vu, vf, vo) = (c.unknown as f64, c.free as f64, c.occupied as f64);
    let info = ((w.w_u * vu).exp() + (w.w_f * vf).exp()).ln() - w.w_o * vo;
    let bearing = (p.y - y).atan2(p.x - x);
    let mut dev = (bearing - yaw).rem_euclid(2.0 * PI);
    if dev > PI {
        dev = 2.0 * PI - dev;
    }
    w.w_i * info - w.w_h * dev
}

fn random_weights(rng: &mut ChaCha8Rng) -> RewardWeights {
    RewardWeights {
        w_i: rng.random_range(0.1..3.0),
        w_u: rng.random_range(0.0..0.1),
        w_f: rng.random_range(0.0..0.01),
        w_o: rng.random_range(0.0..0.1),
        w_h: rng.random_range(0.0..2.0),
        w_d: rng.random_range(0.0..2.0),
    }
}

fn random_counts(rng: &mut ChaCha8Rng, max: u64) -> VoxelCounts {
    VoxelCounts {
        unknown: rng.random_range(0..=max),
        free: rng.random_range(0..=max),
        occupied: rng.random_range(0..=max),
    }
}

/// Random sub-graph with labeled frontier nodes, anchored at the origin.
fn random_fixture(rng: &mut ChaCha8Rng) -> (Roadmap, stage_core::world_sim::RobotState) {
    let n = rng.random_range(5..60);
    let mut g = Roadmap::new();
    g.add_node(Point::origin(), 0);
    for _ in 1..n {
        let id = g.add_node(
            Point::new(
                rng.random_range(-8.0..8.0),
                rng.random_range(-8.0..8.0),
                0.0,
            ),
            0,
        );
        if rng.random_bool(0.4) {
            let node = g.node_mut(id);
            node.is_frontier_node = true;
            node.counts = Some(random_counts(rng, 300));
        }
    }
    for _ in 0..3 * n {
        let a = NodeId(rng.random_range(0..n as u32));
        let b = NodeId(rng.random_range(0..n as u32));
        if (g.node(a).position - g.node(b).position).norm() < 6.0 {
            g.add_edge(a, b);
        }
    }
    let pose = stage_core::world_sim::RobotState::new(0.0, 0.0, 0.0, rng.random_range(-PI..PI));
    (g, pose)
}

fn reward_checks() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst_rel: f64 = 0.0;
    for _ in 0..10_000 {
        let w = random_weights(&mut rng);
        let c = random_counts(&mut rng, 2000);
        let p = Point::new(
            rng.random_range(-10.0..10.0),
            rng.random_range(-10.0..10.0),
            0.0,
        );
        let (x, y, yaw) = (
            rng.random_range(-10.0..10.0),
            rng.random_range(-10.0..10.0),
            rng.random_range(-PI..PI),
        );
        let pose = stage_core::world_sim::RobotState::new(x, y, 0.0, yaw);
        let got = node_reward(&p, &c, &pose, &w);
        let want = direct_reward(&p, &c, x, y, yaw, &w);
        worst_rel = worst_rel.max((got - want).abs() / want.abs().max(1.0));
    }
    let mut all_finite = true;
    for &n in &[0u64, 1, 1000, 100_000, 1_000_000] {
        let c = VoxelCounts {
            unknown: n,
            free: 1_000_000 - n.min(1_000_000),
            occupied: n / 2,
        };
        let pose = stage_core::world_sim::RobotState::new(0.0, 0.0, 0.0, 0.0);
        all_finite &= node_reward(
            &Point::new(1.0, 1.0, 0.0),
            &c,
            &pose,
            &RewardWeights::default(),
        )
        .is_finite();
    }
    let mut flips = 0;
    let grid = GridSpec::new(Point::new(-10.0, -10.0, -1.0), [40, 40, 4], 0.5).unwrap();
    for _ in 0..100 {
        let mut map = OccupancyMap::new(grid);
        for i in 0..grid.len() {
            let s = [VoxelState::Unknown, VoxelState::Free, VoxelState::Occupied]
                [rng.random_range(0..3)];
            map.set_state(grid.coord_from_linear(i), s).unwrap();
        }
        let (g, pose) = random_fixture(&mut rng);
        let w = random_weights(&mut rng);
        let params = LocalParams::default();
        let sub = SubGraph {
            index: 0,
            space: PlanningSpace {
                bounds: Aabb::new(Point::new(-9.0, -9.0, -1.0), Point::new(9.0, 9.0, 1.0)),
                mode: SpaceMode::Full3d,
            },
            graph: g.clone(),
            anchor: NodeId(0),
            global_ids: vec![],
        };
        let global = GlobalGraph::from_roadmap(g, NodeId(0));
        let local_choice = |w: &RewardWeights, r_min: f64| match plan_local(
            &sub,
            &pose,
            w,
            &LocalParams { r_min, ..params },
        )
        .plan
        {
            LocalPlan::Path(p) => Some(p.target()),
            LocalPlan::Exhausted => None,
        };
        let global_choice =
            |w: &RewardWeights| match plan_reposition(&global, &map, NodeId(0), &pose, w, 2.0) {
                Reposition::Candidate(c) => Some(c.target),
                Reposition::NoFrontiers => None,
            };
        let base = (local_choice(&w, params.r_min), global_choice(&w));
        for c in [0.1, 10.0] {
            let ws = w.scaled(c);
            if (local_choice(&ws, params.r_min * c), global_choice(&ws)) != base {
                flips += 1;
            }
        }
    }
    verdict(
        worst_rel <= 1e-9 && all_finite && flips == 0,
        format!(
            "worst relative error {worst_rel:.1e} over 10^4 inputs, finite up to 10^6 counts: {all_finite}, {flips} argmax changes under scaling"
        ),
    )
}

// ---------------------------------------------------------------- 4

fn stitch_locality(runs: &[&Run]) -> Verdict {
    let mut checks = 0;
    let mut outside = 0;
    let mut over_bound = 0;
    for r in runs {
        for (ov, a, b) in &r.report.stitch_checks {
            checks += 1;
            if !(ov.contains(a) && ov.contains(b)) {
                outside += 1;
            }
        }
        for row in &r.report.stitches {
            if row.checks > row.overlap_nodes * row.overlap_nodes || !row.all_inside {
                over_bound += 1;
            }
        }
    }
    verdict(
        checks > 0 && outside == 0 && over_bound == 0,
        format!("{} runs, {checks} stitch checks, {outside} outside the overlap box, {over_bound} iterations over the bound", runs.len()),
    )
}

// ---------------------------------------------------------------- 5, 6

fn in_door(p: &Point, grid: &GridSpec, gap: bool) -> bool {
    let [lo, hi] = DOOR;
    let hi_y = if gap { hi[1] - 2 } else { hi[1] };
    grid.coord_of(p).is_some_and(|c| {
        (lo[0]..=hi[0]).contains(&c.x)
            && (lo[1]..=hi_y).contains(&c.y)
            && (lo[2]..=hi[2]).contains(&c.z)
    })
}

fn event_iteration(r: &Run) -> Option<u64> {
    r.report.events.iter().find_map(|e| match e {
        LogEvent::SceneEvent { iteration, .. } => Some(*iteration),
        _ => None,
    })
}

fn blocked_door(r: &Run) -> Verdict {
    let ev = &r.report.events;
    let mut stage = 0;
    let mut blocked = None;
    for e in ev {
        match (stage, e) {
            (
                0,
                LogEvent::SegmentCheck {
                    verdict: SegmentVerdict::Untraversable,
                    ..
                },
            ) => stage = 1,
            (1, LogEvent::Alternative { found: false, .. }) => stage = 2,
            (1, LogEvent::Alternative { found: true, .. }) => stage = 0,
            (2, LogEvent::Invalidate { edges, .. }) if *edges >= 1 => stage = 3,
            (
                3,
                LogEvent::Replan {
                    blocked_target,
                    new_target: Some(t),
                    ..
                },
            ) if t != blocked_target => {
                blocked = Some((*blocked_target, *t));
                stage = 4;
            }
            (4, LogEvent::Complete { .. }) => stage = 5,
            _ => {}
        }
    }
    let grid = *r.config.world.grid();
    let fired = event_iteration(r);
    let entered = fired.is_some_and(|it| {
        r.report
            .trace
            .iter()
            .filter(|t| t.iteration >= it)
            .any(|t| in_door(&Point::new(t.x, t.y, t.z), &grid, false))
    });
    verdict(
        stage == 5 && fired.is_some() && !entered && r.report.outcome == Outcome::Complete && r.elapsed < Duration::from_secs(60),
        format!(
            "sequence reached step {stage}/5, blocked -> new target {blocked:?}, door entered after event: {entered}, {:.2?}",
            r.elapsed
        ),
    )
}

fn half_door(r: &Run) -> Verdict {
    let ev = &r.report.events;
    let found = ev
        .iter()
        .any(|e| matches!(e, LogEvent::Alternative { found: true, .. }));
    let invalidated: usize = ev
        .iter()
        .map(|e| match e {
            LogEvent::Invalidate { edges, .. } => *edges,
            _ => 0,
        })
        .sum();
    let target = ev.iter().find_map(|e| match e {
        LogEvent::Replan {
            alternative_found: true,
            blocked_target,
            ..
        } => Some(*blocked_target),
        _ => None,
    });
    let reached = target.is_some_and(|t| {
        ev.iter()
            .any(|e| matches!(e, LogEvent::Arrived { target, .. } if *target == t))
    });
    verdict(
        found && invalidated == 0 && reached && r.elapsed < Duration::from_secs(60),
        format!(
            "alternative found: {found}, edges invalidated: {invalidated}, original target {target:?} reached: {reached}, {:.2?}",
            r.elapsed
        ),
    )
}

// ---------------------------------------------------------------- 7

fn coverage(stage: &[Run], baseline: &[Run]) -> Verdict {
    let mut wins = 0;
    let mut low = 0;
    let mut rows = Vec::new();
    for (s, b) in stage.iter().zip(baseline) {
        let (cs, vs, vb) = (
            s.report.coverage(),
            s.report.explored_volume(),
            b.report.explored_volume(),
        );
        if cs < 0.9 {
            low += 1;
        }
        if vs >= vb {
            wins += 1;
        }
        rows.push(format!("seed {} {:.3} {vs:.0}/{vb:.0}", s.report.seed, cs));
    }
    verdict(
        low == 0 && wins >= 4,
        format!(
            "coverage >= 0.9 on {}/5, stage volume >= baseline on {wins}/5 [{}]",
            5 - low,
            rows.join("; ")
        ),
    )
}

// ---------------------------------------------------------------- 8

fn safety_and_determinism(runs: &[&Run]) -> Verdict {
    let violations: usize = runs.iter().map(|r| r.report.safety_violations).sum();
    let mut differing = Vec::new();
    for r in runs
        .iter()
        .filter(|r| r.name.starts_with("cave") && r.report.seed == 1 || !r.name.starts_with("cave"))
    {
        let again = run_with(&r.config, r.report.planner).expect("mission runs");
        if metrics_csv(&again.metrics).unwrap() != metrics_csv(&r.report.metrics).unwrap() {
            differing.push(r.name.clone());
        }
    }
    let dir = tempfile::tempdir().unwrap();
    let door = runs
        .iter()
        .find(|r| r.name.starts_with("door.json/Stage"))
        .unwrap();
    emit_report(&door.report, &door.config, dir.path()).unwrap();
    let findings = replay_report(dir.path()).unwrap();
    verdict(
        violations == 0 && differing.is_empty() && findings.is_empty(),
        format!(
            "{} runs, {violations} occupied-voxel poses, metrics differ on re-run: {differing:?}, replay findings: {}",
            runs.len(),
            findings.len()
        ),
    )
}

fn main() {
    let mut out = std::io::stdout().lock();
    let mut failed = 0;
    let mut line = |n: u32, name: &str, v: Verdict| {
        let tag = if v.pass { "PASS" } else { "FAIL" };
        writeln!(out, "criterion {n} {tag}: {name}: {}", v.detail).unwrap();
        out.flush().unwrap();
        if !v.pass {
            failed += 1;
        }
    };
    line(1, "frontier oracle", frontier_oracle());
    line(2, "shortest-path oracle", dijkstra_oracle());
    line(3, "reward evaluation", reward_checks());

    let door = run("door.json", PlannerKind::Stage, None);
    let door_half = run("door_half.json", PlannerKind::Stage, None);
    let mut others = vec![
        run("door.json", PlannerKind::Baseline, None),
        run("door_half.json", PlannerKind::Baseline, None),
        run("open_room.json", PlannerKind::Stage, None),
        run("open_room.json", PlannerKind::Baseline, None),
    ];
    let cave_stage: Vec<Run> = CAVE_SEEDS
        .iter()
        .map(|&s| run("cave.json", PlannerKind::Stage, Some(s)))
        .collect();
    let cave_base: Vec<Run> = CAVE_SEEDS
        .iter()
        .map(|&s| run("cave.json", PlannerKind::Baseline, Some(s)))
        .collect();
    others.retain(|r| r.report.outcome != Outcome::Failure || r.name.starts_with("door"));
    let all: Vec<&Run> = [&door, &door_half]
        .into_iter()
        .chain(&others)
        .chain(&cave_stage)
        .chain(&cave_base)
        .collect();

    line(4, "stitch locality", stitch_locality(&all));
    line(5, "blocked door", blocked_door(&door));
    line(6, "half-blocked door", half_door(&door_half));
    line(7, "cave coverage", coverage(&cave_stage, &cave_base));
    line(8, "safety and determinism", safety_and_determinism(&all));
    if failed > 0 {
        eprintln!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
