//! Local exploration: frontier-node rewards, candidate choice inside the
//! forward field of view, and path segmentation.

use std::f64::consts::{FRAC_PI_2, LN_2};

use serde::{Deserialize, Serialize};

use crate::geometry::{wrap_angle, Point};
use crate::nav_graph::{
    shortest_paths, GoalKind, NodeId, PathSegment, PathWay, SegmentStatus, SubGraph,
};
use crate::voxel_map::VoxelCounts;
use crate::world_sim::RobotState;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RewardWeights {
    pub w_i: f64,
    pub w_u: f64,
    pub w_f: f64,
    pub w_o: f64,
    pub w_h: f64,
    /// Path length penalty for global pathways.
    pub w_d: f64,
}

impl Default for RewardWeights {
    fn default() -> Self {
        Self {
            w_i: 1.0,
            w_u: 0.04,
            w_f: 0.002,
            w_o: 0.02,
            w_h: 0.5,
            w_d: 0.5,
        }
    }
}

impl RewardWeights {
    pub fn validate(&self) -> Result<()> {
        let all = [self.w_i, self.w_u, self.w_f, self.w_o, self.w_h, self.w_d];
        if all.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::Config(
                "reward weights must be finite and nonnegative".into(),
            ));
        }
        if self.w_i <= 0.0 {
            return Err(Error::Config("w_i must be positive".into()));
        }
        Ok(())
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            w_i: self.w_i * c,
            w_h: self.w_h * c,
            w_d: self.w_d * c,
            ..*self
        }
    }
}

/// `ln(e^a + e^b)` without overflow.
pub fn logsumexp(a: f64, b: f64) -> f64 {
    let m = a.max(b);
    m + (-(a - b).abs()).exp().ln_1p()
}

/// Absolute angle between the robot heading and the bearing to `target`.
/// Zero when the target coincides with the robot position.
pub fn heading_deviation(target: &Point, pose: &RobotState) -> f64 {
    let dx = target.x - pose.x;
    let dy = target.y - pose.y;
    if dx == 0.0 && dy == 0.0 {
        return 0.0;
    }
    wrap_angle(dy.atan2(dx) - pose.yaw).abs()
}

/// Local exploration reward of a node.
pub fn node_reward(
    position: &Point,
    counts: &VoxelCounts,
    pose: &RobotState,
    w: &RewardWeights,
) -> f64 {
    let vu = counts.unknown as f64;
    let vf = counts.free as f64;
    let vo = counts.occupied as f64;
    w.w_i * (logsumexp(w.w_u * vu, w.w_f * vf) - w.w_o * vo)
        - w.w_h * heading_deviation(position, pose)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LocalParams {
    /// Half-angle of the forward cone candidates must lie in.
    pub theta_fov: f64,
    /// Rewards at or below this carry no information.
    pub r_min: f64,
    /// Candidates closer than this to the robot are skipped.
    pub min_goal_dist: f64,
    pub segment_max_length: f64,
}

impl Default for LocalParams {
    fn default() -> Self {
        Self {
            theta_fov: FRAC_PI_2,
            r_min: LN_2,
            min_goal_dist: 0.5,
            segment_max_length: 3.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Candidate {
    pub node: NodeId,
    pub reward: f64,
    pub path_length: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LocalPlan {
    Path(PathWay),
    Exhausted,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LocalOutcome {
    pub plan: LocalPlan,
    /// Frontier nodes that passed the cone and distance filters.
    pub candidates: Vec<Candidate>,
}

/// Picks the reachable frontier node in the forward cone with the highest
/// reward. Node ids in the result refer to the sub-graph.
pub fn plan_local(
    graph: &SubGraph,
    pose: &RobotState,
    w: &RewardWeights,
    params: &LocalParams,
) -> LocalOutcome {
    let sp = shortest_paths(&graph.graph, graph.anchor);
    let origin = pose.position();
    let mut candidates = Vec::new();
    for node in graph.graph.nodes().iter().filter(|n| n.is_frontier_node) {
        if !sp.reachable(node.id) {
            continue;
        }
        if (node.position - origin).norm() < params.min_goal_dist {
            continue;
        }
        if heading_deviation(&node.position, pose) > params.theta_fov {
            continue;
        }
        let counts = node.counts.unwrap_or_default();
        candidates.push(Candidate {
            node: node.id,
            reward: node_reward(&node.position, &counts, pose, w),
            path_length: sp.cost[node.id.index()],
        });
    }
    let best = candidates
        .iter()
        .filter(|c| c.reward > params.r_min)
        .min_by(|a, b| {
            b.reward
                .total_cmp(&a.reward)
                .then(a.path_length.total_cmp(&b.path_length))
                .then(a.node.cmp(&b.node))
        });
    let plan = match best {
        None => LocalPlan::Exhausted,
        Some(c) => {
            let nodes = sp.path_to(c.node).expect("reachable");
            let mut p = PathWay::from_nodes(&graph.graph, nodes, GoalKind::LocalFrontier);
            p.reward = c.reward;
            LocalPlan::Path(p)
        }
    };
    LocalOutcome { plan, candidates }
}

/// Splits the pathway polyline into pieces no longer than `limit`, cutting
/// at vertices where possible and mid-edge only for edges longer than
/// `limit`.
pub fn segment_path(path: &PathWay, limit: f64, pathway_id: u64) -> Vec<PathSegment> {
    assert!(limit > 0.0, "segment limit must be positive");
    let pts = &path.points;
    let mut out = Vec::new();
    if pts.is_empty() {
        return out;
    }
    let push = |points: Vec<Point>, first_edge: usize, out: &mut Vec<PathSegment>| {
        let index = out.len();
        out.push(PathSegment {
            points,
            pathway_id,
            index,
            status: SegmentStatus::Pending,
            first_edge,
        });
    };
    if pts.len() == 1 {
        push(vec![pts[0]], 0, &mut out);
        return out;
    }
    let mut cur = vec![pts[0]];
    let mut cur_len = 0.0;
    let mut first_edge = 0;
    for (e, w) in pts.windows(2).enumerate() {
        let mut start = w[0];
        let end = w[1];
        let mut remaining = (end - start).norm();
        if cur_len + remaining <= limit {
            cur.push(end);
            cur_len += remaining;
            continue;
        }
        if cur.len() > 1 {
            push(std::mem::take(&mut cur), first_edge, &mut out);
        }
        while remaining > limit {
            let cut = start + (end - start) * (limit / remaining);
            push(vec![start, cut], e, &mut out);
            start = cut;
            remaining -= limit;
        }
        cur = vec![start, end];
        cur_len = remaining;
        first_edge = e;
    }
    if cur.len() > 1 {
        push(cur, first_edge, &mut out);
    }
    out
}

/// One line of the local planner log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalRecord {
    pub iteration: u64,
    pub candidates: usize,
    pub chosen: Option<u32>,
    pub reward: Option<f64>,
    pub path_length: Option<f64>,
    pub exhausted: bool,
}

impl LocalRecord {
    pub fn new(iteration: u64, outcome: &LocalOutcome, graph: &SubGraph) -> Self {
        let ids = |n: NodeId| graph.global_ids.get(n.index()).copied().unwrap_or(n).0;
        match &outcome.plan {
            LocalPlan::Exhausted => Self {
                iteration,
                candidates: outcome.candidates.len(),
                chosen: None,
                reward: None,
                path_length: None,
                exhausted: true,
            },
            LocalPlan::Path(p) => Self {
                iteration,
                candidates: outcome.candidates.len(),
                chosen: Some(ids(p.target())),
                reward: Some(p.reward),
                path_length: Some(p.length),
                exhausted: false,
            },
        }
    }
}
