//! Global re-positioning: pathway rewards over the global graph, segment
//! checks, detours through an oriented sampling box, invalidation and
//! return-to-home.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::geometry::{Aabb, Point, Vector3};
use crate::local_planner::{node_reward, RewardWeights};
use crate::nav_graph::{
    shortest_paths, EdgeStatus, GlobalGraph, GoalKind, NodeId, PathSegment, PathWay, Roadmap,
    SegmentStatus,
};
use crate::voxel_map::{OccupancyMap, RayStatus, VoxelCounts, VoxelState};
use crate::world_sim::RobotState;

/// Sum of node rewards along the pathway minus the length penalty.
/// `counts[i]` belongs to `pathway.points[i]`.
pub fn pathway_reward(
    pathway: &PathWay,
    counts: &[VoxelCounts],
    pose: &RobotState,
    w: &RewardWeights,
) -> f64 {
    assert_eq!(counts.len(), pathway.points.len(), "one count per node");
    let sum: f64 = pathway
        .points
        .iter()
        .zip(counts)
        .map(|(p, c)| node_reward(p, c, pose, w))
        .sum();
    sum - w.w_d * pathway.length
}

#[derive(Debug, Clone, PartialEq)]
pub struct RepositionCandidate {
    pub target: NodeId,
    pub pathway: PathWay,
    pub reward: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Reposition {
    Candidate(RepositionCandidate),
    NoFrontiers,
}

/// Voxel counts per global node, filled lazily.
pub struct CountCache<'a> {
    map: &'a OccupancyMap,
    r_gain: f64,
    cache: HashMap<NodeId, VoxelCounts>,
}

impl<'a> CountCache<'a> {
    pub fn new(map: &'a OccupancyMap, r_gain: f64) -> Self {
        Self {
            map,
            r_gain,
            cache: HashMap::new(),
        }
    }

    pub fn get(&mut self, graph: &Roadmap, id: NodeId) -> VoxelCounts {
        let node = graph.node(id);
        if let Some(c) = node.counts {
            return c;
        }
        let (map, r) = (self.map, self.r_gain);
        *self
            .cache
            .entry(id)
            .or_insert_with(|| map.volumetric_counts(&node.position, r).unwrap_or_default())
    }
}

/// Evaluates every reachable frontier node of the global graph and returns
/// the pathway with the highest reward (ties: shorter, then smaller id).
pub fn plan_reposition(
    global: &GlobalGraph,
    map: &OccupancyMap,
    anchor: NodeId,
    pose: &RobotState,
    w: &RewardWeights,
    r_gain: f64,
) -> Reposition {
    let g = &global.graph;
    let sp = shortest_paths(g, anchor);
    let mut counts = CountCache::new(map, r_gain);
    let mut best: Option<RepositionCandidate> = None;
    for (target, nodes) in sp.frontier_paths(g) {
        if target == anchor {
            continue;
        }
        let pathway = PathWay::from_nodes(g, nodes, GoalKind::GlobalFrontier);
        let c: Vec<VoxelCounts> = pathway.nodes.iter().map(|&n| counts.get(g, n)).collect();
        let reward = pathway_reward(&pathway, &c, pose, w);
        let better = match &best {
            None => true,
            Some(b) => reward
                .total_cmp(&b.reward)
                .then(b.pathway.length.total_cmp(&pathway.length))
                .then(b.target.cmp(&target))
                .is_gt(),
        };
        if better {
            let mut pathway = pathway;
            pathway.reward = reward;
            best = Some(RepositionCandidate {
                target,
                pathway,
                reward,
            });
        }
    }
    match best {
        Some(c) => Reposition::Candidate(c),
        None => Reposition::NoFrontiers,
    }
}

/// Same contract as [`plan_reposition`], called after invalidation. The
/// returned pathway never uses an Untraversable edge.
pub fn replan_after_invalidation(
    global: &GlobalGraph,
    map: &OccupancyMap,
    anchor: NodeId,
    pose: &RobotState,
    w: &RewardWeights,
    r_gain: f64,
) -> Reposition {
    let out = plan_reposition(global, map, anchor, pose, w, r_gain);
    if let Reposition::Candidate(c) = &out {
        debug_assert!(uses_only_traversable(&global.graph, &c.pathway));
    }
    out
}

pub fn uses_only_traversable(graph: &Roadmap, pathway: &PathWay) -> bool {
    pathway.nodes.windows(2).all(|w| {
        graph
            .edge_between(w[0], w[1])
            .is_some_and(|e| e.status == EdgeStatus::Traversable)
    })
}

/// Shortest traversable path from `anchor` to home, `None` if home is cut
/// off.
pub fn plan_home(global: &GlobalGraph, anchor: NodeId) -> Option<PathWay> {
    let sp = shortest_paths(&global.graph, anchor);
    sp.path_to(global.home)
        .map(|nodes| PathWay::from_nodes(&global.graph, nodes, GoalKind::Home))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SegmentVerdict {
    Traversable,
    Untraversable,
}

/// Ray casts pose → first vertex → ... → last vertex against the map.
/// Unknown voxels block, and so does any vertex outside `local`.
pub fn check_segment(
    map: &OccupancyMap,
    pose: &RobotState,
    segment: &PathSegment,
    local: &Aabb,
) -> SegmentVerdict {
    if segment.points.iter().any(|p| !local.contains(p)) {
        return SegmentVerdict::Untraversable;
    }
    let mut from = pose.position();
    for p in &segment.points {
        if !matches!(map.raycast_status(&from, p), Ok(RayStatus::Clear)) {
            return SegmentVerdict::Untraversable;
        }
        from = *p;
    }
    SegmentVerdict::Traversable
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OssParams {
    pub margin: f64,
    pub o_lat: f64,
    pub o_vert: f64,
    pub n_alt: usize,
    pub r_safe: f64,
}

impl Default for OssParams {
    fn default() -> Self {
        Self {
            margin: 1.0,
            o_lat: 2.0,
            o_vert: 1.0,
            n_alt: 40,
            r_safe: 0.3,
        }
    }
}

/// Box aligned with the direction from the robot to a segment end.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrientedSamplingSpace {
    pub center: Point,
    pub axis: Vector3<f64>,
    pub lateral: Vector3<f64>,
    pub vertical: Vector3<f64>,
    /// Half-lengths along `axis`, `lateral`, `vertical`.
    pub half: [f64; 3],
}

impl OrientedSamplingSpace {
    pub fn new(pose: &RobotState, end: &Point, params: &OssParams) -> Self {
        let start = pose.position();
        let d = end - start;
        let len = d.norm();
        let axis = if len > 1e-9 {
            d / len
        } else {
            Vector3::new(pose.yaw.cos(), pose.yaw.sin(), 0.0)
        };
        let up = Vector3::z();
        let lateral = {
            let l = up.cross(&axis);
            if l.norm() > 1e-9 {
                l.normalize()
            } else {
                Vector3::y()
            }
        };
        let vertical = axis.cross(&lateral).normalize();
        Self {
            center: nalgebra::center(&start, end),
            axis,
            lateral,
            vertical,
            half: [len / 2.0 + params.margin, params.o_lat, params.o_vert],
        }
    }

    pub fn to_world(&self, u: f64, v: f64, w: f64) -> Point {
        self.center + self.axis * u + self.lateral * v + self.vertical * w
    }

    pub fn contains(&self, p: &Point) -> bool {
        let d = p - self.center;
        [self.axis, self.lateral, self.vertical]
            .iter()
            .zip(self.half)
            .all(|(a, h)| d.dot(a).abs() <= h + 1e-9)
    }

    /// Axis-aligned box enclosing the oriented box.
    pub fn bounding_box(&self) -> Aabb {
        let mut ext = Vector3::zeros();
        for i in 0..3 {
            ext[i] = self.axis[i].abs() * self.half[0]
                + self.lateral[i].abs() * self.half[1]
                + self.vertical[i].abs() * self.half[2];
        }
        Aabb::centered(self.center, ext)
    }
}

/// Searches for a Clear detour from the robot to the segment end through
/// vertices sampled in the oriented box, plus the segment's own vertices.
pub fn find_alternative(
    map: &OccupancyMap,
    pose: &RobotState,
    segment: &PathSegment,
    params: &OssParams,
    seed: u64,
) -> Option<PathSegment> {
    let end = segment.end();
    if map.state_at(&end) != Some(VoxelState::Free) {
        return None;
    }
    let oss = OrientedSamplingSpace::new(pose, &end, params);
    let mut pts = vec![pose.position()];
    for p in &segment.points {
        if !pts.contains(p) {
            pts.push(*p);
        }
    }
    let end_idx = pts.iter().position(|p| *p == end).expect("end is a vertex");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let [hu, hv, hw] = oss.half;
    for _ in 0..params.n_alt {
        let p = oss.to_world(
            rng.random_range(-hu..=hu),
            rng.random_range(-hv..=hv),
            rng.random_range(-hw..=hw),
        );
        if map.state_at(&p) == Some(VoxelState::Free) && map.has_clearance(&p, params.r_safe) {
            pts.push(p);
        }
    }
    let mut g = Roadmap::new();
    for p in &pts {
        g.add_node(*p, 0);
    }
    for i in 0..pts.len() {
        for j in (i + 1)..pts.len() {
            if map.is_clear(&pts[i], &pts[j]) {
                g.add_edge(NodeId(i as u32), NodeId(j as u32));
            }
        }
    }
    let sp = shortest_paths(&g, NodeId(0));
    let nodes = sp.path_to(NodeId(end_idx as u32))?;
    Some(PathSegment {
        points: nodes.iter().map(|n| pts[n.index()]).collect(),
        pathway_id: segment.pathway_id,
        index: segment.index,
        status: SegmentStatus::Pending,
        first_edge: segment.first_edge,
    })
}
