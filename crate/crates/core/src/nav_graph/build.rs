//! Sub-graph construction: sampling, connection, pruning and frontier
//! labeling.

use kiddo::{ImmutableKdTree, SquaredEuclidean};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{NodeId, PlanningSpace, Roadmap, SpaceMode};
use crate::geometry::Point;
use crate::voxel_map::{Frontier, OccupancyMap, VoxelState};
use crate::world_sim::RobotState;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SamplingParams {
    pub n_samples: usize,
    /// Minimum distance from any occupied voxel.
    pub r_safe: f64,
    /// Draw budget as a multiple of `n_samples`.
    pub attempts_factor: usize,
}

impl Default for SamplingParams {
    fn default() -> Self {
        Self {
            n_samples: 150,
            r_safe: 0.3,
            attempts_factor: 5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConnectParams {
    pub r_conn: f64,
    /// Maximum `|Δz| / horizontal distance`; only applied in planar mode.
    pub max_slope: Option<f64>,
}

impl ConnectParams {
    pub fn for_mode(r_conn: f64, max_slope: f64, mode: SpaceMode) -> Self {
        Self {
            r_conn,
            max_slope: matches!(mode, SpaceMode::Planar { .. }).then_some(max_slope),
        }
    }

    /// Distance and slope gate, before any ray cast.
    pub fn admits(&self, a: &Point, b: &Point) -> bool {
        let d = b - a;
        let len = d.norm();
        if len < 1e-9 || len > self.r_conn {
            return false;
        }
        if let Some(s) = self.max_slope {
            let horiz = d.x.hypot(d.y);
            if horiz < 1e-12 || d.z.abs() / horiz > s {
                return false;
            }
        }
        true
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LabelParams {
    pub r_label: f64,
    pub k_nn_threshold: usize,
    pub r_gain: f64,
}

impl Default for LabelParams {
    fn default() -> Self {
        Self {
            r_label: 1.0,
            k_nn_threshold: 3,
            r_gain: 2.0,
        }
    }
}

/// Anchor at the robot followed by uniformly drawn free, clear positions.
/// Deterministic for a given seed.
pub fn sample_nodes(
    space: &PlanningSpace,
    map: &OccupancyMap,
    pose: &RobotState,
    params: &SamplingParams,
    seed: u64,
) -> Vec<Point> {
    let mut out = vec![pose.position()];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let b = &space.bounds;
    let budget = params.n_samples.max(1) * params.attempts_factor.max(1);
    let mut accepted = 0;
    for _ in 0..budget {
        if accepted >= params.n_samples {
            break;
        }
        let p = Point::new(
            rng.random_range(b.min.x..=b.max.x),
            rng.random_range(b.min.y..=b.max.y),
            rng.random_range(b.min.z..=b.max.z),
        );
        if map.state_at(&p) == Some(VoxelState::Free) && map.has_clearance(&p, params.r_safe) {
            out.push(p);
            accepted += 1;
        }
    }
    out
}

/// Index pairs `(i, j)`, `i < j`, within range whose straight segment is
/// Clear in the map.
pub fn form_connections(
    points: &[Point],
    map: &OccupancyMap,
    params: &ConnectParams,
) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for i in 0..points.len() {
        for j in (i + 1)..points.len() {
            if params.admits(&points[i], &points[j]) && map.is_clear(&points[i], &points[j]) {
                out.push((i, j));
            }
        }
    }
    out
}

/// Local roadmap anchored at the robot (node 0).
#[derive(Debug, Clone)]
pub struct SubGraph {
    pub index: u64,
    pub space: PlanningSpace,
    pub graph: Roadmap,
    pub anchor: NodeId,
    /// Global-graph id of every node, filled in by stitching.
    pub global_ids: Vec<NodeId>,
}

impl SubGraph {
    /// Builds the graph and prunes it to the anchor's connected component.
    /// `points[0]` is the anchor.
    pub fn build(
        index: u64,
        space: PlanningSpace,
        points: &[Point],
        edges: &[(usize, usize)],
    ) -> Self {
        let n = points.len();
        let mut adj = vec![Vec::new(); n];
        for &(i, j) in edges {
            adj[i].push(j);
            adj[j].push(i);
        }
        let mut keep = vec![false; n];
        if n > 0 {
            keep[0] = true;
            let mut stack = vec![0];
            while let Some(i) = stack.pop() {
                for &j in &adj[i] {
                    if !keep[j] {
                        keep[j] = true;
                        stack.push(j);
                    }
                }
            }
        }
        let mut graph = Roadmap::new();
        let mut remap = vec![None; n];
        for i in 0..n {
            if keep[i] {
                remap[i] = Some(graph.add_node(points[i], index));
            }
        }
        for &(i, j) in edges {
            if let (Some(a), Some(b)) = (remap[i], remap[j]) {
                graph.add_edge(a, b);
            }
        }
        Self {
            index,
            space,
            graph,
            anchor: NodeId(0),
            global_ids: Vec::new(),
        }
    }

    pub fn frontier_nodes(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.graph
            .nodes()
            .iter()
            .filter(|n| n.is_frontier_node)
            .map(|n| n.id)
    }
}

/// Spatial index over frontier centers.
pub struct FrontierIndex {
    tree: Option<ImmutableKdTree<f64, 3>>,
}

impl FrontierIndex {
    pub fn new(frontiers: &[Frontier]) -> Self {
        let pts: Vec<[f64; 3]> = frontiers
            .iter()
            .map(|f| [f.center.x, f.center.y, f.center.z])
            .collect();
        let tree = (!pts.is_empty())
            .then(|| ImmutableKdTree::new_from_slice(&pts).expect("non-empty finite points"));
        Self { tree }
    }

    /// Number of frontier centers within `radius` (inclusive) of `p`.
    pub fn count_within(&self, p: &Point, radius: f64) -> usize {
        match &self.tree {
            None => 0,
            Some(t) => t
                .query(&[p.x, p.y, p.z])
                .within::<SquaredEuclidean<f64>>(radius * radius)
                .unsorted()
                .execute()
                .len(),
        }
    }
}

/// Flags nodes with at least `k_nn_threshold` frontier centers within
/// `r_label` and attaches their voxel counts. Returns the number of
/// frontier nodes.
pub fn label_frontier_nodes(
    graph: &mut Roadmap,
    frontiers: &[Frontier],
    map: &OccupancyMap,
    params: &LabelParams,
) -> usize {
    let index = FrontierIndex::new(frontiers);
    label_with_index(graph, &index, map, params)
}

/// [`label_frontier_nodes`] with a prebuilt index.
pub fn label_with_index(
    graph: &mut Roadmap,
    index: &FrontierIndex,
    map: &OccupancyMap,
    params: &LabelParams,
) -> usize {
    let mut labeled = 0;
    for node in graph.nodes_mut() {
        let near = index.count_within(&node.position, params.r_label);
        if near >= params.k_nn_threshold.max(1) {
            let counts = map
                .volumetric_counts(&node.position, params.r_gain)
                .unwrap_or_default();
            node.is_frontier_node = true;
            node.volumetric_gain = if counts.total() == 0 {
                0.0
            } else {
                counts.unknown as f64 / counts.total() as f64
            };
            node.counts = Some(counts);
            labeled += 1;
        } else {
            node.is_frontier_node = false;
            node.volumetric_gain = 0.0;
            node.counts = None;
        }
    }
    labeled
}
