//! Global graph: stitched sub-graphs anchored at the mission home.

use std::collections::HashMap;

use log::warn;

use super::{ConnectParams, EdgeStatus, NodeId, PathWay, Roadmap, SubGraph};
use crate::geometry::{Aabb, Point};
use crate::voxel_map::OccupancyMap;

/// Outcome of inserting one sub-graph.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct StitchReport {
    /// Collision checks spent on overlap connections.
    pub checks: usize,
    /// Endpoints of every checked segment.
    pub check_segments: Vec<(Point, Point)>,
    pub overlap: Option<Aabb>,
    pub overlap_current: usize,
    pub overlap_previous: usize,
    pub edges_added: usize,
    pub nodes_added: usize,
    /// Previous sub-graph present but the planning spaces are disjoint.
    pub gap: bool,
    pub home_reachable: bool,
}

impl StitchReport {
    /// `|N_overlap|`, nodes of both sub-graphs inside the overlap box.
    pub fn overlap_nodes(&self) -> usize {
        self.overlap_current + self.overlap_previous
    }
}

#[derive(Debug, Clone)]
pub struct GlobalGraph {
    pub graph: Roadmap,
    pub home: NodeId,
    by_position: HashMap<[u64; 3], NodeId>,
}

fn key(p: &Point) -> [u64; 3] {
    [p.x.to_bits(), p.y.to_bits(), p.z.to_bits()]
}

impl GlobalGraph {
    pub fn new(home: Point) -> Self {
        let mut graph = Roadmap::new();
        let id = graph.add_node(home, 0);
        let mut by_position = HashMap::new();
        by_position.insert(key(&home), id);
        Self {
            graph,
            home: id,
            by_position,
        }
    }

    /// Rebuilds from a roadmap, e.g. a parsed dump.
    pub fn from_roadmap(graph: Roadmap, home: NodeId) -> Self {
        let by_position = graph
            .nodes()
            .iter()
            .map(|n| (key(&n.position), n.id))
            .collect();
        Self {
            graph,
            home,
            by_position,
        }
    }

    pub fn node_at(&self, p: &Point) -> Option<NodeId> {
        self.by_position.get(&key(p)).copied()
    }

    /// Replaces sampled positions within `r_merge` of an existing node by
    /// that node's exact position, then drops duplicates. Index 0 (the
    /// anchor) is left alone.
    pub fn snap_samples(&self, points: &mut Vec<Point>, space: &Aabb, r_merge: f64) {
        if points.len() <= 1 || r_merge <= 0.0 {
            return;
        }
        let near: Vec<&Point> = self
            .graph
            .nodes()
            .iter()
            .map(|n| &n.position)
            .filter(|p| space.contains(p))
            .collect();
        for p in points.iter_mut().skip(1) {
            let best = near
                .iter()
                .map(|q| ((*q - *p).norm(), *q))
                .filter(|(d, _)| *d <= r_merge)
                .min_by(|a, b| a.0.total_cmp(&b.0));
            if let Some((_, q)) = best {
                *p = *q;
            }
        }
        let mut seen = std::collections::HashSet::new();
        let anchor = key(&points[0]);
        let mut first = true;
        points.retain(|p| {
            if std::mem::take(&mut first) {
                return true;
            }
            let k = key(p);
            k != anchor && seen.insert(k)
        });
    }

    /// Inserts `current` and connects it to `previous` inside the
    /// intersection of their planning spaces. Fills `current.global_ids`.
    pub fn stitch(
        &mut self,
        current: &mut SubGraph,
        previous: Option<&SubGraph>,
        map: &OccupancyMap,
        params: &ConnectParams,
    ) -> StitchReport {
        let mut report = StitchReport::default();
        current.global_ids.clear();
        for node in current.graph.nodes() {
            let id = match self.node_at(&node.position) {
                Some(id) => id,
                None => {
                    report.nodes_added += 1;
                    let id = self.graph.add_node(node.position, current.index);
                    self.by_position.insert(key(&node.position), id);
                    id
                }
            };
            let g = self.graph.node_mut(id);
            g.is_frontier_node = node.is_frontier_node;
            g.volumetric_gain = node.volumetric_gain;
            g.counts = node.counts;
            current.global_ids.push(id);
        }
        for e in current.graph.edges() {
            let (a, b) = (
                current.global_ids[e.a.index()],
                current.global_ids[e.b.index()],
            );
            if self.graph.add_edge(a, b).is_some() {
                report.edges_added += 1;
            }
        }

        if let Some(prev) = previous {
            report.overlap = current.space.bounds.intersection(&prev.space.bounds);
            match report.overlap {
                None => {
                    report.gap = true;
                    warn!(
                        "stitch gap: sub-graph {} does not overlap sub-graph {}",
                        current.index, prev.index
                    );
                }
                Some(ov) => {
                    let cur: Vec<NodeId> = current
                        .graph
                        .nodes()
                        .iter()
                        .filter(|n| ov.contains(&n.position))
                        .map(|n| current.global_ids[n.id.index()])
                        .collect();
                    let old: Vec<NodeId> = prev
                        .global_ids
                        .iter()
                        .copied()
                        .filter(|&id| ov.contains(&self.graph.node(id).position))
                        .collect();
                    report.overlap_current = cur.len();
                    report.overlap_previous = old.len();
                    for &c in &cur {
                        for &p in &old {
                            if c == p || self.graph.edge_index(c, p).is_some() {
                                continue;
                            }
                            let pc = self.graph.node(c).position;
                            let pp = self.graph.node(p).position;
                            if !params.admits(&pc, &pp) {
                                continue;
                            }
                            report.checks += 1;
                            report.check_segments.push((pc, pp));
                            if map.is_clear(&pc, &pp) {
                                self.graph.add_edge(c, p);
                                report.edges_added += 1;
                            }
                        }
                    }
                }
            }
        }
        let anchor = current.global_ids[current.anchor.index()];
        report.home_reachable = self.graph.reachable_from(anchor)[self.home.index()];
        report
    }

    /// Marks the edges between consecutive nodes Untraversable. Returns the
    /// number of edges whose status changed.
    pub fn invalidate_nodes(&mut self, nodes: &[NodeId]) -> usize {
        let mut changed = 0;
        for w in nodes.windows(2) {
            match self.graph.edge_index(w[0], w[1]) {
                Some(k) => {
                    if self.graph.edges()[k].status == EdgeStatus::Traversable {
                        self.graph.set_status(k, EdgeStatus::Untraversable);
                        changed += 1;
                    }
                }
                None => warn!("invalidate: no edge between {} and {}", w[0], w[1]),
            }
        }
        changed
    }

    pub fn invalidate_pathway(&mut self, pathway: &PathWay) -> usize {
        self.invalidate_nodes(&pathway.nodes)
    }

    /// Re-casts every traversable edge touching `region` and marks the ones
    /// that are no longer Clear. Returns the number marked.
    pub fn sweep_region(&mut self, region: &Aabb, map: &OccupancyMap) -> usize {
        let mut hits = Vec::new();
        for (k, e) in self.graph.edges().iter().enumerate() {
            if e.status != EdgeStatus::Traversable {
                continue;
            }
            let a = self.graph.node(e.a).position;
            let b = self.graph.node(e.b).position;
            if segment_touches_box(&a, &b, region) && !map.is_clear(&a, &b) {
                hits.push(k);
            }
        }
        for &k in &hits {
            self.graph.set_status(k, EdgeStatus::Untraversable);
        }
        hits.len()
    }

    /// Nodes within `radius` of `p` with a Clear ray to it, nearest first
    /// (ties by id).
    pub fn visible_nearby(
        &self,
        p: &Point,
        radius: f64,
        map: &OccupancyMap,
        limit: usize,
    ) -> Vec<NodeId> {
        let mut cand: Vec<(f64, NodeId)> = self
            .graph
            .nodes()
            .iter()
            .map(|n| ((n.position - p).norm(), n.id))
            .filter(|(d, _)| *d <= radius)
            .collect();
        cand.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        cand.into_iter()
            .filter(|(_, id)| map.is_clear(p, &self.graph.node(*id).position))
            .take(limit)
            .map(|(_, id)| id)
            .collect()
    }

    /// Connects `node` to up to `limit` visible nodes within `radius`
    /// (excluding those it already touches). Returns the number of edges
    /// added.
    pub fn bridge(&mut self, node: NodeId, radius: f64, map: &OccupancyMap, limit: usize) -> usize {
        let p = self.graph.node(node).position;
        let targets = self.visible_nearby(&p, radius, map, limit + 1);
        let mut added = 0;
        for t in targets {
            if added >= limit {
                break;
            }
            if t != node && self.graph.add_edge(node, t).is_some() {
                added += 1;
            }
        }
        added
    }
}

/// Slab test for a segment against a box.
fn segment_touches_box(a: &Point, b: &Point, bx: &Aabb) -> bool {
    let d = b - a;
    let (mut t0, mut t1) = (0.0f64, 1.0f64);
    for i in 0..3 {
        if d[i].abs() < 1e-12 {
            if a[i] < bx.min[i] || a[i] > bx.max[i] {
                return false;
            }
        } else {
            let ta = (bx.min[i] - a[i]) / d[i];
            let tb = (bx.max[i] - a[i]) / d[i];
            t0 = t0.max(ta.min(tb));
            t1 = t1.min(ta.max(tb));
            if t0 > t1 {
                return false;
            }
        }
    }
    true
}
