//! Layered roadmap: local sub-graphs and the stitched global graph.

mod build;
mod dump;
mod global;
mod path;
mod search;
mod space;

pub use build::{
    form_connections, label_frontier_nodes, label_with_index, sample_nodes, ConnectParams,
    FrontierIndex, LabelParams, SamplingParams, SubGraph,
};
pub use dump::{parse_graph_dump, write_graph_dump, DumpNode, GraphDump};
pub use global::{GlobalGraph, StitchReport};
pub use path::{GoalKind, PathSegment, PathWay, SegmentStatus};
pub use search::{shortest_paths, ShortestPaths};
pub(crate) use space::percentile;
pub use space::{tune_planning_space, PlanningSpace, SpaceMode, SpaceParams};

use std::collections::HashMap;

use crate::geometry::Point;
use crate::voxel_map::VoxelCounts;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId(pub u32);

impl NodeId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl std::fmt::Display for NodeId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        self.0.fmt(f)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NavNode {
    pub id: NodeId,
    pub position: Point,
    pub is_frontier_node: bool,
    /// Unknown fraction of the voxels around the node, in `[0, 1]`. Zero for
    /// non-frontier nodes.
    pub volumetric_gain: f64,
    /// Voxel counts behind the gain, present for frontier nodes.
    pub counts: Option<VoxelCounts>,
    pub owning_subgraph: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EdgeStatus {
    Traversable,
    Untraversable,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NavEdge {
    /// Endpoints with `a < b`.
    pub a: NodeId,
    pub b: NodeId,
    pub length: f64,
    pub status: EdgeStatus,
}

impl NavEdge {
    pub fn other(&self, n: NodeId) -> NodeId {
        if n == self.a {
            self.b
        } else {
            self.a
        }
    }
}

/// Undirected graph with at most one edge per node pair and no self-loops.
#[derive(Debug, Clone, Default)]
pub struct Roadmap {
    nodes: Vec<NavNode>,
    edges: Vec<NavEdge>,
    adjacency: Vec<Vec<usize>>,
    pairs: HashMap<(NodeId, NodeId), usize>,
}

impl Roadmap {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_node(&mut self, position: Point, owning_subgraph: u64) -> NodeId {
        let id = NodeId(self.nodes.len() as u32);
        self.nodes.push(NavNode {
            id,
            position,
            is_frontier_node: false,
            volumetric_gain: 0.0,
            counts: None,
            owning_subgraph,
        });
        self.adjacency.push(Vec::new());
        id
    }

    /// Adds a traversable edge; returns `None` for self-loops and pairs that
    /// are already connected.
    pub fn add_edge(&mut self, a: NodeId, b: NodeId) -> Option<usize> {
        if a == b || a.index() >= self.nodes.len() || b.index() >= self.nodes.len() {
            return None;
        }
        let key = (a.min(b), a.max(b));
        if self.pairs.contains_key(&key) {
            return None;
        }
        let length = (self.nodes[a.index()].position - self.nodes[b.index()].position).norm();
        let k = self.edges.len();
        self.edges.push(NavEdge {
            a: key.0,
            b: key.1,
            length,
            status: EdgeStatus::Traversable,
        });
        self.pairs.insert(key, k);
        self.adjacency[a.index()].push(k);
        self.adjacency[b.index()].push(k);
        Some(k)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn node(&self, id: NodeId) -> &NavNode {
        &self.nodes[id.index()]
    }

    pub fn node_mut(&mut self, id: NodeId) -> &mut NavNode {
        &mut self.nodes[id.index()]
    }

    pub fn nodes(&self) -> &[NavNode] {
        &self.nodes
    }

    pub fn nodes_mut(&mut self) -> &mut [NavNode] {
        &mut self.nodes
    }

    pub fn edges(&self) -> &[NavEdge] {
        &self.edges
    }

    pub fn edge_index(&self, a: NodeId, b: NodeId) -> Option<usize> {
        self.pairs.get(&(a.min(b), a.max(b))).copied()
    }

    pub fn edge_between(&self, a: NodeId, b: NodeId) -> Option<&NavEdge> {
        self.edge_index(a, b).map(|k| &self.edges[k])
    }

    pub(crate) fn set_status(&mut self, k: usize, status: EdgeStatus) {
        self.edges[k].status = status;
    }

    /// Traversable neighbors of `n` with edge lengths.
    pub fn neighbors(&self, n: NodeId) -> impl Iterator<Item = (NodeId, f64)> + '_ {
        self.adjacency[n.index()].iter().filter_map(move |&k| {
            let e = &self.edges[k];
            (e.status == EdgeStatus::Traversable).then(|| (e.other(n), e.length))
        })
    }

    /// Nodes reachable from `start` over traversable edges.
    pub fn reachable_from(&self, start: NodeId) -> Vec<bool> {
        let mut seen = vec![false; self.nodes.len()];
        if start.index() >= self.nodes.len() {
            return seen;
        }
        let mut stack = vec![start];
        seen[start.index()] = true;
        while let Some(n) = stack.pop() {
            for (m, _) in self.neighbors(n) {
                if !seen[m.index()] {
                    seen[m.index()] = true;
                    stack.push(m);
                }
            }
        }
        seen
    }

    pub fn untraversable_count(&self) -> usize {
        self.edges
            .iter()
            .filter(|e| e.status == EdgeStatus::Untraversable)
            .count()
    }
}
