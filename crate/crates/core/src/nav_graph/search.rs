//! Single-source Dijkstra over traversable edges.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::{NodeId, Roadmap};

#[derive(Debug, Clone, Copy, PartialEq)]
struct Entry {
    cost: f64,
    hops: u32,
    node: NodeId,
}

impl Eq for Entry {}

impl Ord for Entry {
    // Reversed so the max-heap pops the smallest (cost, hops, node).
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .cost
            .total_cmp(&self.cost)
            .then(other.hops.cmp(&self.hops))
            .then(other.node.cmp(&self.node))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Shortest-path tree from one source. Among equal-cost routes the one with
/// fewer hops wins, then the smaller predecessor id.
#[derive(Debug, Clone, PartialEq)]
pub struct ShortestPaths {
    pub source: NodeId,
    /// `f64::INFINITY` for unreachable nodes.
    pub cost: Vec<f64>,
    pub hops: Vec<u32>,
    pub pred: Vec<Option<NodeId>>,
}

impl ShortestPaths {
    pub fn reachable(&self, n: NodeId) -> bool {
        self.cost.get(n.index()).is_some_and(|c| c.is_finite())
    }

    /// Node sequence source..=n, or `None` if unreachable.
    pub fn path_to(&self, n: NodeId) -> Option<Vec<NodeId>> {
        if !self.reachable(n) {
            return None;
        }
        let mut out = vec![n];
        let mut cur = n;
        while let Some(p) = self.pred[cur.index()] {
            out.push(p);
            cur = p;
        }
        out.reverse();
        Some(out)
    }

    /// Paths to every reachable frontier node, ordered by node id.
    pub fn frontier_paths(&self, graph: &Roadmap) -> Vec<(NodeId, Vec<NodeId>)> {
        graph
            .nodes()
            .iter()
            .filter(|n| n.is_frontier_node)
            .filter_map(|n| self.path_to(n.id).map(|p| (n.id, p)))
            .collect()
    }
}

pub fn shortest_paths(graph: &Roadmap, source: NodeId) -> ShortestPaths {
    let n = graph.len();
    let mut cost = vec![f64::INFINITY; n];
    let mut hops = vec![u32::MAX; n];
    let mut pred: Vec<Option<NodeId>> = vec![None; n];
    let mut done = vec![false; n];
    let mut heap = BinaryHeap::new();
    if source.index() < n {
        cost[source.index()] = 0.0;
        hops[source.index()] = 0;
        heap.push(Entry {
            cost: 0.0,
            hops: 0,
            node: source,
        });
    }
    while let Some(Entry {
        cost: c,
        hops: h,
        node: u,
    }) = heap.pop()
    {
        if done[u.index()] {
            continue;
        }
        done[u.index()] = true;
        for (v, w) in graph.neighbors(u) {
            let vi = v.index();
            let nc = c + w;
            let nh = h + 1;
            let better = match nc.total_cmp(&cost[vi]) {
                Ordering::Less => true,
                Ordering::Equal => nh < hops[vi],
                Ordering::Greater => false,
            };
            if better {
                cost[vi] = nc;
                hops[vi] = nh;
                pred[vi] = Some(u);
                heap.push(Entry {
                    cost: nc,
                    hops: nh,
                    node: v,
                });
            } else if nc == cost[vi] && nh == hops[vi] && pred[vi].is_some_and(|p| u < p) {
                pred[vi] = Some(u);
            }
        }
    }
    ShortestPaths {
        source,
        cost,
        hops,
        pred,
    }
}
