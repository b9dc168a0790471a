//! Text dump of a roadmap.
//!
//! ```text
//! stage-graph 1
//! home <id>
//! n <id> <x> <y> <z> <frontier 0|1> <gain>
//! e <id1> <id2> <T|U>
//! ```
//!
//! Nodes are listed by id, edges by `(id1, id2)` with `id1 < id2`. Floats use
//! the shortest round-trip representation.

use std::fmt::Write;

use super::{EdgeStatus, GlobalGraph, NodeId, Roadmap};
use crate::geometry::Point;
use crate::{Error, Result};

const SRC: &str = "graph dump";

#[derive(Debug, Clone, PartialEq)]
pub struct DumpNode {
    pub id: NodeId,
    pub position: Point,
    pub is_frontier_node: bool,
    pub gain: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GraphDump {
    pub home: NodeId,
    pub nodes: Vec<DumpNode>,
    pub edges: Vec<(NodeId, NodeId, EdgeStatus)>,
}

impl GraphDump {
    /// Rebuilds the graph. Gains are restored without voxel counts.
    pub fn to_global(&self) -> GlobalGraph {
        let mut g = Roadmap::new();
        for n in &self.nodes {
            let id = g.add_node(n.position, 0);
            let node = g.node_mut(id);
            node.is_frontier_node = n.is_frontier_node;
            node.volumetric_gain = n.gain;
        }
        for &(a, b, s) in &self.edges {
            if let Some(k) = g.add_edge(a, b) {
                g.set_status(k, s);
            }
        }
        GlobalGraph::from_roadmap(g, self.home)
    }
}

pub fn write_graph_dump(global: &GlobalGraph) -> String {
    let g = &global.graph;
    let mut out = String::new();
    out.push_str("stage-graph 1\n");
    let _ = writeln!(out, "home {}", global.home);
    for n in g.nodes() {
        let _ = writeln!(
            out,
            "n {} {} {} {} {} {}",
            n.id,
            n.position.x,
            n.position.y,
            n.position.z,
            u8::from(n.is_frontier_node),
            n.volumetric_gain
        );
    }
    let mut edges: Vec<_> = g.edges().iter().collect();
    edges.sort_by_key(|e| (e.a, e.b));
    for e in edges {
        let s = match e.status {
            EdgeStatus::Traversable => 'T',
            EdgeStatus::Untraversable => 'U',
        };
        let _ = writeln!(out, "e {} {} {}", e.a, e.b, s);
    }
    out
}

fn parse_f(tok: &str, line: usize) -> Result<f64> {
    let v: f64 = tok
        .parse()
        .map_err(|_| Error::parse(SRC, line, format!("bad number '{tok}'")))?;
    if !v.is_finite() {
        return Err(Error::parse(SRC, line, "non-finite number"));
    }
    Ok(v)
}

fn parse_id(tok: &str, line: usize) -> Result<NodeId> {
    tok.parse()
        .map(NodeId)
        .map_err(|_| Error::parse(SRC, line, format!("bad node id '{tok}'")))
}

pub fn parse_graph_dump(text: &str) -> Result<GraphDump> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    match lines.next() {
        Some((_, "stage-graph 1")) => {}
        _ => return Err(Error::parse(SRC, 1, "expected header 'stage-graph 1'")),
    }
    let home = match lines.next() {
        Some((ln, l)) => match l.split_whitespace().collect::<Vec<_>>()[..] {
            ["home", id] => parse_id(id, ln)?,
            _ => return Err(Error::parse(SRC, ln, "expected 'home <id>'")),
        },
        None => return Err(Error::parse(SRC, 2, "missing home line")),
    };
    let mut nodes: Vec<DumpNode> = Vec::new();
    let mut edges: Vec<(NodeId, NodeId, EdgeStatus)> = Vec::new();
    for (ln, l) in lines {
        let toks: Vec<&str> = l.split_whitespace().collect();
        match toks[..] {
            ["n", id, x, y, z, f, gain] => {
                if !edges.is_empty() {
                    return Err(Error::parse(SRC, ln, "node after edges"));
                }
                let id = parse_id(id, ln)?;
                if id.index() != nodes.len() {
                    return Err(Error::parse(SRC, ln, "node ids must be consecutive from 0"));
                }
                let is_frontier_node = match f {
                    "0" => false,
                    "1" => true,
                    _ => return Err(Error::parse(SRC, ln, "frontier flag must be 0 or 1")),
                };
                let gain = parse_f(gain, ln)?;
                if gain < 0.0 {
                    return Err(Error::parse(SRC, ln, "negative gain"));
                }
                nodes.push(DumpNode {
                    id,
                    position: Point::new(parse_f(x, ln)?, parse_f(y, ln)?, parse_f(z, ln)?),
                    is_frontier_node,
                    gain,
                });
            }
            ["e", a, b, s] => {
                let (a, b) = (parse_id(a, ln)?, parse_id(b, ln)?);
                if a >= b || b.index() >= nodes.len() {
                    return Err(Error::parse(SRC, ln, "edge needs id1 < id2 < node count"));
                }
                if edges.last().is_some_and(|&(pa, pb, _)| (pa, pb) >= (a, b)) {
                    return Err(Error::parse(SRC, ln, "edges must be strictly increasing"));
                }
                let status = match s {
                    "T" => EdgeStatus::Traversable,
                    "U" => EdgeStatus::Untraversable,
                    _ => return Err(Error::parse(SRC, ln, "edge status must be T or U")),
                };
                edges.push((a, b, status));
            }
            [] => return Err(Error::parse(SRC, ln, "blank line")),
            _ => return Err(Error::parse(SRC, ln, "unrecognized line")),
        }
    }
    if home.index() >= nodes.len() {
        return Err(Error::parse(SRC, 2, "home id out of range"));
    }
    Ok(GraphDump { home, nodes, edges })
}
