use crate::geometry::{polyline_length, Point};

use super::{NodeId, Roadmap};

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GoalKind {
    LocalFrontier,
    GlobalFrontier,
    Home,
}

/// Node sequence from the robot to a goal.
#[derive(Debug, Clone, PartialEq)]
pub struct PathWay {
    pub nodes: Vec<NodeId>,
    pub points: Vec<Point>,
    pub length: f64,
    pub reward: f64,
    pub goal: GoalKind,
}

impl PathWay {
    pub fn from_nodes(graph: &Roadmap, nodes: Vec<NodeId>, goal: GoalKind) -> Self {
        let points: Vec<Point> = nodes.iter().map(|n| graph.node(*n).position).collect();
        let length = nodes
            .windows(2)
            .map(|w| {
                graph
                    .edge_between(w[0], w[1])
                    .map_or(f64::NAN, |e| e.length)
            })
            .sum();
        Self {
            nodes,
            points,
            length,
            reward: 0.0,
            goal,
        }
    }

    pub fn target(&self) -> NodeId {
        *self.nodes.last().expect("pathway has at least one node")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SegmentStatus {
    Pending,
    Refined,
    Untraversable,
    Executed,
}

/// Contiguous piece of a pathway polyline, sized for one execution step.
#[derive(Debug, Clone, PartialEq)]
pub struct PathSegment {
    pub points: Vec<Point>,
    pub pathway_id: u64,
    pub index: usize,
    pub status: SegmentStatus,
    /// Pathway edge index containing this segment's first point.
    pub first_edge: usize,
}

impl PathSegment {
    pub fn start(&self) -> Point {
        self.points[0]
    }

    pub fn end(&self) -> Point {
        *self.points.last().expect("segment has points")
    }

    pub fn length(&self) -> f64 {
        polyline_length(&self.points)
    }
}
