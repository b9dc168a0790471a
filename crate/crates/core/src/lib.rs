//! Two-layer graph exploration planner.
//!
//! Local sub-graphs are sampled inside a visibility-sized box around the
//! robot and stitched into a global graph through their overlap. Global
//! pathways are checked segment by segment before execution so that scene
//! changes (a closed door, a collapsed passage) are detected, routed around
//! where possible, and otherwise removed from the graph.
//!
//! The crate also carries a deterministic voxel-world simulator and the
//! mission runner that ties everything together.

pub mod error;
pub mod fixtures;
pub mod geometry;
pub mod global_planner;
pub mod local_planner;
pub mod mission;
pub mod nav_graph;
pub mod traversability;
pub mod voxel_map;
pub mod world_sim;

pub use error::{Error, Result};
