//! Every checked-in fuzz seed parses and survives a write/parse round trip.

use std::fs;
use std::path::PathBuf;

use stage_core::mission::Scenario;
use stage_core::nav_graph::{parse_graph_dump, write_graph_dump};
use stage_core::traversability::{parse_grid_dump, write_grid_dump};
use stage_core::voxel_map::{parse_map_dump, write_map_dump};
use stage_core::world_sim::{parse_world, write_world};

fn seeds(target: &str) -> Vec<String> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../fuzz/corpus")
        .join(target);
    let mut out: Vec<String> = fs::read_dir(dir)
        .unwrap()
        .map(|e| fs::read_to_string(e.unwrap().path()).unwrap())
        .collect();
    out.sort();
    assert!(!out.is_empty(), "no seeds for {target}");
    out
}

#[test]
fn world_seeds() {
    for s in seeds("world") {
        let w = parse_world(&s).unwrap();
        assert_eq!(parse_world(&write_world(&w)).unwrap(), w);
    }
}

#[test]
fn scenario_seeds() {
    for s in seeds("scenario") {
        let sc = Scenario::parse(&s).unwrap();
        assert_eq!(
            Scenario::parse(&serde_json::to_string(&sc).unwrap()).unwrap(),
            sc
        );
    }
}

#[test]
fn map_dump_seeds() {
    for s in seeds("map_dump") {
        let out = write_map_dump(&parse_map_dump(&s).unwrap());
        assert_eq!(write_map_dump(&parse_map_dump(&out).unwrap()), out);
    }
}

#[test]
fn graph_dump_seeds() {
    for s in seeds("graph_dump") {
        let d = parse_graph_dump(&s).unwrap();
        let out = write_graph_dump(&d.to_global());
        assert_eq!(parse_graph_dump(&out).unwrap(), d);
    }
}

#[test]
fn grid_dump_seeds() {
    for s in seeds("grid_dump") {
        let g = parse_grid_dump(&s).unwrap();
        assert_eq!(parse_grid_dump(&write_grid_dump(&g)).unwrap(), g);
    }
}
