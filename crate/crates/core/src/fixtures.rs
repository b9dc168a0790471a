//! Synthetic worlds and scenarios used by the shipped fixtures.
//!
//! All worlds have a solid floor and ceiling layer; free space is carved
//! out of solid rock. [`shell_only`] drops occupied voxels that touch no
//! free voxel so the world files stay small.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::geometry::Point;
use crate::mission::{PlannerConfig, Scenario};
use crate::nav_graph::SpaceMode;
use crate::voxel_map::{GridSpec, VoxelCoord};
use crate::world_sim::{
    write_world, Effect, EffectState, LidarModel, RobotState, SceneEvent, Trigger, WorldModel,
};

pub const RES: f64 = 0.5;

fn solid(dims: [usize; 3]) -> WorldModel {
    let grid = GridSpec::new(Point::origin(), dims, RES).expect("valid fixture grid");
    let mut w = WorldModel::new_free(grid);
    for i in 0..grid.len() {
        w.set_occupied(grid.coord_from_linear(i), true)
            .expect("in bounds");
    }
    w
}

/// Frees the inclusive voxel box in the horizontal plane across the
/// given layers.
fn carve(w: &mut WorldModel, x: [i64; 2], y: [i64; 2], z: [i64; 2]) {
    for zz in z[0]..=z[1] {
        for yy in y[0]..=y[1] {
            for xx in x[0]..=x[1] {
                w.set_occupied(VoxelCoord::new(xx, yy, zz), false)
                    .expect("in bounds");
            }
        }
    }
}

/// Marks as free every occupied voxel with no free 26-neighbor. Such
/// voxels form sealed pockets nobody can reach or see.
pub fn shell_only(w: &WorldModel) -> WorldModel {
    let grid = *w.grid();
    let mut out = w.clone();
    for i in 0..grid.len() {
        let c = grid.coord_from_linear(i);
        if w.is_occupied(c) != Some(true) {
            continue;
        }
        let mut touches_free = false;
        'n: for dz in -1..=1 {
            for dy in -1..=1 {
                for dx in -1..=1 {
                    if w.is_occupied(c.offset(dx, dy, dz)) == Some(false) {
                        touches_free = true;
                        break 'n;
                    }
                }
            }
        }
        if !touches_free {
            out.set_occupied(c, false).expect("in bounds");
        }
    }
    out
}

/// Layers 1..=3 are free in every corridor (1.5 m of headroom).
const LAYERS: [i64; 2] = [1, 3];

/// Door voxels of [`door_world`] (inclusive box).
pub const DOOR: [[i64; 3]; 2] = [[30, 2, 1], [30, 5, 3]];

/// 60 × 20 × 5 voxels: a home corridor running east through a door into
/// a room, with two arms branching north off the corridor.
pub fn door_world() -> WorldModel {
    let mut w = solid([60, 20, 5]);
    carve(&mut w, [1, 29], [2, 5], LAYERS); // home corridor
    carve(&mut w, [30, 30], [2, 5], LAYERS); // doorway
    carve(&mut w, [31, 58], [1, 18], LAYERS); // room
    carve(&mut w, [2, 5], [6, 18], LAYERS); // west arm
    carve(&mut w, [16, 19], [6, 18], LAYERS); // middle arm
    shell_only(&w)
}

fn ground_planner() -> PlannerConfig {
    PlannerConfig {
        mode: SpaceMode::Planar { dz: 0.25 },
        // Voxels in wall-floor creases can never be hit by a ray. A free
        // voxel next to a straight crease sees 3 of them, one in an inner
        // corner 7; an open unknown face contributes 9.
        k_min: 8,
        // Floor and ceiling hits crowd the near field; a high percentile
        // lets the planning space follow a corridor.
        percentile: 98.0,
        ..PlannerConfig::default()
    }
}

/// Closes the door once the robot has left the start area. With `gap`
/// the two northern rows stay open, a 1 m gap.
pub fn door_close_event(gap: bool) -> SceneEvent {
    let [lo, hi] = DOOR;
    let hi = if gap { [hi[0], hi[1] - 2, hi[2]] } else { hi };
    SceneEvent {
        id: if gap { "door_half_close" } else { "door_close" }.into(),
        trigger: Trigger::RobotOutsideBox {
            min: [11.5, 0.5, 0.0],
            max: [15.0, 3.5, 2.5],
            after_visit: true,
        },
        effect: Effect {
            state: EffectState::Occupied,
            voxels: vec![],
            boxes: vec![[lo, hi]],
        },
    }
}

pub fn door_scenario(world_file: &str, gap: bool) -> Scenario {
    Scenario {
        world: world_file.into(),
        seed: 7,
        max_iterations: 400,
        start: RobotState::new(13.25, 1.75, 1.25, std::f64::consts::PI),
        lidar: LidarModel::default(),
        planner: ground_planner(),
        rough: vec![],
        events: vec![door_close_event(gap)],
    }
}

/// 40 × 40 × 5 empty room.
pub fn open_room() -> WorldModel {
    let mut w = solid([40, 40, 5]);
    carve(&mut w, [1, 38], [1, 38], LAYERS);
    shell_only(&w)
}

pub fn open_room_scenario(world_file: &str) -> Scenario {
    Scenario {
        world: world_file.into(),
        seed: 3,
        max_iterations: 300,
        start: RobotState::new(5.25, 5.25, 1.25, 0.0),
        lidar: LidarModel::default(),
        planner: ground_planner(),
        rough: vec![],
        events: vec![],
    }
}

/// Cell pitch of the maze, in voxels. Each cell is a 3×3-voxel chamber
/// with 2-voxel walls.
const PITCH: i64 = 5;

/// 100 × 100 × 6 maze with irregular chambers. A depth-first carve gives
/// a spanning tree of passages, extra openings add loops and chambers of
/// varying size make it cave-like.
pub fn cave_maze(seed: u64) -> WorldModel {
    let mut w = solid([100, 100, 6]);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cells = (100 - 2) / PITCH; // 19 per side
    let layers = [1, 4];
    let origin = |c: i64| 2 + c * PITCH;
    let n = (cells * cells) as usize;
    let mut seen = vec![false; n];
    let mut stack = vec![(0i64, 0i64)];
    seen[0] = true;
    let open = |w: &mut WorldModel, a: (i64, i64), b: (i64, i64)| {
        let (x0, y0) = (origin(a.0.min(b.0)), origin(a.1.min(b.1)));
        let (x1, y1) = (origin(a.0.max(b.0)) + 2, origin(a.1.max(b.1)) + 2);
        carve(w, [x0, x1], [y0, y1], layers);
    };
    for cx in 0..cells {
        for cy in 0..cells {
            let (x, y) = (origin(cx), origin(cy));
            carve(&mut w, [x, x + 2], [y, y + 2], layers);
        }
    }
    while let Some(&(cx, cy)) = stack.last() {
        let mut nbrs = Vec::new();
        for (dx, dy) in [(1, 0), (-1, 0), (0, 1), (0, -1)] {
            let (nx, ny) = (cx + dx, cy + dy);
            if nx >= 0 && ny >= 0 && nx < cells && ny < cells && !seen[(nx + cells * ny) as usize] {
                nbrs.push((nx, ny));
            }
        }
        if nbrs.is_empty() {
            stack.pop();
            continue;
        }
        let next = nbrs[rng.random_range(0..nbrs.len())];
        seen[(next.0 + cells * next.1) as usize] = true;
        open(&mut w, (cx, cy), next);
        stack.push(next);
    }
    // Loops.
    for _ in 0..(cells * cells / 8) {
        let a = (rng.random_range(0..cells - 1), rng.random_range(0..cells));
        let b = if rng.random_bool(0.5) {
            (a.0 + 1, a.1)
        } else {
            (a.0, (a.1 + 1).min(cells - 1))
        };
        if a != b {
            open(&mut w, a, b);
        }
    }
    // Irregular chambers: grow some by one voxel east and/or north. Cells
    // only grow in the positive directions, so at least one wall voxel
    // always separates neighbors and no hairline cracks appear.
    for cx in 0..cells {
        for cy in 0..cells {
            let (x, y) = (origin(cx), origin(cy));
            let gx = i64::from(cx + 1 < cells && rng.random_bool(0.4));
            let gy = i64::from(cy + 1 < cells && rng.random_bool(0.4));
            carve(&mut w, [x, x + 2 + gx], [y, y + 2 + gy], layers);
        }
    }
    shell_only(&w)
}

pub fn cave_scenario(world_file: &str, seed: u64) -> Scenario {
    Scenario {
        world: world_file.into(),
        seed,
        max_iterations: 3000,
        start: RobotState::new(1.75, 1.75, 1.25, 0.0),
        lidar: LidarModel::default(),
        planner: PlannerConfig {
            // The maze box is mostly rock, so more samples are drawn, and
            // side openings are labelled from nodes in the passing
            // corridor.
            n_samples: 300,
            r_label: 2.0,
            ..ground_planner()
        },
        rough: vec![],
        events: vec![],
    }
}

/// Every shipped fixture file as `(file name, contents)`.
pub fn shipped() -> Vec<(&'static str, String)> {
    let json = |s: &Scenario| serde_json::to_string_pretty(s).expect("scenario serializes") + "\n";
    vec![
        ("door.world", write_world(&door_world())),
        ("door.json", json(&door_scenario("door.world", false))),
        ("door_half.json", json(&door_scenario("door.world", true))),
        ("open_room.world", write_world(&open_room())),
        (
            "open_room.json",
            json(&open_room_scenario("open_room.world")),
        ),
        ("cave.world", write_world(&cave_maze(11))),
        ("cave.json", json(&cave_scenario("cave.world", 1))),
    ]
}
