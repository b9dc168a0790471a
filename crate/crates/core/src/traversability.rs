//! Robot-local semantic traversability grid and segment endpoint
//! refinement.

use std::fmt::Write;

use serde::{Deserialize, Serialize};

use crate::geometry::Point;
use crate::nav_graph::PathSegment;
use crate::voxel_map::{OccupancyMap, VoxelState};
use crate::world_sim::RobotState;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TerrainClass {
    Flat,
    Rough,
    Obstacle,
    Unknown,
}

impl TerrainClass {
    pub fn score(self) -> f64 {
        match self {
            TerrainClass::Flat => 1.0,
            TerrainClass::Rough => 0.5,
            TerrainClass::Obstacle => 0.0,
            TerrainClass::Unknown => 0.25,
        }
    }

    pub fn code(self) -> char {
        match self {
            TerrainClass::Flat => 'F',
            TerrainClass::Rough => 'R',
            TerrainClass::Obstacle => 'O',
            TerrainClass::Unknown => 'U',
        }
    }

    pub fn from_code(c: char) -> Option<Self> {
        Some(match c {
            'F' => TerrainClass::Flat,
            'R' => TerrainClass::Rough,
            'O' => TerrainClass::Obstacle,
            'U' => TerrainClass::Unknown,
            _ => return None,
        })
    }
}

/// Axis-aligned rectangle in the horizontal plane marking rough terrain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RoughRegion {
    pub min: [f64; 2],
    pub max: [f64; 2],
}

impl RoughRegion {
    pub fn contains(&self, x: f64, y: f64) -> bool {
        x >= self.min[0] && x <= self.max[0] && y >= self.min[1] && y <= self.max[1]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TraversabilityParams {
    /// Half side length of the square grid.
    pub extent: f64,
    pub cell_size: f64,
    /// Vertical half-band around the robot height inspected per cell.
    pub column_half_height: f64,
    pub refine_window: f64,
}

impl Default for TraversabilityParams {
    fn default() -> Self {
        Self {
            extent: 4.0,
            cell_size: 0.25,
            column_half_height: 0.5,
            refine_window: 1.0,
        }
    }
}

/// Square grid of `side × side` cells centered on the robot and rotated
/// with its heading. Cell `(i, j)` has index `i + side * j`; `i` runs along
/// the heading, `j` to the left.
#[derive(Debug, Clone, PartialEq)]
pub struct TraversabilityGrid {
    pub center: [f64; 2],
    pub yaw: f64,
    pub cell_size: f64,
    pub side: usize,
    pub classes: Vec<TerrainClass>,
}

impl TraversabilityGrid {
    fn half(&self) -> f64 {
        self.side as f64 * self.cell_size / 2.0
    }

    /// World xy of a cell center.
    pub fn cell_center(&self, index: usize) -> [f64; 2] {
        let (i, j) = (index % self.side, index / self.side);
        let u = (i as f64 + 0.5) * self.cell_size - self.half();
        let v = (j as f64 + 0.5) * self.cell_size - self.half();
        let (s, c) = self.yaw.sin_cos();
        [
            self.center[0] + c * u - s * v,
            self.center[1] + s * u + c * v,
        ]
    }

    /// Cell containing world `(x, y)`, if inside the grid.
    pub fn cell_of(&self, x: f64, y: f64) -> Option<usize> {
        let (s, c) = self.yaw.sin_cos();
        let dx = x - self.center[0];
        let dy = y - self.center[1];
        let u = c * dx + s * dy + self.half();
        let v = -s * dx + c * dy + self.half();
        let i = (u / self.cell_size).floor();
        let j = (v / self.cell_size).floor();
        let n = self.side as f64;
        if i < 0.0 || j < 0.0 || i >= n || j >= n {
            return None;
        }
        Some(i as usize + self.side * j as usize)
    }

    pub fn class(&self, index: usize) -> TerrainClass {
        self.classes[index]
    }

    pub fn score(&self, index: usize) -> f64 {
        self.classes[index].score()
    }
}

/// Classifies the voxel column under each cell center: Obstacle if any
/// voxel in the band is Occupied, else Unknown if any is Unknown or outside
/// the map, else Flat (Rough inside an overlay region).
pub fn derive_grid(
    map: &OccupancyMap,
    overlay: &[RoughRegion],
    pose: &RobotState,
    params: &TraversabilityParams,
) -> TraversabilityGrid {
    let side = ((2.0 * params.extent / params.cell_size).round() as usize).max(1);
    let mut grid = TraversabilityGrid {
        center: [pose.x, pose.y],
        yaw: pose.yaw,
        cell_size: params.cell_size,
        side,
        classes: vec![TerrainClass::Unknown; side * side],
    };
    let res = map.resolution();
    let steps = (params.column_half_height / res).ceil() as i64;
    for idx in 0..side * side {
        let [x, y] = grid.cell_center(idx);
        let mut occupied = false;
        let mut unknown = false;
        for k in -steps..=steps {
            let z = (pose.z + k as f64 * res).clamp(
                pose.z - params.column_half_height,
                pose.z + params.column_half_height,
            );
            match map.state_at(&Point::new(x, y, z)) {
                Some(VoxelState::Occupied) => occupied = true,
                Some(VoxelState::Free) => {}
                Some(VoxelState::Unknown) | None => unknown = true,
            }
        }
        grid.classes[idx] = if occupied {
            TerrainClass::Obstacle
        } else if unknown {
            TerrainClass::Unknown
        } else if overlay.iter().any(|r| r.contains(x, y)) {
            TerrainClass::Rough
        } else {
            TerrainClass::Flat
        };
    }
    grid
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RefineFlag {
    /// Nominal endpoint kept because it scored best.
    Unchanged,
    Shifted,
    /// A higher-scoring cell existed but its approach was not Clear.
    BestRejected,
    /// Nominal endpoint outside the grid.
    OutsideGrid,
    /// The segment was already refined.
    AlreadyRefined,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RefinedSegment {
    pub segment: PathSegment,
    pub endpoint: Point,
    pub shift: f64,
    pub flag: RefineFlag,
}

/// Moves the segment endpoint to the best-scoring cell within
/// `refine_window`. Candidates are the nominal endpoint (distance zero)
/// and the centers of other cells in the window; ties go to the smaller
/// distance, then the smaller cell index. A candidate is only eligible if
/// it lies in a Free voxel and the straight approach from the previous
/// polyline vertex is Clear.
pub fn refine_segment(
    segment: &PathSegment,
    grid: &TraversabilityGrid,
    map: &OccupancyMap,
    refine_window: f64,
) -> RefinedSegment {
    let nominal = segment.end();
    let unchanged = |flag| RefinedSegment {
        segment: segment.clone(),
        endpoint: nominal,
        shift: 0.0,
        flag,
    };
    if segment.status == crate::nav_graph::SegmentStatus::Refined {
        return unchanged(RefineFlag::AlreadyRefined);
    }
    let Some(home_cell) = grid.cell_of(nominal.x, nominal.y) else {
        return unchanged(RefineFlag::OutsideGrid);
    };
    let approach = if segment.points.len() >= 2 {
        segment.points[segment.points.len() - 2]
    } else {
        segment.start()
    };

    // (score, distance, cell index, position)
    let mut cands: Vec<(f64, f64, usize, Point)> =
        vec![(grid.score(home_cell), 0.0, home_cell, nominal)];
    for idx in 0..grid.classes.len() {
        if idx == home_cell {
            continue;
        }
        let [x, y] = grid.cell_center(idx);
        let d = (x - nominal.x).hypot(y - nominal.y);
        if d <= refine_window {
            cands.push((grid.score(idx), d, idx, Point::new(x, y, nominal.z)));
        }
    }
    cands.sort_by(|a, b| {
        b.0.total_cmp(&a.0)
            .then(a.1.total_cmp(&b.1))
            .then(a.2.cmp(&b.2))
    });
    let eligible =
        |p: &Point| map.state_at(p) == Some(VoxelState::Free) && map.is_clear(&approach, p);
    let best_score = cands[0].0;
    let nominal_score = cands.iter().find(|c| c.2 == home_cell).map_or(0.0, |c| c.0);
    for (score, d, idx, p) in &cands {
        if *idx == home_cell && *d == 0.0 {
            // Reaching the nominal endpoint needs no re-check.
            let flag = if *score < best_score {
                RefineFlag::BestRejected
            } else {
                RefineFlag::Unchanged
            };
            return unchanged(flag);
        }
        if *score <= nominal_score {
            break;
        }
        if eligible(p) {
            let mut seg = segment.clone();
            *seg.points.last_mut().expect("segment has points") = *p;
            seg.status = crate::nav_graph::SegmentStatus::Refined;
            return RefinedSegment {
                segment: seg,
                endpoint: *p,
                shift: *d,
                flag: RefineFlag::Shifted,
            };
        }
    }
    unchanged(RefineFlag::BestRejected)
}

/// Text dump: header lines then one row of class codes per `j`, from
/// `j = 0`.
///
/// ```text
/// stage-trav 1
/// center <x> <y> <yaw>
/// cell <size> <side>
/// FFRRO...
/// ```
pub fn write_grid_dump(grid: &TraversabilityGrid) -> String {
    let mut out = String::from("stage-trav 1\n");
    let _ = writeln!(
        out,
        "center {} {} {}",
        grid.center[0], grid.center[1], grid.yaw
    );
    let _ = writeln!(out, "cell {} {}", grid.cell_size, grid.side);
    for row in grid.classes.chunks(grid.side) {
        out.extend(row.iter().map(|c| c.code()));
        out.push('\n');
    }
    out
}

pub fn parse_grid_dump(text: &str) -> Result<TraversabilityGrid> {
    const SRC: &str = "traversability dump";
    let lines: Vec<&str> = text.lines().collect();
    if lines.first() != Some(&"stage-trav 1") {
        return Err(Error::parse(SRC, 1, "expected header 'stage-trav 1'"));
    }
    let field = |ln: usize, name: &str| -> Result<Vec<f64>> {
        let l = lines
            .get(ln - 1)
            .ok_or_else(|| Error::parse(SRC, ln, format!("missing '{name}' line")))?;
        let mut toks = l.split_whitespace();
        if toks.next() != Some(name) {
            return Err(Error::parse(SRC, ln, format!("expected '{name}'")));
        }
        toks.map(|t| {
            t.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::parse(SRC, ln, format!("bad number '{t}'")))
        })
        .collect()
    };
    let c = field(2, "center")?;
    let k = field(3, "cell")?;
    if c.len() != 3 || k.len() != 2 {
        return Err(Error::parse(SRC, 2, "wrong field count"));
    }
    if k[0] <= 0.0 || k[1] < 1.0 || k[1].fract() != 0.0 || k[1] > 4096.0 {
        return Err(Error::parse(
            SRC,
            3,
            "cell size must be positive and side an integer in 1..=4096",
        ));
    }
    let side = k[1] as usize;
    if lines.len() != 3 + side {
        return Err(Error::parse(
            SRC,
            lines.len(),
            format!("expected {side} rows"),
        ));
    }
    let mut classes = Vec::with_capacity(side * side);
    for (r, row) in lines[3..].iter().enumerate() {
        let ln = r + 4;
        if row.chars().count() != side {
            return Err(Error::parse(SRC, ln, format!("row must have {side} cells")));
        }
        for ch in row.chars() {
            classes.push(
                TerrainClass::from_code(ch)
                    .ok_or_else(|| Error::parse(SRC, ln, format!("bad class code '{ch}'")))?,
            );
        }
    }
    Ok(TraversabilityGrid {
        center: [c[0], c[1]],
        yaw: c[2],
        cell_size: k[0],
        side,
        classes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nav_graph::SegmentStatus;
    use crate::voxel_map::{GridSpec, VoxelCoord};

    fn free_map() -> OccupancyMap {
        let grid = GridSpec::new(Point::origin(), [40, 40, 4], 0.25).unwrap();
        let mut m = OccupancyMap::new(grid);
        for i in 0..grid.len() {
            m.set_state(grid.coord_from_linear(i), VoxelState::Free)
                .unwrap();
        }
        m
    }

    fn pose() -> RobotState {
        RobotState::new(5.0, 5.0, 0.5, 0.0)
    }

    fn params() -> TraversabilityParams {
        TraversabilityParams {
            extent: 2.0,
            cell_size: 0.25,
            column_half_height: 0.25,
            refine_window: 1.0,
        }
    }

    fn segment(to: Point) -> PathSegment {
        PathSegment {
            points: vec![pose().position(), to],
            pathway_id: 0,
            index: 0,
            status: SegmentStatus::Pending,
            first_edge: 0,
        }
    }

    #[test]
    fn open_ground_is_flat() {
        let g = derive_grid(&free_map(), &[], &pose(), &params());
        assert_eq!(g.side, 16);
        assert!(g.classes.iter().all(|c| *c == TerrainClass::Flat));
    }

    #[test]
    fn wall_projects_to_obstacle_stripe() {
        let mut m = free_map();
        // Wall at x in [6.0, 6.25).
        for y in 0..40 {
            for z in 0..4 {
                m.set_state(VoxelCoord::new(24, y, z), VoxelState::Occupied)
                    .unwrap();
            }
        }
        let g = derive_grid(&m, &[], &pose(), &params());
        for idx in 0..g.classes.len() {
            let [x, _] = g.cell_center(idx);
            let expect = if (6.0..6.25).contains(&x) {
                TerrainClass::Obstacle
            } else {
                TerrainClass::Flat
            };
            assert_eq!(g.class(idx), expect, "cell {idx} at x={x}");
        }
    }

    #[test]
    fn overlay_marks_rough() {
        let region = RoughRegion {
            min: [5.0, 5.0],
            max: [6.0, 6.0],
        };
        let g = derive_grid(&free_map(), &[region], &pose(), &params());
        for idx in 0..g.classes.len() {
            let [x, y] = g.cell_center(idx);
            let expect = if region.contains(x, y) {
                TerrainClass::Rough
            } else {
                TerrainClass::Flat
            };
            assert_eq!(g.class(idx), expect);
        }
    }

    #[test]
    fn cell_lookup_round_trips_with_rotation() {
        let p = RobotState::new(5.0, 5.0, 0.5, 0.7);
        let g = derive_grid(&free_map(), &[], &p, &params());
        for idx in 0..g.classes.len() {
            let [x, y] = g.cell_center(idx);
            assert_eq!(g.cell_of(x, y), Some(idx));
        }
    }

    #[test]
    fn flat_endpoint_is_not_shifted() {
        let m = free_map();
        let g = derive_grid(&m, &[], &pose(), &params());
        let r = refine_segment(&segment(Point::new(6.1, 5.3, 0.5)), &g, &m, 1.0);
        assert_eq!(r.shift, 0.0);
        assert_eq!(r.flag, RefineFlag::Unchanged);
    }

    #[test]
    fn rough_endpoint_moves_to_adjacent_flat() {
        let m = free_map();
        let region = RoughRegion {
            min: [5.5, 4.0],
            max: [6.5, 6.0],
        };
        let g = derive_grid(&m, &[region], &pose(), &params());
        let seg = segment(Point::new(6.4, 5.1, 0.5));
        let r = refine_segment(&seg, &g, &m, 1.0);
        assert_eq!(r.flag, RefineFlag::Shifted);
        // Score-argmax oracle over the window.
        let best = (0..g.classes.len())
            .filter(|&i| {
                let [x, y] = g.cell_center(i);
                (x - 6.4f64).hypot(y - 5.1) <= 1.0
            })
            .map(|i| g.score(i))
            .fold(0.0, f64::max);
        let cell = g.cell_of(r.endpoint.x, r.endpoint.y).unwrap();
        assert_eq!(g.score(cell), best);
        assert!(r.shift <= 1.0);
        // Nearest flat cell center is (6.625, 5.125).
        assert!(
            (r.shift - 0.225f64.hypot(0.025)).abs() < 1e-9,
            "shift {}",
            r.shift
        );
        // Idempotent through the refined status.
        let again = refine_segment(&r.segment, &g, &m, 1.0);
        assert_eq!(again.shift, 0.0);
    }

    #[test]
    fn blocked_better_cell_is_rejected() {
        let mut m = free_map();
        // Rough everywhere around except a flat patch hidden behind a wall.
        let region = RoughRegion {
            min: [0.0, 0.0],
            max: [10.0, 10.0],
        };
        for y in 0..40 {
            for z in 0..4 {
                m.set_state(VoxelCoord::new(26, y, z), VoxelState::Occupied)
                    .unwrap();
            }
        }
        let g0 = derive_grid(&m, &[region], &pose(), &params());
        let mut g = g0.clone();
        let target = g.cell_of(6.9, 5.1).unwrap();
        g.classes[target] = TerrainClass::Flat;
        let r = refine_segment(&segment(Point::new(6.3, 5.1, 0.5)), &g, &m, 1.0);
        assert_eq!(r.flag, RefineFlag::BestRejected);
        assert_eq!(r.endpoint, Point::new(6.3, 5.1, 0.5));
    }

    #[test]
    fn outside_grid_is_refused() {
        let m = free_map();
        let g = derive_grid(&m, &[], &pose(), &params());
        let r = refine_segment(&segment(Point::new(9.5, 5.0, 0.5)), &g, &m, 1.0);
        assert_eq!(r.flag, RefineFlag::OutsideGrid);
    }

    #[test]
    fn dump_round_trip() {
        let g = derive_grid(
            &free_map(),
            &[RoughRegion {
                min: [5.0, 5.0],
                max: [6.0, 6.0],
            }],
            &RobotState::new(5.0, 5.0, 0.5, 0.25),
            &params(),
        );
        let text = write_grid_dump(&g);
        assert_eq!(parse_grid_dump(&text).unwrap(), g);
        assert!(parse_grid_dump("stage-trav 1\ncenter 0 0 0\ncell 1 2\nFF\nFX\n").is_err());
        assert!(parse_grid_dump("stage-trav 1\ncenter 0 0 0\ncell 1 2\nFF\n").is_err());
    }
}
