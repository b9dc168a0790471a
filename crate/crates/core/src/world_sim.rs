//! Ground-truth voxel world, lidar fan, scripted scene changes and
//! kinematic execution.

use std::collections::VecDeque;
use std::f64::consts::PI;
use std::fmt::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{wrap_angle, Aabb, Point, Vector3};
use crate::voxel_map::{GridSpec, PointCloud, VoxelCoord};

/// Ground truth: every voxel is either occupied or free.
#[derive(Debug, Clone, PartialEq)]
pub struct WorldModel {
    grid: GridSpec,
    occupied: Vec<bool>,
}

impl WorldModel {
    pub fn new_free(grid: GridSpec) -> Self {
        Self {
            grid,
            occupied: vec![false; grid.len()],
        }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn is_occupied(&self, c: VoxelCoord) -> Option<bool> {
        self.grid.linear(c).map(|i| self.occupied[i])
    }

    /// Free and inside the world.
    pub fn is_free_at(&self, p: &Point) -> bool {
        self.grid
            .coord_of(p)
            .and_then(|c| self.is_occupied(c))
            .is_some_and(|o| !o)
    }

    pub fn set_occupied(&mut self, c: VoxelCoord, occupied: bool) -> Result<()> {
        let i = self
            .grid
            .linear(c)
            .ok_or_else(|| Error::Config(format!("voxel {c:?} outside the world")))?;
        self.occupied[i] = occupied;
        Ok(())
    }

    pub fn occupied_count(&self) -> usize {
        self.occupied.iter().filter(|&&o| o).count()
    }

    /// Linear indices of free voxels face-connected to `start`.
    pub fn reachable_free(&self, start: &Point) -> Vec<usize> {
        let Some(s) = self.grid.coord_of(start) else {
            return Vec::new();
        };
        let si = self.grid.linear(s).unwrap();
        if self.occupied[si] {
            return Vec::new();
        }
        let mut seen = vec![false; self.grid.len()];
        let mut queue = VecDeque::from([s]);
        seen[si] = true;
        let mut out = vec![si];
        const NB: [(i64, i64, i64); 6] = [
            (1, 0, 0),
            (-1, 0, 0),
            (0, 1, 0),
            (0, -1, 0),
            (0, 0, 1),
            (0, 0, -1),
        ];
        while let Some(c) = queue.pop_front() {
            for (dx, dy, dz) in NB {
                let n = c.offset(dx, dy, dz);
                if let Some(i) = self.grid.linear(n) {
                    if !seen[i] && !self.occupied[i] {
                        seen[i] = true;
                        out.push(i);
                        queue.push_back(n);
                    }
                }
            }
        }
        out.sort_unstable();
        out
    }
}

/// Parses the world text format:
///
/// ```text
/// dims X Y Z resolution R origin OX OY OZ
/// o ix iy iz
/// ```
///
/// One `o` line per occupied voxel; unlisted voxels are free. Blank lines
/// and lines starting with `#` are ignored.
pub fn parse_world(text: &str) -> Result<WorldModel> {
    const SRC: &str = "world";
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
    let (n, header) = lines
        .next()
        .ok_or_else(|| Error::parse(SRC, 1, "missing header line"))?;
    let t: Vec<&str> = header.split_whitespace().collect();
    if t.len() != 10 || t[0] != "dims" || t[4] != "resolution" || t[6] != "origin" {
        return Err(Error::parse(
            SRC,
            n,
            "expected `dims X Y Z resolution R origin OX OY OZ`",
        ));
    }
    let int = |s: &str| -> Result<usize> {
        s.parse()
            .map_err(|_| Error::parse(SRC, n, format!("bad integer `{s}`")))
    };
    let float = |s: &str| -> Result<f64> {
        s.parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| Error::parse(SRC, n, format!("bad number `{s}`")))
    };
    let dims = [int(t[1])?, int(t[2])?, int(t[3])?];
    let res = float(t[5])?;
    let origin = Point::new(float(t[7])?, float(t[8])?, float(t[9])?);
    let grid = GridSpec::new(origin, dims, res).map_err(|e| Error::parse(SRC, n, e.to_string()))?;
    let mut world = WorldModel::new_free(grid);
    for (n, line) in lines {
        let t: Vec<&str> = line.split_whitespace().collect();
        if t.len() != 4 || t[0] != "o" {
            return Err(Error::parse(SRC, n, "expected `o ix iy iz`"));
        }
        let mut c = [0i64; 3];
        for (k, s) in t[1..].iter().enumerate() {
            c[k] = s
                .parse()
                .map_err(|_| Error::parse(SRC, n, format!("bad voxel index `{s}`")))?;
        }
        let c = VoxelCoord::new(c[0], c[1], c[2]);
        if !grid.contains_coord(c) {
            return Err(Error::parse(SRC, n, format!("voxel {c:?} outside dims")));
        }
        world.set_occupied(c, true)?;
    }
    Ok(world)
}

pub fn write_world(world: &WorldModel) -> String {
    let g = world.grid();
    let d = g.dims();
    let o = g.origin();
    let mut out = format!(
        "dims {} {} {} resolution {} origin {} {} {}\n",
        d[0],
        d[1],
        d[2],
        g.resolution(),
        o.x,
        o.y,
        o.z
    );
    for (i, &occ) in world.occupied.iter().enumerate() {
        if occ {
            let c = g.coord_from_linear(i);
            writeln!(out, "o {} {} {}", c.x, c.y, c.z).unwrap();
        }
    }
    out
}

/// Robot pose: position in meters, yaw in `(-π, π]`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RobotState {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub yaw: f64,
}

impl RobotState {
    pub fn new(x: f64, y: f64, z: f64, yaw: f64) -> Self {
        Self {
            x,
            y,
            z,
            yaw: wrap_angle(yaw),
        }
    }

    pub fn at(p: Point, yaw: f64) -> Self {
        Self::new(p.x, p.y, p.z, yaw)
    }

    pub fn position(&self) -> Point {
        Point::new(self.x, self.y, self.z)
    }
}

/// Spinning lidar abstracted to a fixed fan of rays.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LidarModel {
    pub max_range: f64,
    pub azimuth_count: usize,
    /// Elevation of each ring, radians.
    pub elevations: Vec<f64>,
}

impl Default for LidarModel {
    /// 16 rings over ±15°, 360 azimuth steps, 30 m range.
    fn default() -> Self {
        let rings = 16;
        let span = 30f64.to_radians();
        let elevations = (0..rings)
            .map(|i| -span / 2.0 + span * i as f64 / (rings - 1) as f64)
            .collect();
        Self {
            max_range: 30.0,
            azimuth_count: 360,
            elevations,
        }
    }
}

impl LidarModel {
    pub fn validate(&self) -> Result<()> {
        if !(self.max_range.is_finite() && self.max_range > 0.0) {
            return Err(Error::Config("lidar max_range must be positive".into()));
        }
        if self.azimuth_count < 4 {
            return Err(Error::Config(
                "lidar azimuth_count must be at least 4".into(),
            ));
        }
        if self.elevations.is_empty() || self.elevations.iter().any(|e| !e.is_finite()) {
            return Err(Error::Config("lidar needs finite elevation angles".into()));
        }
        Ok(())
    }

    /// Unit ray directions in world frame for a sensor facing `yaw`.
    pub fn directions(&self, yaw: f64) -> impl Iterator<Item = Vector3<f64>> + '_ {
        let n = self.azimuth_count;
        self.elevations.iter().flat_map(move |&el| {
            (0..n).map(move |k| {
                let az = yaw + 2.0 * PI * k as f64 / n as f64;
                Vector3::new(el.cos() * az.cos(), el.cos() * az.sin(), el.sin())
            })
        })
    }
}

/// Casts the full lidar fan from `pose`.
///
/// Hit points sit on the entry face of the first occupied voxel, nudged a
/// thousandth of a voxel toward its center so that the point unambiguously
/// belongs to that voxel. Rays leaving the world or running out of range
/// are reported as misses at full range.
pub fn sense(world: &WorldModel, lidar: &LidarModel, pose: &RobotState) -> Result<PointCloud> {
    let origin = pose.position();
    let grid = world.grid();
    match grid.coord_of(&origin).and_then(|c| world.is_occupied(c)) {
        None => return Err(Error::Simulation(format!("pose {origin:?} outside world"))),
        Some(true) => {
            return Err(Error::Simulation(format!(
                "pose {origin:?} inside an occupied voxel"
            )))
        }
        Some(false) => {}
    }
    let mut cloud = PointCloud::new(origin);
    for dir in lidar.directions(pose.yaw) {
        let end = origin + dir * lidar.max_range;
        let mut hit = None;
        for c in grid.walk(&origin, &end) {
            match world.is_occupied(c) {
                None => break,
                Some(false) => {}
                Some(true) => {
                    hit = Some(c);
                    break;
                }
            }
        }
        match hit {
            Some(c) => {
                let b = grid.voxel_box(c);
                let p = ray_box_entry(&origin, &dir, &b).map(|t| {
                    let entry = origin + dir * t;
                    entry + (b.center() - entry) * 1e-3
                });
                // A ray grazing a voxel edge may miss the box numerically.
                // Such a return is dropped rather than reported elsewhere.
                if let Some(p) = p.filter(|p| grid.coord_of(p) == Some(c)) {
                    cloud.points.push(p);
                }
            }
            None => cloud.misses.push(end),
        }
    }
    Ok(cloud)
}

/// Slab-method entry distance of a ray into a box.
fn ray_box_entry(o: &Point, dir: &Vector3<f64>, b: &Aabb) -> Option<f64> {
    let mut t0 = 0.0f64;
    let mut t1 = f64::INFINITY;
    for a in 0..3 {
        if dir[a].abs() < 1e-15 {
            if o[a] < b.min[a] || o[a] > b.max[a] {
                return None;
            }
        } else {
            let ta = (b.min[a] - o[a]) / dir[a];
            let tb = (b.max[a] - o[a]) / dir[a];
            t0 = t0.max(ta.min(tb));
            t1 = t1.min(ta.max(tb));
        }
    }
    (t0 <= t1).then_some(t0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum Trigger {
    /// Fires at the start of the given iteration (or the first later one at
    /// which the effect can be applied).
    AtIteration(u64),
    /// Fires when the robot is outside `region`. With `after_visit`, the robot
    /// must first have been inside it at some earlier iteration.
    RobotOutsideBox {
        min: [f64; 3],
        max: [f64; 3],
        #[serde(default)]
        after_visit: bool,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EffectState {
    Occupied,
    Free,
}

/// Voxels forced to a state when an event fires. Boxes are inclusive voxel
/// index ranges.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Effect {
    pub state: EffectState,
    #[serde(default)]
    pub voxels: Vec<[i64; 3]>,
    #[serde(default)]
    pub boxes: Vec<[[i64; 3]; 2]>,
}

impl Effect {
    pub fn coords(&self) -> Vec<VoxelCoord> {
        let mut out: Vec<VoxelCoord> = self
            .voxels
            .iter()
            .map(|v| VoxelCoord::new(v[0], v[1], v[2]))
            .collect();
        for [lo, hi] in &self.boxes {
            for z in lo[2]..=hi[2] {
                for y in lo[1]..=hi[1] {
                    for x in lo[0]..=hi[0] {
                        out.push(VoxelCoord::new(x, y, z));
                    }
                }
            }
        }
        out.sort_unstable();
        out.dedup();
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneEvent {
    pub id: String,
    pub trigger: Trigger,
    pub effect: Effect,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiredEvent {
    pub iteration: u64,
    pub id: String,
}

/// Scene events plus their firing state. Each fires at most once.
#[derive(Debug, Clone)]
pub struct EventSchedule {
    events: Vec<(SceneEvent, Vec<VoxelCoord>)>,
    fired: Vec<bool>,
    visited: Vec<bool>,
}

impl EventSchedule {
    /// Validates every effect voxel against the world bounds.
    pub fn new(events: Vec<SceneEvent>, grid: &GridSpec) -> Result<Self> {
        let mut out = Vec::with_capacity(events.len());
        for e in events {
            let coords = e.effect.coords();
            if let Some(c) = coords.iter().find(|c| !grid.contains_coord(**c)) {
                return Err(Error::Config(format!(
                    "event `{}` touches voxel {c:?} outside the world",
                    e.id
                )));
            }
            if let Trigger::RobotOutsideBox { min, max, .. } = &e.trigger {
                if (0..3).any(|i| min[i].partial_cmp(&max[i]).is_none_or(|o| o.is_gt())) {
                    return Err(Error::Config(format!("event `{}` has an empty box", e.id)));
                }
            }
            out.push((e, coords));
        }
        let n = out.len();
        Ok(Self {
            events: out,
            fired: vec![false; n],
            visited: vec![false; n],
        })
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn events(&self) -> impl Iterator<Item = (&SceneEvent, &[VoxelCoord])> {
        self.events.iter().map(|(e, c)| (e, c.as_slice()))
    }

    /// Fires every due event and returns the ones that fired. An
    /// occupying effect is held back while the robot stands inside one of
    /// its voxels.
    pub fn apply_events(
        &mut self,
        world: &mut WorldModel,
        iteration: u64,
        pose: &RobotState,
    ) -> Vec<FiredEvent> {
        let p = pose.position();
        let robot_voxel = world.grid().coord_of(&p);
        let mut log = Vec::new();
        for (k, (event, coords)) in self.events.iter().enumerate() {
            if self.fired[k] {
                continue;
            }
            let due = match &event.trigger {
                Trigger::AtIteration(n) => iteration >= *n,
                Trigger::RobotOutsideBox {
                    min,
                    max,
                    after_visit,
                } => {
                    let b = Aabb::new(Point::from(*min), Point::from(*max));
                    let inside = b.contains(&p);
                    if inside {
                        self.visited[k] = true;
                    }
                    !inside && (!after_visit || self.visited[k])
                }
            };
            if !due {
                continue;
            }
            let occupy = event.effect.state == EffectState::Occupied;
            if occupy && robot_voxel.is_some_and(|rv| coords.contains(&rv)) {
                continue;
            }
            for c in coords {
                world.set_occupied(*c, occupy).expect("validated at load");
            }
            self.fired[k] = true;
            log.push(FiredEvent {
                iteration,
                id: event.id.clone(),
            });
        }
        log
    }
}

/// Outcome of a kinematic move.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Advance {
    pub pose: RobotState,
    pub halted: bool,
    pub travelled: f64,
}

/// Moves along `polyline` in steps of at most `step`, starting from the
/// robot's position. The robot stops at the last safe sample before any
/// occupied (or out-of-world) voxel. Yaw follows the last step taken.
pub fn advance_along(
    world: &WorldModel,
    pose: &RobotState,
    polyline: &[Point],
    step: f64,
) -> Advance {
    let mut cur = pose.position();
    let mut yaw = pose.yaw;
    let mut travelled = 0.0;
    let step = if step > 0.0 { step } else { 0.1 };
    for target in polyline {
        loop {
            let d = target - cur;
            let len = d.norm();
            if len < 1e-9 {
                break;
            }
            let next = if len <= step {
                *target
            } else {
                cur + d * (step / len)
            };
            if !world.is_free_at(&next) {
                return Advance {
                    pose: RobotState::at(cur, yaw),
                    halted: true,
                    travelled,
                };
            }
            yaw = d.y.atan2(d.x);
            travelled += (next - cur).norm();
            cur = next;
        }
    }
    Advance {
        pose: RobotState::at(cur, yaw),
        halted: false,
        travelled,
    }
}
