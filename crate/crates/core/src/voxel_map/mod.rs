//! Three-state voxel occupancy map.
//!
//! Dense storage over a fixed box. Every voxel starts [`VoxelState::Unknown`];
//! scans clear the voxels along each ray and mark the terminal voxel
//! occupied. Frontier flags live alongside the cells so the map doubles as
//! the registry of frontiers seen so far.

mod dump;
mod grid;

pub use dump::{parse_map_dump, write_map_dump};
pub use grid::{GridSpec, VoxelCoord};

use crate::error::{Error, Result};
use crate::geometry::{Aabb, Point};

/// Occupancy state of a single voxel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
#[repr(u8)]
pub enum VoxelState {
    #[default]
    Unknown = 0,
    Free = 1,
    Occupied = 2,
}

/// A lidar scan: hit points plus the end points of rays that ran out of
/// range without a return.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PointCloud {
    pub origin: Point,
    pub points: Vec<Point>,
    pub misses: Vec<Point>,
}

impl PointCloud {
    pub fn new(origin: Point) -> Self {
        Self {
            origin,
            points: Vec::new(),
            misses: Vec::new(),
        }
    }

    pub fn is_finite(&self) -> bool {
        let fin = |p: &Point| p.x.is_finite() && p.y.is_finite() && p.z.is_finite();
        fin(&self.origin) && self.points.iter().all(fin) && self.misses.iter().all(fin)
    }
}

/// A free voxel bordering unknown space.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Frontier {
    pub coord: VoxelCoord,
    pub center: Point,
    pub unknown_neighbors: u32,
}

/// Unknown / free / occupied voxel counts around a position.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct VoxelCounts {
    pub unknown: u64,
    pub free: u64,
    pub occupied: u64,
}

impl VoxelCounts {
    pub fn total(&self) -> u64 {
        self.unknown + self.free + self.occupied
    }
}

/// Result of walking a straight segment through the map.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RayStatus {
    Clear,
    HitsOccupied,
    HitsUnknown,
}

#[derive(Debug, Clone)]
pub struct OccupancyMap {
    grid: GridSpec,
    cells: Vec<VoxelState>,
    frontier_flags: Vec<bool>,
}

impl OccupancyMap {
    pub fn new(grid: GridSpec) -> Self {
        Self {
            grid,
            cells: vec![VoxelState::Unknown; grid.len()],
            frontier_flags: vec![false; grid.len()],
        }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn resolution(&self) -> f64 {
        self.grid.resolution()
    }

    pub fn bounds(&self) -> Aabb {
        self.grid.bounds()
    }

    pub fn state(&self, c: VoxelCoord) -> Option<VoxelState> {
        self.grid.linear(c).map(|i| self.cells[i])
    }

    pub fn state_at(&self, p: &Point) -> Option<VoxelState> {
        self.grid.coord_of(p).and_then(|c| self.state(c))
    }

    pub fn set_state(&mut self, c: VoxelCoord, s: VoxelState) -> Result<()> {
        let i = self
            .grid
            .linear(c)
            .ok_or(Error::OutOfBounds([c.x as f64, c.y as f64, c.z as f64]))?;
        self.cells[i] = s;
        if s != VoxelState::Free {
            self.frontier_flags[i] = false;
        }
        Ok(())
    }

    pub(crate) fn cells(&self) -> &[VoxelState] {
        &self.cells
    }

    pub fn is_frontier(&self, c: VoxelCoord) -> bool {
        self.grid.linear(c).is_some_and(|i| self.frontier_flags[i])
    }

    /// Number of voxels that are not Unknown.
    pub fn known_count(&self) -> usize {
        self.cells
            .iter()
            .filter(|&&s| s != VoxelState::Unknown)
            .count()
    }

    /// Box of the given half-extents around `center`, clipped to the map.
    pub fn local_region(&self, center: &Point, half: f64) -> Option<Aabb> {
        let b = Aabb::centered(*center, crate::geometry::Vector3::repeat(half));
        b.intersection(&self.bounds())
    }

    /// Inserts a scan. Voxels along each ray become Free, the voxel holding
    /// each hit point becomes Occupied. Within one scan Occupied wins over
    /// Free; across scans the latest observation wins.
    pub fn integrate_scan(&mut self, scan: &PointCloud) -> Result<()> {
        let o = scan.origin;
        if self.grid.coord_of(&o).is_none() {
            return Err(Error::OutOfBounds([o.x, o.y, o.z]));
        }
        let mut free = Vec::new();
        let mut occupied = Vec::new();
        for p in &scan.points {
            let walk = self.grid.walk(&o, p);
            let (last, body) = walk.split_last().expect("walk is never empty");
            for c in body {
                match self.grid.linear(*c) {
                    Some(i) => free.push(i),
                    None => break,
                }
            }
            if let Some(i) = self.grid.linear(*last) {
                occupied.push(i);
            }
        }
        for p in &scan.misses {
            for c in self.grid.walk(&o, p) {
                match self.grid.linear(c) {
                    Some(i) => free.push(i),
                    None => break,
                }
            }
        }
        for i in free {
            self.cells[i] = VoxelState::Free;
        }
        for i in occupied {
            self.cells[i] = VoxelState::Occupied;
            self.frontier_flags[i] = false;
        }
        Ok(())
    }

    /// In-bounds Unknown voxels among the 26 neighbors of `c`.
    pub fn unknown_neighbors(&self, c: VoxelCoord) -> u32 {
        let mut n = 0;
        for dz in -1..=1 {
            for dy in -1..=1 {
                for dx in -1..=1 {
                    if dx == 0 && dy == 0 && dz == 0 {
                        continue;
                    }
                    if self.state(c.offset(dx, dy, dz)) == Some(VoxelState::Unknown) {
                        n += 1;
                    }
                }
            }
        }
        n
    }

    /// Re-labels frontiers inside `region` and returns them in linear index
    /// order. Flags in the region that no longer qualify are cleared.
    pub fn detect_frontiers(&mut self, region: &Aabb, k_min: u32) -> Vec<Frontier> {
        let Some((lo, hi)) = self.grid.clip_range(region) else {
            return Vec::new();
        };
        let mut out = Vec::new();
        for z in lo.z..=hi.z {
            for y in lo.y..=hi.y {
                for x in lo.x..=hi.x {
                    let c = VoxelCoord::new(x, y, z);
                    let i = self.grid.linear(c).expect("clipped range");
                    self.frontier_flags[i] = false;
                    if self.cells[i] != VoxelState::Free {
                        continue;
                    }
                    let unknown = self.unknown_neighbors(c);
                    if unknown >= k_min {
                        self.frontier_flags[i] = true;
                        out.push(Frontier {
                            coord: c,
                            center: self.grid.center(c),
                            unknown_neighbors: unknown,
                        });
                    }
                }
            }
        }
        out
    }

    /// All currently flagged frontiers, in linear index order.
    pub fn frontiers(&self) -> Vec<Frontier> {
        self.frontier_flags
            .iter()
            .enumerate()
            .filter(|(_, &f)| f)
            .map(|(i, _)| {
                let c = self.grid.coord_from_linear(i);
                Frontier {
                    coord: c,
                    center: self.grid.center(c),
                    unknown_neighbors: self.unknown_neighbors(c),
                }
            })
            .collect()
    }

    /// Voxel counts by state for every voxel whose center lies within
    /// `radius` of `center`. Voxels outside the map count as Unknown.
    pub fn volumetric_counts(&self, center: &Point, radius: f64) -> Result<VoxelCounts> {
        if !(radius.is_finite() && radius > 0.0) {
            return Err(Error::Parameter(format!(
                "gain radius must be positive, got {radius}"
            )));
        }
        let lo = self
            .grid
            .coord_unchecked(&(center - crate::geometry::Vector3::repeat(radius)));
        let hi = self
            .grid
            .coord_unchecked(&(center + crate::geometry::Vector3::repeat(radius)));
        let r2 = radius * radius;
        let mut counts = VoxelCounts::default();
        for z in lo.z..=hi.z {
            for y in lo.y..=hi.y {
                for x in lo.x..=hi.x {
                    let c = VoxelCoord::new(x, y, z);
                    let p = self.grid.center(c);
                    if (p - center).norm_squared() > r2 {
                        continue;
                    }
                    match self.state(c).unwrap_or(VoxelState::Unknown) {
                        VoxelState::Unknown => counts.unknown += 1,
                        VoxelState::Free => counts.free += 1,
                        VoxelState::Occupied => counts.occupied += 1,
                    }
                }
            }
        }
        Ok(counts)
    }

    /// Classifies the straight segment `from → to` by the first non-free
    /// voxel it crosses.
    pub fn raycast_status(&self, from: &Point, to: &Point) -> Result<RayStatus> {
        for p in [from, to] {
            if self.grid.coord_of(p).is_none() {
                return Err(Error::OutOfBounds([p.x, p.y, p.z]));
            }
        }
        for c in self.grid.walk_symmetric(from, to) {
            match self.state(c) {
                Some(VoxelState::Free) => {}
                Some(VoxelState::Occupied) => return Ok(RayStatus::HitsOccupied),
                Some(VoxelState::Unknown) | None => return Ok(RayStatus::HitsUnknown),
            }
        }
        Ok(RayStatus::Clear)
    }

    /// Voxels visited by [`raycast_status`](Self::raycast_status), in order.
    pub fn ray_voxels(&self, from: &Point, to: &Point) -> Vec<VoxelCoord> {
        self.grid.walk_symmetric(from, to)
    }

    /// `raycast_status(..) == Clear`, with out-of-bounds treated as blocked.
    pub fn is_clear(&self, from: &Point, to: &Point) -> bool {
        matches!(self.raycast_status(from, to), Ok(RayStatus::Clear))
    }

    /// True when no Occupied voxel lies within `radius` (box distance) of `p`.
    pub fn has_clearance(&self, p: &Point, radius: f64) -> bool {
        let r = crate::geometry::Vector3::repeat(radius);
        let lo = self.grid.coord_unchecked(&(p - r));
        let hi = self.grid.coord_unchecked(&(p + r));
        for z in lo.z..=hi.z {
            for y in lo.y..=hi.y {
                for x in lo.x..=hi.x {
                    let c = VoxelCoord::new(x, y, z);
                    if self.state(c) == Some(VoxelState::Occupied)
                        && self.grid.voxel_box(c).distance_to(p) <= radius
                    {
                        return false;
                    }
                }
            }
        }
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn map(n: usize) -> OccupancyMap {
        OccupancyMap::new(GridSpec::new(Point::origin(), [n, n, n], 1.0).unwrap())
    }

    #[test]
    fn starts_unknown() {
        let m = map(4);
        assert_eq!(m.known_count(), 0);
        assert!(m.cells().iter().all(|&s| s == VoxelState::Unknown));
    }

    #[test]
    fn empty_scan_changes_nothing() {
        let mut m = map(4);
        m.integrate_scan(&PointCloud::new(Point::new(1.5, 1.5, 1.5)))
            .unwrap();
        assert_eq!(m.known_count(), 0);
    }

    #[test]
    fn single_ray_marks_four_free_one_occupied() {
        let mut m = map(8);
        let mut scan = PointCloud::new(Point::new(0.5, 0.5, 0.5));
        scan.points.push(Point::new(4.5, 0.5, 0.5));
        m.integrate_scan(&scan).unwrap();
        for x in 0..4 {
            assert_eq!(m.state(VoxelCoord::new(x, 0, 0)), Some(VoxelState::Free));
        }
        assert_eq!(
            m.state(VoxelCoord::new(4, 0, 0)),
            Some(VoxelState::Occupied)
        );
        assert_eq!(m.known_count(), 5);
    }

    #[test]
    fn occupied_beats_free_within_scan() {
        let mut m = map(8);
        let mut scan = PointCloud::new(Point::new(0.5, 0.5, 0.5));
        // Hit at voxel 2, and a longer ray passing through voxel 2.
        scan.points.push(Point::new(2.5, 0.5, 0.5));
        scan.points.push(Point::new(6.5, 0.5, 0.5));
        m.integrate_scan(&scan).unwrap();
        assert_eq!(
            m.state(VoxelCoord::new(2, 0, 0)),
            Some(VoxelState::Occupied)
        );
        // Order of rays does not matter.
        let mut m2 = map(8);
        scan.points.reverse();
        m2.integrate_scan(&scan).unwrap();
        assert_eq!(m2.cells(), m.cells());
    }

    #[test]
    fn later_scan_flips_state() {
        let mut m = map(8);
        let mut s1 = PointCloud::new(Point::new(0.5, 0.5, 0.5));
        s1.misses.push(Point::new(6.5, 0.5, 0.5));
        m.integrate_scan(&s1).unwrap();
        assert_eq!(m.state(VoxelCoord::new(3, 0, 0)), Some(VoxelState::Free));
        let mut s2 = PointCloud::new(Point::new(0.5, 0.5, 0.5));
        s2.points.push(Point::new(3.5, 0.5, 0.5));
        m.integrate_scan(&s2).unwrap();
        assert_eq!(
            m.state(VoxelCoord::new(3, 0, 0)),
            Some(VoxelState::Occupied)
        );
    }

    #[test]
    fn out_of_bounds_origin_rejected() {
        let mut m = map(4);
        let scan = PointCloud::new(Point::new(-0.5, 0.5, 0.5));
        assert!(matches!(
            m.integrate_scan(&scan),
            Err(Error::OutOfBounds(_))
        ));
    }

    #[test]
    fn misses_are_clipped_at_bounds() {
        let mut m = map(4);
        let mut scan = PointCloud::new(Point::new(0.5, 0.5, 0.5));
        scan.misses.push(Point::new(40.5, 0.5, 0.5));
        m.integrate_scan(&scan).unwrap();
        assert_eq!(m.known_count(), 4);
    }

    #[test]
    fn frontier_isolated_free_voxel() {
        let mut m = map(5);
        let c = VoxelCoord::new(2, 2, 2);
        m.set_state(c, VoxelState::Free).unwrap();
        let f = m.detect_frontiers(&m.bounds(), 3);
        assert_eq!(f.len(), 1);
        assert_eq!(f[0].coord, c);
        assert_eq!(f[0].unknown_neighbors, 26);
        assert!(m.is_frontier(c));
    }

    #[test]
    fn no_frontier_in_unknown_or_fully_free() {
        let mut m = map(5);
        assert!(m.detect_frontiers(&m.bounds(), 3).is_empty());
        for i in 0..125 {
            let c = m.grid().coord_from_linear(i);
            m.set_state(c, VoxelState::Free).unwrap();
        }
        assert!(m.detect_frontiers(&m.bounds(), 3).is_empty());
    }

    #[test]
    fn stale_flags_cleared() {
        let mut m = map(5);
        let c = VoxelCoord::new(2, 2, 2);
        m.set_state(c, VoxelState::Free).unwrap();
        m.detect_frontiers(&m.bounds(), 3);
        for i in 0..125 {
            let c = m.grid().coord_from_linear(i);
            m.set_state(c, VoxelState::Free).unwrap();
        }
        assert!(m.is_frontier(c));
        m.detect_frontiers(&m.bounds(), 3);
        assert!(!m.is_frontier(c));
        assert!(m.frontiers().is_empty());
    }

    #[test]
    fn counts_single_voxel() {
        let mut m = map(5);
        let c = VoxelCoord::new(2, 2, 2);
        m.set_state(c, VoxelState::Free).unwrap();
        let counts = m.volumetric_counts(&m.grid().center(c), 0.4).unwrap();
        assert_eq!(
            counts,
            VoxelCounts {
                unknown: 0,
                free: 1,
                occupied: 0
            }
        );
    }

    #[test]
    fn counts_three_cube() {
        let m = map(5);
        let p = Point::new(2.5, 2.5, 2.5);
        // Corner centers sit at sqrt(3); the next ring starts at 2.
        let counts = m.volumetric_counts(&p, 3f64.sqrt() + 1e-9).unwrap();
        assert_eq!(
            counts,
            VoxelCounts {
                unknown: 27,
                free: 0,
                occupied: 0
            }
        );
    }

    #[test]
    fn counts_pad_out_of_bounds_as_unknown() {
        let mut m = map(3);
        for i in 0..27 {
            let c = m.grid().coord_from_linear(i);
            m.set_state(c, VoxelState::Free).unwrap();
        }
        let counts = m
            .volumetric_counts(&Point::new(0.5, 0.5, 0.5), 3f64.sqrt() + 1e-9)
            .unwrap();
        // 27 centers in range, 8 of them inside the map.
        assert_eq!(
            counts,
            VoxelCounts {
                unknown: 19,
                free: 8,
                occupied: 0
            }
        );
    }

    #[test]
    fn counts_reject_bad_radius() {
        let m = map(3);
        assert!(m.volumetric_counts(&Point::origin(), 0.0).is_err());
        assert!(m.volumetric_counts(&Point::origin(), -1.0).is_err());
    }

    #[test]
    fn raycast_cases() {
        let mut m = map(8);
        for x in 0..8 {
            m.set_state(VoxelCoord::new(x, 0, 0), VoxelState::Free)
                .unwrap();
        }
        let a = Point::new(0.5, 0.5, 0.5);
        assert_eq!(m.raycast_status(&a, &a).unwrap(), RayStatus::Clear);
        assert_eq!(
            m.raycast_status(&a, &Point::new(7.5, 0.5, 0.5)).unwrap(),
            RayStatus::Clear
        );
        m.set_state(VoxelCoord::new(4, 0, 0), VoxelState::Occupied)
            .unwrap();
        assert_eq!(
            m.raycast_status(&a, &Point::new(7.5, 0.5, 0.5)).unwrap(),
            RayStatus::HitsOccupied
        );
        m.set_state(VoxelCoord::new(2, 0, 0), VoxelState::Unknown)
            .unwrap();
        assert_eq!(
            m.raycast_status(&a, &Point::new(7.5, 0.5, 0.5)).unwrap(),
            RayStatus::HitsUnknown
        );
        assert!(m.raycast_status(&a, &Point::new(9.0, 0.5, 0.5)).is_err());
    }

    #[test]
    fn clearance_uses_box_distance() {
        let mut m = map(5);
        m.set_state(VoxelCoord::new(3, 2, 2), VoxelState::Occupied)
            .unwrap();
        // Voxel (3,2,2) spans x in [3,4]; point at x=2.5 is 0.5 away.
        assert!(!m.has_clearance(&Point::new(2.5, 2.5, 2.5), 0.5));
        assert!(m.has_clearance(&Point::new(2.5, 2.5, 2.5), 0.49));
    }
}
