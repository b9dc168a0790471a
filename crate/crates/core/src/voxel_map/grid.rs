//! Dense grid geometry and the voxel walk used by every ray operation.

use crate::error::{Error, Result};
use crate::geometry::{Aabb, Point, Vector3};

/// Integer voxel coordinate. May lie outside a grid; bounds are checked by
/// [`GridSpec`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VoxelCoord {
    pub x: i64,
    pub y: i64,
    pub z: i64,
}

impl VoxelCoord {
    pub const fn new(x: i64, y: i64, z: i64) -> Self {
        Self { x, y, z }
    }

    pub fn axis(&self, a: usize) -> i64 {
        match a {
            0 => self.x,
            1 => self.y,
            _ => self.z,
        }
    }

    fn axis_mut(&mut self, a: usize) -> &mut i64 {
        match a {
            0 => &mut self.x,
            1 => &mut self.y,
            _ => &mut self.z,
        }
    }

    pub fn offset(&self, dx: i64, dy: i64, dz: i64) -> Self {
        Self::new(self.x + dx, self.y + dy, self.z + dz)
    }
}

/// Origin, voxel counts and resolution shared by the occupancy map and the
/// ground-truth world.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    origin: Point,
    dims: [usize; 3],
    resolution: f64,
}

/// Upper bound on the voxel count of a grid.
pub const MAX_VOXELS: u128 = 1 << 27;

impl GridSpec {
    pub fn new(origin: Point, dims: [usize; 3], resolution: f64) -> Result<Self> {
        if !(resolution.is_finite() && resolution > 0.0) {
            return Err(Error::Parameter(format!(
                "resolution must be positive, got {resolution}"
            )));
        }
        if dims.contains(&0) {
            return Err(Error::Parameter(format!(
                "every dimension must be at least 1, got {dims:?}"
            )));
        }
        if dims.iter().map(|&d| d as u128).product::<u128>() > MAX_VOXELS {
            return Err(Error::Parameter(format!("grid {dims:?} is too large")));
        }
        if !(origin.x.is_finite() && origin.y.is_finite() && origin.z.is_finite()) {
            return Err(Error::Parameter("origin must be finite".into()));
        }
        Ok(Self {
            origin,
            dims,
            resolution,
        })
    }

    pub fn origin(&self) -> Point {
        self.origin
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    pub fn len(&self) -> usize {
        self.dims[0] * self.dims[1] * self.dims[2]
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn bounds(&self) -> Aabb {
        let ext = Vector3::new(
            self.dims[0] as f64,
            self.dims[1] as f64,
            self.dims[2] as f64,
        ) * self.resolution;
        Aabb::new(self.origin, self.origin + ext)
    }

    pub fn contains_coord(&self, c: VoxelCoord) -> bool {
        c.x >= 0
            && c.y >= 0
            && c.z >= 0
            && (c.x as usize) < self.dims[0]
            && (c.y as usize) < self.dims[1]
            && (c.z as usize) < self.dims[2]
    }

    /// Voxel containing `p`, whether or not it is in bounds.
    pub fn coord_unchecked(&self, p: &Point) -> VoxelCoord {
        let r = (p - self.origin) / self.resolution;
        VoxelCoord::new(r.x.floor() as i64, r.y.floor() as i64, r.z.floor() as i64)
    }

    /// Voxel containing `p`; out-of-bounds positions are rejected.
    pub fn coord_of(&self, p: &Point) -> Option<VoxelCoord> {
        if !(p.x.is_finite() && p.y.is_finite() && p.z.is_finite()) {
            return None;
        }
        let c = self.coord_unchecked(p);
        self.contains_coord(c).then_some(c)
    }

    pub fn center(&self, c: VoxelCoord) -> Point {
        self.origin
            + Vector3::new(c.x as f64 + 0.5, c.y as f64 + 0.5, c.z as f64 + 0.5) * self.resolution
    }

    pub fn voxel_box(&self, c: VoxelCoord) -> Aabb {
        let min = self.origin + Vector3::new(c.x as f64, c.y as f64, c.z as f64) * self.resolution;
        Aabb::new(min, min + Vector3::repeat(self.resolution))
    }

    pub fn linear(&self, c: VoxelCoord) -> Option<usize> {
        self.contains_coord(c)
            .then(|| (c.z as usize * self.dims[1] + c.y as usize) * self.dims[0] + c.x as usize)
    }

    pub fn coord_from_linear(&self, i: usize) -> VoxelCoord {
        let x = i % self.dims[0];
        let y = (i / self.dims[0]) % self.dims[1];
        let z = i / (self.dims[0] * self.dims[1]);
        VoxelCoord::new(x as i64, y as i64, z as i64)
    }

    /// Inclusive coordinate range covering `region`, clipped to the grid.
    pub fn clip_range(&self, region: &Aabb) -> Option<(VoxelCoord, VoxelCoord)> {
        let lo = self.coord_unchecked(&region.min);
        let hi = self.coord_unchecked(&region.max);
        let mut a = [0i64; 3];
        let mut b = [0i64; 3];
        for i in 0..3 {
            a[i] = lo.axis(i).max(0);
            b[i] = hi.axis(i).min(self.dims[i] as i64 - 1);
            if a[i] > b[i] {
                return None;
            }
        }
        Some((
            VoxelCoord::new(a[0], a[1], a[2]),
            VoxelCoord::new(b[0], b[1], b[2]),
        ))
    }

    /// Voxels crossed by the segment `from → to`, in walk order.
    ///
    /// 3D DDA voxel walk. Exact ties between axes advance the lowest axis
    /// index first. Coordinates may leave the grid; callers clip.
    pub fn walk(&self, from: &Point, to: &Point) -> Vec<VoxelCoord> {
        let mut cur = self.coord_unchecked(from);
        let end = self.coord_unchecked(to);
        let d = to - from;
        let mut step = [0i64; 3];
        let mut t_max = [f64::INFINITY; 3];
        let mut t_delta = [f64::INFINITY; 3];
        for a in 0..3 {
            if d[a] > 0.0 {
                step[a] = 1;
                let boundary = self.origin[a] + (cur.axis(a) + 1) as f64 * self.resolution;
                t_max[a] = (boundary - from[a]) / d[a];
                t_delta[a] = self.resolution / d[a];
            } else if d[a] < 0.0 {
                step[a] = -1;
                let boundary = self.origin[a] + cur.axis(a) as f64 * self.resolution;
                t_max[a] = (boundary - from[a]) / d[a];
                t_delta[a] = -self.resolution / d[a];
            }
        }
        let steps: i64 = (0..3).map(|a| (end.axis(a) - cur.axis(a)).abs()).sum();
        let mut out = Vec::with_capacity(steps as usize + 1);
        out.push(cur);
        for _ in 0..steps {
            // Only axes that still have voxels to cover are eligible.
            let mut best: Option<usize> = None;
            for a in 0..3 {
                if cur.axis(a) == end.axis(a) || step[a] == 0 {
                    continue;
                }
                match best {
                    Some(b) if t_max[a] >= t_max[b] => {}
                    _ => best = Some(a),
                }
            }
            let Some(a) = best else { break };
            *cur.axis_mut(a) += step[a];
            t_max[a] += t_delta[a];
            out.push(cur);
        }
        out
    }

    /// Walk whose voxel set does not depend on the direction of travel.
    ///
    /// The segment is always traversed from its lexicographically smaller
    /// endpoint; the result is reversed when the caller asked for the other
    /// direction.
    pub fn walk_symmetric(&self, from: &Point, to: &Point) -> Vec<VoxelCoord> {
        let key = |p: &Point| (p.x, p.y, p.z);
        if key(from) <= key(to) {
            self.walk(from, to)
        } else {
            let mut v = self.walk(to, from);
            v.reverse();
            v
        }
    }
}
