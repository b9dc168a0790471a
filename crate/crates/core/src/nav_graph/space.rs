use crate::error::{Error, Result};
use crate::geometry::{Aabb, Point, Vector3};
use crate::voxel_map::PointCloud;
use crate::world_sim::RobotState;

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpaceMode {
    /// Ground robot: nodes stay within `dz` of the robot's height.
    Planar {
        dz: f64,
    },
    Full3d,
}

/// Box around the robot inside which a sub-graph is sampled.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlanningSpace {
    pub bounds: Aabb,
    pub mode: SpaceMode,
}

impl PlanningSpace {
    pub fn contains(&self, p: &Point) -> bool {
        self.bounds.contains(p)
    }
}

/// Sizing rules for the visibility-tuned planning box. Extents are
/// half-extents per axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpaceParams {
    /// Percentile (0, 100] of absolute point offsets used per axis.
    pub percentile: f64,
    pub min_extent: Vector3<f64>,
    pub max_extent: Vector3<f64>,
    /// Full box size used when the scan has no points.
    pub fallback: Option<Vector3<f64>>,
}

impl Default for SpaceParams {
    fn default() -> Self {
        Self {
            percentile: 90.0,
            min_extent: Vector3::new(2.0, 2.0, 1.0),
            max_extent: Vector3::new(15.0, 15.0, 5.0),
            fallback: Some(Vector3::new(10.0, 10.0, 4.0)),
        }
    }
}

/// Nearest-rank percentile of an unsorted sample.
pub(crate) fn percentile(values: &mut [f64], p: f64) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    let rank = ((p / 100.0) * n as f64).ceil() as usize;
    values[rank.clamp(1, n) - 1]
}

pub fn tune_planning_space(
    pose: &RobotState,
    scan: &PointCloud,
    mode: SpaceMode,
    params: &SpaceParams,
) -> Result<PlanningSpace> {
    let center = pose.position();
    let mut half = if scan.points.is_empty() {
        params.fallback.ok_or(Error::PlanningSpace)? / 2.0
    } else {
        let mut half = Vector3::zeros();
        for a in 0..3 {
            let mut offs: Vec<f64> = scan
                .points
                .iter()
                .map(|p| (p[a] - center[a]).abs())
                .collect();
            half[a] = percentile(&mut offs, params.percentile)
                .clamp(params.min_extent[a], params.max_extent[a]);
        }
        half
    };
    if let SpaceMode::Planar { dz } = mode {
        half.z = dz;
    }
    Ok(PlanningSpace {
        bounds: Aabb::centered(center, half),
        mode,
    })
}
