//! Scenario files and planner parameters.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::geometry::Vector3;
use crate::global_planner::OssParams;
use crate::local_planner::{LocalParams, RewardWeights};
use crate::nav_graph::{ConnectParams, LabelParams, SamplingParams, SpaceMode, SpaceParams};
use crate::traversability::{RoughRegion, TraversabilityParams};
use crate::world_sim::{
    parse_world, EventSchedule, LidarModel, RobotState, SceneEvent, WorldModel,
};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlannerKind {
    Stage,
    Baseline,
}

impl std::str::FromStr for PlannerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "stage" => Ok(PlannerKind::Stage),
            "baseline" => Ok(PlannerKind::Baseline),
            _ => Err(Error::Config(format!("unknown planner `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlannerConfig {
    pub weights: RewardWeights,
    pub local: LocalParams,
    pub mode: SpaceMode,
    pub percentile: f64,
    /// Planning-space half-extents.
    pub min_extent: [f64; 3],
    pub max_extent: [f64; 3],
    /// Full box size used when a scan has no hits.
    pub fallback: Option<[f64; 3]>,
    pub n_samples: usize,
    pub r_safe: f64,
    pub attempts_factor: usize,
    pub r_conn: f64,
    pub max_slope: f64,
    pub r_label: f64,
    pub k_nn_threshold: usize,
    pub r_gain: f64,
    /// Unknown-neighbor threshold for frontier voxels.
    pub k_min: u32,
    /// Defaults to the map resolution.
    pub r_merge: Option<f64>,
    pub oss: OssParams,
    pub traversability: TraversabilityParams,
    /// Kinematic step length.
    pub step: f64,
    pub home_tolerance: f64,
    /// Consecutive exhausted local plans before re-positioning.
    pub exhaustion_debounce: u32,
    /// Frontier labels are dropped within this radius of reached
    /// re-positioning targets.
    pub suppress_radius: f64,
    /// Edges added when bridging a disconnected anchor.
    pub bridge_limit: usize,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        Self {
            weights: RewardWeights::default(),
            local: LocalParams::default(),
            mode: SpaceMode::Full3d,
            percentile: 90.0,
            min_extent: [2.0, 2.0, 1.0],
            max_extent: [15.0, 15.0, 5.0],
            fallback: Some([10.0, 10.0, 4.0]),
            n_samples: 150,
            r_safe: 0.3,
            attempts_factor: 5,
            r_conn: 1.5,
            max_slope: 0.3,
            r_label: 1.0,
            k_nn_threshold: 3,
            r_gain: 2.0,
            k_min: 3,
            r_merge: None,
            oss: OssParams::default(),
            traversability: TraversabilityParams::default(),
            step: 0.1,
            home_tolerance: 0.5,
            exhaustion_debounce: 2,
            suppress_radius: 1.0,
            bridge_limit: 3,
        }
    }
}

impl PlannerConfig {
    pub fn validate(&self) -> Result<()> {
        self.weights.validate()?;
        let positive = [
            ("r_safe", self.r_safe),
            ("r_conn", self.r_conn),
            ("r_label", self.r_label),
            ("r_gain", self.r_gain),
            ("step", self.step),
            ("home_tolerance", self.home_tolerance),
            ("local.segment_max_length", self.local.segment_max_length),
            ("oss.margin", self.oss.margin),
            ("oss.o_lat", self.oss.o_lat),
            ("oss.o_vert", self.oss.o_vert),
            ("traversability.extent", self.traversability.extent),
            ("traversability.cell_size", self.traversability.cell_size),
            (
                "traversability.refine_window",
                self.traversability.refine_window,
            ),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Config(format!("{name} must be positive")));
            }
        }
        for i in 0..3 {
            let (lo, hi) = (self.min_extent[i], self.max_extent[i]);
            if !(lo > 0.0 && lo <= hi && hi.is_finite()) {
                return Err(Error::Config("extents must satisfy 0 < min <= max".into()));
            }
        }
        if let Some(f) = self.fallback {
            if f.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
                return Err(Error::Config("fallback box must be positive".into()));
            }
        }
        if let SpaceMode::Planar { dz } = self.mode {
            if !(dz.is_finite() && dz >= 0.0) {
                return Err(Error::Config("planar dz must be nonnegative".into()));
            }
        }
        if !(self.percentile > 0.0 && self.percentile <= 100.0) {
            return Err(Error::Config("percentile must be in (0, 100]".into()));
        }
        if self.n_samples == 0 || self.k_nn_threshold == 0 || self.k_min == 0 {
            return Err(Error::Config(
                "n_samples, k_nn_threshold and k_min must be at least 1".into(),
            ));
        }
        if !(self.max_slope.is_finite() && self.max_slope >= 0.0) {
            return Err(Error::Config("max_slope must be nonnegative".into()));
        }
        if self.r_merge.is_some_and(|r| !(r.is_finite() && r >= 0.0)) {
            return Err(Error::Config("r_merge must be nonnegative".into()));
        }
        Ok(())
    }

    pub fn space_params(&self) -> SpaceParams {
        SpaceParams {
            percentile: self.percentile,
            min_extent: Vector3::from(self.min_extent),
            max_extent: Vector3::from(self.max_extent),
            fallback: self.fallback.map(Vector3::from),
        }
    }

    pub fn sampling(&self) -> SamplingParams {
        SamplingParams {
            n_samples: self.n_samples,
            r_safe: self.r_safe,
            attempts_factor: self.attempts_factor,
        }
    }

    pub fn connect(&self) -> ConnectParams {
        ConnectParams::for_mode(self.r_conn, self.max_slope, self.mode)
    }

    pub fn label(&self) -> LabelParams {
        LabelParams {
            r_label: self.r_label,
            k_nn_threshold: self.k_nn_threshold,
            r_gain: self.r_gain,
        }
    }
}

/// Scenario file contents. `world` is relative to the scenario file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub world: PathBuf,
    #[serde(default)]
    pub seed: u64,
    pub max_iterations: u64,
    pub start: RobotState,
    #[serde(default)]
    pub lidar: LidarModel,
    #[serde(default)]
    pub planner: PlannerConfig,
    #[serde(default)]
    pub rough: Vec<RoughRegion>,
    #[serde(default)]
    pub events: Vec<SceneEvent>,
}

impl Scenario {
    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::parse("scenario", e.line(), e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_iterations == 0 {
            return Err(Error::Config("max_iterations must be at least 1".into()));
        }
        let s = &self.start;
        if ![s.x, s.y, s.z, s.yaw].iter().all(|v| v.is_finite()) {
            return Err(Error::Config("start pose must be finite".into()));
        }
        self.lidar.validate()?;
        self.planner.validate()
    }
}

/// Everything needed to run a mission.
#[derive(Debug, Clone)]
pub struct MissionConfig {
    pub scenario: Scenario,
    pub world: WorldModel,
    pub planner: PlannerKind,
}

impl MissionConfig {
    /// Builds and validates a config; checks the start pose and event
    /// voxels against the world.
    pub fn new(scenario: Scenario, world: WorldModel, planner: PlannerKind) -> Result<Self> {
        scenario.validate()?;
        if !world.is_free_at(&scenario.start.position()) {
            return Err(Error::Config("start pose is not in a free voxel".into()));
        }
        EventSchedule::new(scenario.events.clone(), world.grid())?;
        Ok(Self {
            scenario,
            world,
            planner,
        })
    }

    pub fn load(path: &Path, planner: PlannerKind) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let scenario = Scenario::parse(&text)?;
        let world_path = path
            .parent()
            .unwrap_or(Path::new("."))
            .join(&scenario.world);
        let world_text =
            std::fs::read_to_string(&world_path).map_err(|e| Error::io(&world_path, e))?;
        let world = parse_world(&world_text)?;
        Self::new(scenario, world, planner)
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.scenario.seed = seed;
        self
    }

    pub fn with_max_iterations(mut self, n: u64) -> Result<Self> {
        if n == 0 {
            return Err(Error::Config("max_iterations must be at least 1".into()));
        }
        self.scenario.max_iterations = n;
        Ok(self)
    }
}
