//! World model: configuration, intruder and evader state, and the conversion
//! of approaching intruders into spatio-temporal tasks.

use std::f64::consts::TAU;
use std::ops::{Add, Mul, Sub};

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Number of resamples `spawn_intruder` tries before giving up on a tick.
pub const SPAWN_RETRY_BUDGET: usize = 64;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScenarioError {
    #[error("intruder {id} at distance {distance} is not outside the airspace boundary (radius {radius})")]
    DegenerateGeometry { id: u64, distance: f64, radius: f64 },
    #[error("intruder {id} has non-positive speed {speed}")]
    ZeroSpeed { id: u64, speed: f64 },
    #[error("no spawn position satisfied the radial separation after {0} attempts")]
    SpawnFailure(usize),
    #[error("failed to parse scenario config: {0}")]
    Parse(String),
    #[error("invalid scenario field `{field}`: {reason}")]
    Invalid { field: &'static str, reason: String },
}

/// Planar point or displacement in meters.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const ZERO: Vec2 = Vec2 { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn from_polar(radius: f64, angle: f64) -> Self {
        Self::new(radius * angle.cos(), radius * angle.sin())
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn distance(self, other: Vec2) -> f64 {
        (self - other).norm()
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    /// Moves from `self` toward `target` by at most `max_step`, stopping on it.
    pub fn step_toward(self, target: Vec2, max_step: f64) -> Vec2 {
        let delta = target - self;
        let dist = delta.norm();
        if dist <= max_step || dist == 0.0 {
            target
        } else {
            self + delta * (max_step / dist)
        }
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    fn add(self, rhs: Vec2) -> Vec2 {
        Vec2::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, rhs: Vec2) -> Vec2 {
        Vec2::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl Mul<f64> for Vec2 {
    type Output = Vec2;
    fn mul(self, k: f64) -> Vec2 {
        Vec2::new(self.x * k, self.y * k)
    }
}

impl From<[f64; 2]> for Vec2 {
    fn from([x, y]: [f64; 2]) -> Self {
        Vec2::new(x, y)
    }
}

impl From<Vec2> for [f64; 2] {
    fn from(v: Vec2) -> Self {
        [v.x, v.y]
    }
}

/// All world, kinematic and algorithm parameters for one scenario.
///
/// Loaded from a flat TOML document whose keys are the field names below.
/// `consensus_max_rounds` may be omitted, in which case each allocation uses
/// `4 * agents * tasks` rounds as its safety cap.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default)]
    pub airspace_center: Vec2,
    pub airspace_radius: f64,
    pub neutralize_radius: f64,
    pub intruder_speed: f64,
    pub evader_max_speed: f64,
    #[serde(default = "default_eta")]
    pub eta: f64,
    pub num_evaders: usize,
    pub max_concurrent_intruders: usize,
    #[serde(default = "default_spawn_min")]
    pub spawn_radius_min: f64,
    #[serde(default = "default_spawn_max")]
    pub spawn_radius_max: f64,
    #[serde(default)]
    pub min_radial_separation: f64,
    #[serde(default = "default_dt")]
    pub sim_dt: f64,
    #[serde(default = "default_replan")]
    pub replan_interval: f64,
    pub max_intruders_per_epoch: usize,
    pub horizon: f64,
    #[serde(default)]
    pub rng_seed: u64,
    #[serde(default)]
    pub consensus_max_rounds: Option<usize>,
}

fn default_eta() -> f64 {
    0.5
}
fn default_spawn_min() -> f64 {
    180.0
}
fn default_spawn_max() -> f64 {
    250.0
}
fn default_dt() -> f64 {
    0.1
}
fn default_replan() -> f64 {
    0.5
}

impl Default for ScenarioConfig {
    /// Three evaders defending a 100 m airspace against six concurrent
    /// intruders at 3 m/s.
    fn default() -> Self {
        Self {
            airspace_center: Vec2::ZERO,
            airspace_radius: 100.0,
            neutralize_radius: 20.0,
            intruder_speed: 3.0,
            evader_max_speed: 4.5,
            eta: default_eta(),
            num_evaders: 3,
            max_concurrent_intruders: 6,
            spawn_radius_min: default_spawn_min(),
            spawn_radius_max: default_spawn_max(),
            min_radial_separation: 40.0,
            sim_dt: default_dt(),
            replan_interval: default_replan(),
            max_intruders_per_epoch: 30,
            horizon: 1200.0,
            rng_seed: 0,
            consensus_max_rounds: None,
        }
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<(), ScenarioError> {
        fn invalid(field: &'static str, reason: impl Into<String>) -> ScenarioError {
            ScenarioError::Invalid {
                field,
                reason: reason.into(),
            }
        }
        let finite = [
            ("airspace_radius", self.airspace_radius),
            ("neutralize_radius", self.neutralize_radius),
            ("intruder_speed", self.intruder_speed),
            ("evader_max_speed", self.evader_max_speed),
            ("eta", self.eta),
            ("spawn_radius_min", self.spawn_radius_min),
            ("spawn_radius_max", self.spawn_radius_max),
            ("min_radial_separation", self.min_radial_separation),
            ("sim_dt", self.sim_dt),
            ("replan_interval", self.replan_interval),
            ("horizon", self.horizon),
        ];
        for (field, value) in finite {
            if !value.is_finite() {
                return Err(invalid(field, format!("must be finite, got {value}")));
            }
        }
        if !self.airspace_center.is_finite() {
            return Err(invalid("airspace_center", "must be finite"));
        }
        if self.airspace_radius <= 0.0 {
            return Err(invalid("airspace_radius", "must be positive"));
        }
        if !(self.neutralize_radius > 0.0 && self.neutralize_radius < self.airspace_radius) {
            return Err(invalid(
                "neutralize_radius",
                "must satisfy 0 < r < airspace_radius",
            ));
        }
        if self.intruder_speed <= 0.0 {
            return Err(invalid("intruder_speed", "must be positive"));
        }
        if self.evader_max_speed <= self.intruder_speed {
            return Err(invalid(
                "evader_max_speed",
                format!(
                    "must exceed intruder_speed ({} <= {})",
                    self.evader_max_speed, self.intruder_speed
                ),
            ));
        }
        if !(self.eta > 0.0 && self.eta < 1.0) {
            return Err(invalid(
                "eta",
                format!("must lie in (0, 1), got {}", self.eta),
            ));
        }
        if self.num_evaders == 0 {
            return Err(invalid("num_evaders", "need at least one evader"));
        }
        if self.spawn_radius_min <= self.airspace_radius {
            return Err(invalid("spawn_radius_min", "must exceed airspace_radius"));
        }
        if self.spawn_radius_max < self.spawn_radius_min {
            return Err(invalid("spawn_radius_max", "must be >= spawn_radius_min"));
        }
        if self.min_radial_separation < 0.0 {
            return Err(invalid("min_radial_separation", "must be non-negative"));
        }
        if self.sim_dt <= 0.0 {
            return Err(invalid("sim_dt", "must be positive"));
        }
        if self.replan_interval < self.sim_dt {
            return Err(invalid("replan_interval", "must be at least sim_dt"));
        }
        if self.horizon < 0.0 {
            return Err(invalid("horizon", "must be non-negative"));
        }
        if self.consensus_max_rounds == Some(0) {
            return Err(invalid(
                "consensus_max_rounds",
                "must be positive when given",
            ));
        }
        Ok(())
    }

    /// Round cap for one allocation over `tasks` tasks.
    pub fn round_cap(&self, agents: usize, tasks: usize) -> usize {
        self.consensus_max_rounds
            .unwrap_or_else(|| (4 * agents * tasks).max(4))
    }
}

pub fn load_scenario(text: &str) -> Result<ScenarioConfig, ScenarioError> {
    let cfg: ScenarioConfig =
        toml::from_str(text).map_err(|e| ScenarioError::Parse(e.message().to_string()))?;
    cfg.validate()?;
    Ok(cfg)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IntruderStatus {
    Approaching,
    Neutralized,
    Penetrated,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntruderState {
    pub id: u64,
    pub position: Vec2,
    pub speed: f64,
    pub status: IntruderStatus,
}

impl IntruderState {
    pub fn approaching(id: u64, position: Vec2, speed: f64) -> Self {
        Self {
            id,
            position,
            speed,
            status: IntruderStatus::Approaching,
        }
    }

    pub fn is_approaching(&self) -> bool {
        self.status == IntruderStatus::Approaching
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaderState {
    pub id: usize,
    pub position: Vec2,
    pub max_speed: f64,
    pub current_path: Vec<u64>,
}

impl EvaderState {
    pub fn new(id: usize, position: Vec2, max_speed: f64) -> Self {
        Self {
            id,
            position,
            max_speed,
            current_path: Vec::new(),
        }
    }
}

/// Evaders placed evenly on the airspace boundary, the first at angle zero.
pub fn initial_evaders(cfg: &ScenarioConfig) -> Vec<EvaderState> {
    let n = cfg.num_evaders;
    (0..n)
        .map(|i| {
            let angle = TAU * i as f64 / n as f64;
            let pos = cfg.airspace_center + Vec2::from_polar(cfg.airspace_radius, angle);
            EvaderState::new(i, pos, cfg.evader_max_speed)
        })
        .collect()
}

/// Where an intruder will cross the airspace boundary, and how long until it does.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpatioTemporalTask {
    pub task_id: u64,
    pub neutral_point: Vec2,
    pub intrusion_time: f64,
}

/// Boundary crossing point of the intruder's ray toward the center.
pub fn neutralizing_point(
    intruder: &IntruderState,
    cfg: &ScenarioConfig,
) -> Result<Vec2, ScenarioError> {
    let offset = intruder.position - cfg.airspace_center;
    let distance = offset.norm();
    if !(distance > cfg.airspace_radius) {
        return Err(ScenarioError::DegenerateGeometry {
            id: intruder.id,
            distance,
            radius: cfg.airspace_radius,
        });
    }
    Ok(cfg.airspace_center + offset * (cfg.airspace_radius / distance))
}

pub fn time_of_intrusion(
    intruder: &IntruderState,
    neutral_point: Vec2,
) -> Result<f64, ScenarioError> {
    if !(intruder.speed > 0.0) {
        return Err(ScenarioError::ZeroSpeed {
            id: intruder.id,
            speed: intruder.speed,
        });
    }
    Ok(intruder.position.distance(neutral_point) / intruder.speed)
}

/// One task per approaching intruder, in input order.
///
/// Approaching intruders that sit on or inside the boundary (about to be
/// marked penetrated) or that have no speed produce no task.
pub fn tasks_from_intruders(
    intruders: &[IntruderState],
    cfg: &ScenarioConfig,
) -> Vec<SpatioTemporalTask> {
    intruders
        .iter()
        .filter(|i| i.is_approaching())
        .filter_map(|i| {
            let point = neutralizing_point(i, cfg).ok()?;
            let time = time_of_intrusion(i, point).ok()?;
            Some(SpatioTemporalTask {
                task_id: i.id,
                neutral_point: point,
                intrusion_time: time,
            })
        })
        .collect()
}

/// Samples a new approaching intruder in the spawn annulus, radially separated
/// from every approaching intruder in `existing` by at least
/// `min_radial_separation`.
pub fn spawn_intruder<R: Rng + ?Sized>(
    rng: &mut R,
    cfg: &ScenarioConfig,
    existing: &[IntruderState],
    id: u64,
) -> Result<IntruderState, ScenarioError> {
    let radii: Vec<f64> = existing
        .iter()
        .filter(|e| e.is_approaching())
        .map(|e| e.position.distance(cfg.airspace_center))
        .collect();
    for _ in 0..SPAWN_RETRY_BUDGET {
        let angle = rng.gen_range(0.0..TAU);
        let radius = if cfg.spawn_radius_max > cfg.spawn_radius_min {
            rng.gen_range(cfg.spawn_radius_min..=cfg.spawn_radius_max)
        } else {
            cfg.spawn_radius_min
        };
        if radii
            .iter()
            .all(|r| (radius - r).abs() >= cfg.min_radial_separation)
        {
            let position = cfg.airspace_center + Vec2::from_polar(radius, angle);
            return Ok(IntruderState::approaching(id, position, cfg.intruder_speed));
        }
    }
    Err(ScenarioError::SpawnFailure(SPAWN_RETRY_BUDGET))
}
