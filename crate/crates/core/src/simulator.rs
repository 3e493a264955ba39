//! Closed-loop kinematic simulation of an airspace defense episode.
//!
//! Intruders fly straight at the airspace center. Evaders fly at full speed to
//! the neutralizing point of the first task on their path and hold there. Any
//! intruder within the neutralizing radius of an evader is neutralized; any
//! intruder reaching the boundary penetrates and ends the episode. Tasks are
//! reallocated from scratch every `replan_interval` seconds.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cbba::{resolve, AgentPath, AllocationResult};
use crate::losses::{LossError, TaskTable};
use crate::scenario::{
    initial_evaders, neutralizing_point, spawn_intruder, tasks_from_intruders, EvaderState,
    IntruderState, IntruderStatus, ScenarioConfig,
};

#[derive(Debug, Clone, PartialEq)]
pub struct WorldState {
    pub clock: f64,
    pub tick: u64,
    pub evaders: Vec<EvaderState>,
    /// Every intruder spawned so far, including neutralized and penetrated ones.
    pub intruders: Vec<IntruderState>,
    pub allocation: AllocationResult,
    pub intruders_spawned: usize,
    pub penetrations: usize,
    pub neutralizations: usize,
    next_id: u64,
}

impl WorldState {
    pub fn new(cfg: &ScenarioConfig) -> Self {
        let evaders = initial_evaders(cfg);
        let allocation = AllocationResult::empty(&evaders);
        Self {
            clock: 0.0,
            tick: 0,
            evaders,
            intruders: Vec::new(),
            allocation,
            intruders_spawned: 0,
            penetrations: 0,
            neutralizations: 0,
            next_id: 0,
        }
    }

    /// Adds an intruder, counting it as spawned. Ids must be unique.
    pub fn add_intruder(&mut self, intruder: IntruderState) {
        self.next_id = self.next_id.max(intruder.id + 1);
        self.intruders_spawned += 1;
        self.intruders.push(intruder);
    }

    pub fn approaching(&self) -> impl Iterator<Item = &IntruderState> {
        self.intruders.iter().filter(|i| i.is_approaching())
    }

    pub fn approaching_count(&self) -> usize {
        self.approaching().count()
    }

    pub fn next_intruder_id(&self) -> u64 {
        self.next_id
    }

    fn drop_task(&mut self, id: u64) {
        for e in &mut self.evaders {
            e.current_path.retain(|&t| t != id);
        }
    }

    /// Advances the world by one `sim_dt` and returns what happened.
    pub fn step(&mut self, cfg: &ScenarioConfig) -> Vec<SimEvent> {
        let dt = cfg.sim_dt;
        for intruder in self
            .intruders
            .iter_mut()
            .filter(|i| i.status == IntruderStatus::Approaching)
        {
            intruder.position = intruder
                .position
                .step_toward(cfg.airspace_center, intruder.speed * dt);
        }
        for evader in &mut self.evaders {
            let target = evader.current_path.iter().find_map(|id| {
                self.intruders
                    .iter()
                    .find(|i| i.id == *id && i.is_approaching())
                    .and_then(|i| neutralizing_point(i, cfg).ok())
            });
            if let Some(target) = target {
                evader.position = evader.position.step_toward(target, evader.max_speed * dt);
            }
        }

        self.tick += 1;
        self.clock = clock_at(self.tick, dt);
        let mut events = Vec::new();

        let mut captured = Vec::new();
        for intruder in self.intruders.iter_mut().filter(|i| i.is_approaching()) {
            let nearest = self
                .evaders
                .iter()
                .map(|e| (e.position.distance(intruder.position), e.id))
                .filter(|(d, _)| *d <= cfg.neutralize_radius)
                .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            if let Some((_, evader_id)) = nearest {
                intruder.status = IntruderStatus::Neutralized;
                captured.push(intruder.id);
                events.push(SimEvent::new(
                    self.clock,
                    EventKind::Neutralize,
                    vec![intruder.id, evader_id as u64],
                ));
            }
        }
        let mut breached = Vec::new();
        for intruder in self.intruders.iter_mut().filter(|i| i.is_approaching()) {
            if intruder.position.distance(cfg.airspace_center) <= cfg.airspace_radius {
                intruder.status = IntruderStatus::Penetrated;
                breached.push(intruder.id);
                events.push(SimEvent::new(
                    self.clock,
                    EventKind::Penetrate,
                    vec![intruder.id],
                ));
            }
        }
        self.neutralizations += captured.len();
        self.penetrations += breached.len();
        for id in captured.into_iter().chain(breached) {
            self.drop_task(id);
        }
        events
    }

    /// Rebuilds the task table, reallocates from fresh beliefs and installs the
    /// new paths.
    pub fn replan(&mut self, cfg: &ScenarioConfig) -> Result<SimEvent, LossError> {
        let tasks = tasks_from_intruders(&self.intruders, cfg);
        let table = TaskTable::from_parts(&tasks, &self.intruders);
        let allocation = resolve(&self.evaders, &table, cfg)?;
        for evader in &mut self.evaders {
            evader.current_path = allocation
                .path_of(evader.id)
                .map(<[u64]>::to_vec)
                .unwrap_or_default();
        }
        let snapshot = ReplanSnapshot::from(&allocation);
        self.allocation = allocation;
        Ok(SimEvent {
            time: self.clock,
            kind: EventKind::Replan,
            ids: Vec::new(),
            payload: Some(snapshot),
        })
    }
}

fn clock_at(tick: u64, dt: f64) -> f64 {
    // keeps the printed clock free of accumulated binary noise
    (tick as f64 * dt * 1e9).round() / 1e9
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EventKind {
    Spawn,
    Neutralize,
    Penetrate,
    Replan,
}

/// Allocation summary attached to replan events.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplanSnapshot {
    pub converged: bool,
    pub rounds: usize,
    pub paths: Vec<AgentPath>,
    pub unassigned: Vec<u64>,
}

impl From<&AllocationResult> for ReplanSnapshot {
    fn from(a: &AllocationResult) -> Self {
        Self {
            converged: a.converged,
            rounds: a.rounds_used,
            paths: a.paths.clone(),
            unassigned: a.unassigned(),
        }
    }
}

/// One line of the event stream.
///
/// `ids` holds the intruder id for spawn and penetrate events, the intruder
/// then the evader id for neutralize events, and nothing for replans.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimEvent {
    pub time: f64,
    pub kind: EventKind,
    pub ids: Vec<u64>,
    pub payload: Option<ReplanSnapshot>,
}

impl SimEvent {
    fn new(time: f64, kind: EventKind, ids: Vec<u64>) -> Self {
        Self {
            time,
            kind,
            ids,
            payload: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochMetrics {
    pub success: bool,
    pub neutralizations: usize,
    pub penetrations: usize,
    pub spawned: usize,
    pub duration: f64,
    pub replans: usize,
    pub mean_replan_rounds: f64,
    pub unconverged_replans: usize,
}

#[derive(Debug, Clone)]
pub struct EpisodeOutcome {
    pub metrics: EpochMetrics,
    pub events: Vec<SimEvent>,
    pub world: WorldState,
}

/// A single episode: world state plus its private RNG stream.
#[derive(Debug, Clone)]
pub struct Episode {
    cfg: ScenarioConfig,
    world: WorldState,
    rng: ChaCha8Rng,
    events: Vec<SimEvent>,
    replans: usize,
    rounds: usize,
    unconverged: usize,
}

impl Episode {
    /// Episode whose spawns draw from stream `stream` of the ChaCha generator
    /// seeded with `seed`.
    pub fn new(cfg: &ScenarioConfig, seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Self {
            cfg: cfg.clone(),
            world: WorldState::new(cfg),
            rng,
            events: Vec::new(),
            replans: 0,
            rounds: 0,
            unconverged: 0,
        }
    }

    /// Starts with the given intruders already in the air. They count toward
    /// `max_intruders_per_epoch`.
    pub fn with_intruders(cfg: &ScenarioConfig, seed: u64, intruders: Vec<IntruderState>) -> Self {
        let mut ep = Self::new(cfg, seed, 0);
        for i in intruders {
            ep.events
                .push(SimEvent::new(0.0, EventKind::Spawn, vec![i.id]));
            ep.world.add_intruder(i);
        }
        ep
    }

    pub fn world(&self) -> &WorldState {
        &self.world
    }

    fn fill_spawns(&mut self) {
        while self.world.approaching_count() < self.cfg.max_concurrent_intruders
            && self.world.intruders_spawned < self.cfg.max_intruders_per_epoch
        {
            let id = self.world.next_intruder_id();
            match spawn_intruder(&mut self.rng, &self.cfg, &self.world.intruders, id) {
                Ok(intruder) => {
                    self.events
                        .push(SimEvent::new(self.world.clock, EventKind::Spawn, vec![id]));
                    self.world.add_intruder(intruder);
                }
                Err(_) => break,
            }
        }
    }

    fn replan(&mut self) -> Result<(), LossError> {
        let event = self.world.replan(&self.cfg)?;
        self.replans += 1;
        self.rounds += self.world.allocation.rounds_used;
        if !self.world.allocation.converged {
            self.unconverged += 1;
        }
        self.events.push(event);
        Ok(())
    }

    fn all_done(&self) -> bool {
        self.world.intruders_spawned >= self.cfg.max_intruders_per_epoch
            && self.world.approaching_count() == 0
    }

    /// Runs until the first penetration, until every intruder of the epoch has
    /// been neutralized, or until the horizon. Reaching the horizon without a
    /// penetration counts as success.
    pub fn run(mut self) -> Result<EpisodeOutcome, LossError> {
        let replan_every = ((self.cfg.replan_interval / self.cfg.sim_dt).round() as u64).max(1);
        let max_ticks = (self.cfg.horizon / self.cfg.sim_dt - 1e-9).ceil().max(0.0) as u64;
        self.fill_spawns();
        self.replan()?;
        while self.world.penetrations == 0 && !self.all_done() && self.world.tick < max_ticks {
            let events = self.world.step(&self.cfg);
            self.events.extend(events);
            if self.world.penetrations > 0 {
                break;
            }
            self.fill_spawns();
            if self.all_done() {
                break;
            }
            if self.world.tick.is_multiple_of(replan_every) {
                self.replan()?;
            }
        }
        let metrics = EpochMetrics {
            success: self.world.penetrations == 0,
            neutralizations: self.world.neutralizations,
            penetrations: self.world.penetrations,
            spawned: self.world.intruders_spawned,
            duration: self.world.clock,
            replans: self.replans,
            mean_replan_rounds: if self.replans == 0 {
                0.0
            } else {
                self.rounds as f64 / self.replans as f64
            },
            unconverged_replans: self.unconverged,
        };
        Ok(EpisodeOutcome {
            metrics,
            events: self.events,
            world: self.world,
        })
    }
}

/// The world at time zero of the episode on stream 0 of `seed`: evaders at
/// their starting posts and the first wave of intruders spawned.
pub fn opening_scene(cfg: &ScenarioConfig, seed: u64) -> WorldState {
    let mut ep = Episode::new(cfg, seed, 0);
    ep.fill_spawns();
    ep.world
}

/// Runs one episode on stream 0 of `seed`.
pub fn run_episode(
    cfg: &ScenarioConfig,
    seed: u64,
) -> Result<(EpochMetrics, Vec<SimEvent>), LossError> {
    Episode::new(cfg, seed, 0)
        .run()
        .map(|o| (o.metrics, o.events))
}
