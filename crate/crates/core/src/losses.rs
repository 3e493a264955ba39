//! Spatial, temporal and composite losses over evader paths, and the
//! insertion marginal cost used as an auction bid.

use std::cmp::Ordering;
use std::fmt;
use std::ops::Add;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scenario::{EvaderState, IntruderState, ScenarioConfig, SpatioTemporalTask, Vec2};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LossError {
    #[error("task {0} is not in the task table")]
    UnknownTask(u64),
}

/// A loss that is either a finite real or infeasible (+inf).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Loss {
    Finite(f64),
    Infeasible,
}

impl Loss {
    pub const ZERO: Loss = Loss::Finite(0.0);

    pub fn is_feasible(self) -> bool {
        matches!(self, Loss::Finite(_))
    }

    pub fn finite(self) -> Option<f64> {
        match self {
            Loss::Finite(v) => Some(v),
            Loss::Infeasible => None,
        }
    }

    /// Value with infeasible mapped to `f64::INFINITY`.
    pub fn to_f64(self) -> f64 {
        self.finite().unwrap_or(f64::INFINITY)
    }

    /// Composite product; infeasible absorbs.
    pub fn product(self, other: Loss) -> Loss {
        match (self, other) {
            (Loss::Finite(a), Loss::Finite(b)) => Loss::Finite(a * b),
            _ => Loss::Infeasible,
        }
    }

    pub fn minus(self, other: Loss) -> Loss {
        match (self, other) {
            (Loss::Finite(a), Loss::Finite(b)) => Loss::Finite(a - b),
            _ => Loss::Infeasible,
        }
    }
}

impl Add for Loss {
    type Output = Loss;
    fn add(self, rhs: Loss) -> Loss {
        match (self, rhs) {
            (Loss::Finite(a), Loss::Finite(b)) => Loss::Finite(a + b),
            _ => Loss::Infeasible,
        }
    }
}

impl PartialOrd for Loss {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        match (self, other) {
            (Loss::Finite(a), Loss::Finite(b)) => a.partial_cmp(b),
            (Loss::Finite(_), Loss::Infeasible) => Some(Ordering::Less),
            (Loss::Infeasible, Loss::Finite(_)) => Some(Ordering::Greater),
            (Loss::Infeasible, Loss::Infeasible) => Some(Ordering::Equal),
        }
    }
}

impl fmt::Display for Loss {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Loss::Finite(v) => write!(f, "{v}"),
            Loss::Infeasible => f.write_str("inf"),
        }
    }
}

/// What the preceding element of a path contributes to the next task's loss.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathContext {
    pub prev_point: Vec2,
    pub prev_time: f64,
}

impl PathContext {
    /// Context for the first task on a path: the evader's own position at time 0.
    pub fn origin(evader_position: Vec2) -> Self {
        Self {
            prev_point: evader_position,
            prev_time: 0.0,
        }
    }

    pub fn after(task: &SpatioTemporalTask) -> Self {
        Self {
            prev_point: task.neutral_point,
            prev_time: task.intrusion_time,
        }
    }
}

/// Ordered task ids an evader will execute.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Path(Vec<u64>);

impl Path {
    pub fn new() -> Self {
        Self(Vec::new())
    }

    pub fn ids(&self) -> &[u64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, id: u64) -> bool {
        self.0.contains(&id)
    }

    /// `self ⊕_n {id}`: inserts after the n-th element (n = 0 is the front).
    pub fn inserted(&self, n: usize, id: u64) -> Path {
        let mut ids = Vec::with_capacity(self.0.len() + 1);
        ids.extend_from_slice(&self.0[..n]);
        ids.push(id);
        ids.extend_from_slice(&self.0[n..]);
        Path(ids)
    }

    pub fn insert(&mut self, n: usize, id: u64) {
        self.0.insert(n, id);
    }

    pub fn remove(&mut self, id: u64) -> bool {
        let before = self.0.len();
        self.0.retain(|&t| t != id);
        self.0.len() != before
    }

    pub fn clear(&mut self) {
        self.0.clear();
    }

    pub fn into_inner(self) -> Vec<u64> {
        self.0
    }
}

impl From<Vec<u64>> for Path {
    fn from(ids: Vec<u64>) -> Self {
        Path(ids)
    }
}

/// A task together with the current position of the intruder that generated it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TaskEntry {
    pub task: SpatioTemporalTask,
    pub intruder_pos: Vec2,
}

/// Lookup table of live tasks, sorted by task id.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TaskTable {
    entries: Vec<TaskEntry>,
}

impl TaskTable {
    pub fn new(mut entries: Vec<TaskEntry>) -> Self {
        entries.sort_by_key(|e| e.task.task_id);
        entries.dedup_by_key(|e| e.task.task_id);
        Self { entries }
    }

    /// Pairs each task with its intruder's position; tasks without a matching
    /// intruder are dropped.
    pub fn from_parts(tasks: &[SpatioTemporalTask], intruders: &[IntruderState]) -> Self {
        let entries = tasks
            .iter()
            .filter_map(|t| {
                intruders
                    .iter()
                    .find(|i| i.id == t.task_id)
                    .map(|i| TaskEntry {
                        task: *t,
                        intruder_pos: i.position,
                    })
            })
            .collect();
        Self::new(entries)
    }

    pub fn get(&self, id: u64) -> Result<&TaskEntry, LossError> {
        self.entries
            .binary_search_by_key(&id, |e| e.task.task_id)
            .map(|idx| &self.entries[idx])
            .map_err(|_| LossError::UnknownTask(id))
    }

    pub fn ids(&self) -> impl Iterator<Item = u64> + '_ {
        self.entries.iter().map(|e| e.task.task_id)
    }

    pub fn entries(&self) -> &[TaskEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Distance the evader travels to the neutralizing point, plus an
/// agent-independent `eta`-weighted distance from the intruder to that point.
pub fn spatial_loss(
    task: &SpatioTemporalTask,
    ctx: &PathContext,
    intruder_pos: Vec2,
    eta: f64,
) -> f64 {
    task.neutral_point.distance(ctx.prev_point) + eta * task.neutral_point.distance(intruder_pos)
}

pub fn temporal_feasible(
    task: &SpatioTemporalTask,
    ctx: &PathContext,
    evader_max_speed: f64,
) -> bool {
    let slack = task.intrusion_time - ctx.prev_time;
    slack > 0.0 && task.neutral_point.distance(ctx.prev_point) / evader_max_speed < slack
}

pub fn temporal_loss(task: &SpatioTemporalTask, ctx: &PathContext, evader_max_speed: f64) -> Loss {
    if temporal_feasible(task, ctx, evader_max_speed) {
        Loss::Finite((1.0 + task.intrusion_time) * (task.intrusion_time - ctx.prev_time))
    } else {
        Loss::Infeasible
    }
}

pub fn composite_loss(
    task: &SpatioTemporalTask,
    ctx: &PathContext,
    intruder_pos: Vec2,
    cfg: &ScenarioConfig,
) -> Loss {
    let temporal = temporal_loss(task, ctx, cfg.evader_max_speed);
    if !temporal.is_feasible() {
        return Loss::Infeasible;
    }
    Loss::Finite(spatial_loss(task, ctx, intruder_pos, cfg.eta)).product(temporal)
}

fn path_cost_ids(
    ids: &[u64],
    origin: Vec2,
    tasks: &TaskTable,
    cfg: &ScenarioConfig,
) -> Result<Loss, LossError> {
    let mut ctx = PathContext::origin(origin);
    let mut total = Loss::ZERO;
    for &id in ids {
        let entry = tasks.get(id)?;
        total = total + composite_loss(&entry.task, &ctx, entry.intruder_pos, cfg);
        ctx = PathContext::after(&entry.task);
    }
    Ok(total)
}

/// Sum of composite losses along the path, each evaluated against its predecessor.
pub fn path_cost(
    path: &Path,
    evader: &EvaderState,
    tasks: &TaskTable,
    cfg: &ScenarioConfig,
) -> Result<Loss, LossError> {
    path_cost_ids(path.ids(), evader.position, tasks, cfg)
}

/// Best insertion of a candidate task into a path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Insertion {
    pub cost: Loss,
    pub index: Option<usize>,
}

impl Insertion {
    pub const INFEASIBLE: Insertion = Insertion {
        cost: Loss::Infeasible,
        index: None,
    };
}

/// Minimum increase in path cost over every insertion slot for `candidate`.
///
/// Ties go to the smallest index. A candidate already on the path, or one
/// infeasible in every slot, yields [`Insertion::INFEASIBLE`].
pub fn marginal_cost(
    path: &Path,
    evader: &EvaderState,
    candidate: u64,
    tasks: &TaskTable,
    cfg: &ScenarioConfig,
) -> Result<Insertion, LossError> {
    tasks.get(candidate)?;
    if path.contains(candidate) {
        return Ok(Insertion::INFEASIBLE);
    }
    let base = path_cost(path, evader, tasks, cfg)?;
    if !base.is_feasible() {
        return Ok(Insertion::INFEASIBLE);
    }
    let mut best = Insertion::INFEASIBLE;
    let mut buf = Vec::with_capacity(path.len() + 1);
    for n in 0..=path.len() {
        buf.clear();
        buf.extend_from_slice(&path.ids()[..n]);
        buf.push(candidate);
        buf.extend_from_slice(&path.ids()[n..]);
        let delta = path_cost_ids(&buf, evader.position, tasks, cfg)?.minus(base);
        if delta < best.cost {
            best = Insertion {
                cost: delta,
                index: Some(n),
            };
        }
    }
    Ok(best)
}
