//! Monte-Carlo sweeps over radial separation and evader count, and an
//! exhaustive solver for small allocation instances.

use itertools::Itertools;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cbba::{AgentPath, AllocationResult};
use crate::losses::{path_cost, Loss, LossError, Path, TaskTable};
use crate::scenario::{EvaderState, ScenarioConfig, ScenarioError};
use crate::simulator::{Episode, EpochMetrics};

/// Largest task count the exhaustive solver accepts by default.
pub const ORACLE_MAX_TASKS: usize = 8;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("instance has {tasks} tasks, more than the exhaustive cap of {cap}")]
    TooManyTasks { tasks: usize, cap: usize },
    #[error("invalid sweep: {0}")]
    InvalidSweep(String),
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Loss(#[from] LossError),
    #[error("could not start worker pool: {0}")]
    Pool(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub base: ScenarioConfig,
    pub separations: Vec<f64>,
    pub evader_counts: Vec<usize>,
    pub epochs: usize,
    pub base_seed: u64,
}

impl SweepConfig {
    pub const DEFAULT_SEPARATIONS: [f64; 6] = [0.0, 10.0, 20.0, 40.0, 60.0, 80.0];

    pub fn new(base: ScenarioConfig) -> Self {
        let base_seed = base.rng_seed;
        Self {
            evader_counts: vec![base.num_evaders],
            base,
            separations: Self::DEFAULT_SEPARATIONS.to_vec(),
            epochs: 200,
            base_seed,
        }
    }

    fn validate(&self) -> Result<(), HarnessError> {
        if self.epochs == 0 {
            return Err(HarnessError::InvalidSweep(
                "epochs must be at least 1".into(),
            ));
        }
        if self.separations.is_empty() || self.evader_counts.is_empty() {
            return Err(HarnessError::InvalidSweep(
                "separation and evader grids must be nonempty".into(),
            ));
        }
        for cell in self.cells() {
            self.cell_config(cell).validate()?;
        }
        Ok(())
    }

    fn cells(&self) -> Vec<(f64, usize)> {
        self.separations
            .iter()
            .flat_map(|&s| self.evader_counts.iter().map(move |&n| (s, n)))
            .collect()
    }

    fn cell_config(&self, (sep, evaders): (f64, usize)) -> ScenarioConfig {
        ScenarioConfig {
            min_radial_separation: sep,
            num_evaders: evaders,
            ..self.base.clone()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    pub sep_m: f64,
    pub evaders: usize,
    pub epochs: usize,
    pub success_rate: f64,
    pub mean_neutralized: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub cells: Vec<SweepCell>,
}

impl SweepResult {
    pub fn cell(&self, sep_m: f64, evaders: usize) -> Option<&SweepCell> {
        self.cells
            .iter()
            .find(|c| c.sep_m == sep_m && c.evaders == evaders)
    }
}

/// Runs every (separation, evader count) cell for `epochs` episodes on up to
/// `jobs` threads.
///
/// Epoch `e` of every cell uses stream `e` of `base_seed`, so cells share their
/// random spawn draws wherever the separation rule lets them. Aggregation is in
/// cell and epoch order and does not depend on `jobs`.
pub fn run_montecarlo(sweep: &SweepConfig, jobs: usize) -> Result<SweepResult, HarnessError> {
    sweep.validate()?;
    let cells = sweep.cells();
    let work: Vec<(usize, u64)> = (0..cells.len())
        .flat_map(|c| (0..sweep.epochs as u64).map(move |e| (c, e)))
        .collect();
    let configs: Vec<ScenarioConfig> = cells.iter().map(|&c| sweep.cell_config(c)).collect();

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| HarnessError::Pool(e.to_string()))?;
    let metrics: Vec<EpochMetrics> = pool.install(|| {
        work.par_iter()
            .map(|&(c, epoch)| {
                Episode::new(&configs[c], sweep.base_seed, epoch)
                    .run()
                    .map(|o| o.metrics)
            })
            .collect::<Result<_, _>>()
    })?;

    let cells = cells
        .iter()
        .zip(metrics.chunks(sweep.epochs))
        .map(|(&(sep_m, evaders), runs)| {
            let successes = runs.iter().filter(|m| m.success).count();
            let neutralized: usize = runs.iter().map(|m| m.neutralizations).sum();
            SweepCell {
                sep_m,
                evaders,
                epochs: runs.len(),
                success_rate: successes as f64 / runs.len() as f64,
                mean_neutralized: neutralized as f64 / runs.len() as f64,
            }
        })
        .collect();
    Ok(SweepResult { cells })
}

/// Globally best allocation under "assign as many tasks as possible, then
/// minimize total path cost".
#[derive(Debug, Clone, PartialEq)]
pub struct OracleSolution {
    pub paths: Vec<AgentPath>,
    pub assigned: usize,
    pub cost: f64,
}

impl OracleSolution {
    pub fn as_allocation(&self, tasks: &TaskTable) -> AllocationResult {
        let mut assignment: std::collections::BTreeMap<u64, Option<usize>> =
            tasks.ids().map(|id| (id, None)).collect();
        for p in &self.paths {
            for &id in &p.tasks {
                assignment.insert(id, Some(p.agent_id));
            }
        }
        AllocationResult {
            paths: self.paths.clone(),
            assignment,
            rounds_used: 0,
            converged: true,
        }
    }
}

/// Cheapest feasible execution order of every task subset for one agent,
/// found by trying every permutation. `None` marks subsets with no feasible order.
fn best_orders(
    evader: &EvaderState,
    ids: &[u64],
    tasks: &TaskTable,
    cfg: &ScenarioConfig,
) -> Result<Vec<Option<(f64, Vec<u64>)>>, LossError> {
    let n = ids.len();
    let mut best = vec![None; 1 << n];
    for mask in 0..(1usize << n) {
        let members: Vec<u64> = (0..n)
            .filter(|b| mask >> b & 1 == 1)
            .map(|b| ids[b])
            .collect();
        let mut winner: Option<(f64, Vec<u64>)> = None;
        for order in members.iter().copied().permutations(members.len()) {
            if let Loss::Finite(c) = path_cost(&Path::from(order.clone()), evader, tasks, cfg)? {
                if winner.as_ref().is_none_or(|(w, _)| c < *w) {
                    winner = Some((c, order));
                }
            }
        }
        best[mask] = winner;
    }
    Ok(best)
}

/// Exhaustive solve: every split of the tasks among agents (or left out) and
/// every execution order per agent.
pub fn brute_force_oracle(
    evaders: &[EvaderState],
    tasks: &TaskTable,
    cfg: &ScenarioConfig,
    max_tasks: usize,
) -> Result<OracleSolution, HarnessError> {
    if tasks.len() > max_tasks {
        return Err(HarnessError::TooManyTasks {
            tasks: tasks.len(),
            cap: max_tasks,
        });
    }
    let ids: Vec<u64> = tasks.ids().collect();
    let n = ids.len();
    let per_agent: Vec<_> = evaders
        .iter()
        .map(|e| best_orders(e, &ids, tasks, cfg))
        .collect::<Result<_, _>>()?;

    let choices = evaders.len() + 1;
    let total = choices.pow(n as u32);
    let mut best: Option<(usize, f64, Vec<usize>)> = None;
    let mut masks = vec![0usize; evaders.len()];
    for code in 0..total {
        masks.iter_mut().for_each(|m| *m = 0);
        let mut rest = code;
        let mut assigned = 0;
        for bit in 0..n {
            let choice = rest % choices;
            rest /= choices;
            if choice > 0 {
                masks[choice - 1] |= 1 << bit;
                assigned += 1;
            }
        }
        let mut cost = 0.0;
        let mut feasible = true;
        for (a, &mask) in masks.iter().enumerate() {
            match &per_agent[a][mask] {
                Some((c, _)) => cost += c,
                None => {
                    feasible = false;
                    break;
                }
            }
        }
        if !feasible {
            continue;
        }
        let better = match &best {
            None => true,
            Some((b_assigned, b_cost, _)) => {
                assigned > *b_assigned || (assigned == *b_assigned && cost < *b_cost)
            }
        };
        if better {
            best = Some((assigned, cost, masks.clone()));
        }
    }

    // the all-unassigned split is always feasible
    let (assigned, cost, masks) = best.expect("empty assignment is feasible");
    let paths = evaders
        .iter()
        .zip(&masks)
        .enumerate()
        .map(|(a, (e, &mask))| AgentPath {
            agent_id: e.id,
            tasks: per_agent[a][mask]
                .as_ref()
                .map(|(_, o)| o.clone())
                .unwrap_or_default(),
        })
        .collect();
    Ok(OracleSolution {
        paths,
        assigned,
        cost,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::losses::TaskEntry;
    use crate::scenario::{SpatioTemporalTask, Vec2};

    fn entry(id: u64, angle: f64, t: f64) -> TaskEntry {
        let p = Vec2::from_polar(100.0, angle);
        TaskEntry {
            task: SpatioTemporalTask {
                task_id: id,
                neutral_point: p,
                intrusion_time: t,
            },
            intruder_pos: Vec2::from_polar(100.0 + 3.0 * t, angle),
        }
    }

    #[test]
    fn single_task_single_agent() {
        let cfg = ScenarioConfig::default();
        let tasks = TaskTable::new(vec![entry(1, 0.5, 40.0)]);
        let evaders = [EvaderState::new(0, Vec2::new(100.0, 0.0), 4.5)];
        let sol = brute_force_oracle(&evaders, &tasks, &cfg, ORACLE_MAX_TASKS).unwrap();
        assert_eq!(sol.assigned, 1);
        assert_eq!(sol.paths[0].tasks, vec![1]);
        let direct = path_cost(&Path::from(vec![1]), &evaders[0], &tasks, &cfg).unwrap();
        assert_eq!(Loss::Finite(sol.cost), direct);
    }

    #[test]
    fn two_agents_two_tasks_pick_cheapest_pairing() {
        let cfg = ScenarioConfig::default();
        let tasks = TaskTable::new(vec![entry(1, 0.2, 40.0), entry(2, 3.0, 45.0)]);
        let evaders = [
            EvaderState::new(0, Vec2::from_polar(100.0, 0.0), 4.5),
            EvaderState::new(1, Vec2::from_polar(100.0, 3.1), 4.5),
        ];
        let sol = brute_force_oracle(&evaders, &tasks, &cfg, ORACLE_MAX_TASKS).unwrap();

        // enumerate the 3^2 splits and both orders by hand
        let cost = |agent: usize, order: &[u64]| {
            path_cost(&Path::from(order.to_vec()), &evaders[agent], &tasks, &cfg).unwrap()
        };
        let mut best = (0usize, f64::INFINITY);
        let splits: [(&[u64], &[u64]); 9] = [
            (&[], &[]),
            (&[1], &[]),
            (&[2], &[]),
            (&[], &[1]),
            (&[], &[2]),
            (&[1], &[2]),
            (&[2], &[1]),
            (&[1, 2], &[]),
            (&[], &[1, 2]),
        ];
        for (a, b) in splits {
            for (oa, ob) in [
                (a.to_vec(), b.to_vec()),
                (
                    a.iter().rev().copied().collect(),
                    b.iter().rev().copied().collect(),
                ),
            ] {
                let (Loss::Finite(ca), Loss::Finite(cb)) = (cost(0, &oa), cost(1, &ob)) else {
                    continue;
                };
                let n = oa.len() + ob.len();
                if n > best.0 || (n == best.0 && ca + cb < best.1) {
                    best = (n, ca + cb);
                }
            }
        }
        assert_eq!(sol.assigned, best.0);
        assert_eq!(sol.cost, best.1);
        assert_eq!(sol.paths[0].tasks, vec![1]);
        assert_eq!(sol.paths[1].tasks, vec![2]);
    }

    #[test]
    fn refuses_oversized_instances() {
        let cfg = ScenarioConfig::default();
        let tasks = TaskTable::new(
            (0..9)
                .map(|k| entry(k, k as f64 * 0.6, 30.0 + k as f64))
                .collect(),
        );
        let evaders = [EvaderState::new(0, Vec2::new(100.0, 0.0), 4.5)];
        let err = brute_force_oracle(&evaders, &tasks, &cfg, ORACLE_MAX_TASKS).unwrap_err();
        assert!(matches!(
            err,
            HarnessError::TooManyTasks { tasks: 9, cap: 8 }
        ));
    }

    #[test]
    fn co_timed_tasks_cannot_all_be_covered() {
        let cfg = ScenarioConfig::default();
        let tasks = TaskTable::new((0..3).map(|k| entry(k, k as f64 * 2.1, 35.0)).collect());
        let evaders = [
            EvaderState::new(0, Vec2::from_polar(100.0, 0.0), 4.5),
            EvaderState::new(1, Vec2::from_polar(100.0, 3.0), 4.5),
        ];
        let sol = brute_force_oracle(&evaders, &tasks, &cfg, ORACLE_MAX_TASKS).unwrap();
        assert!(sol.assigned < 3);
    }

    #[test]
    fn sweep_rejects_empty_grids() {
        let mut sweep = SweepConfig::new(ScenarioConfig::default());
        sweep.separations.clear();
        assert!(matches!(
            run_montecarlo(&sweep, 1),
            Err(HarnessError::InvalidSweep(_))
        ));
        let mut sweep = SweepConfig::new(ScenarioConfig::default());
        sweep.epochs = 0;
        assert!(matches!(
            run_montecarlo(&sweep, 1),
            Err(HarnessError::InvalidSweep(_))
        ));
    }
}
