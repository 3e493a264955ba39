//! Consensus-based bundle auction over spatio-temporal tasks.
//!
//! Each agent greedily grows a bundle by repeatedly inserting the task with the
//! lowest marginal cost that undercuts the best known bid for it. Agents then
//! exchange their winning-cost (`y`) and winner (`z`) tables over an all-to-all
//! synchronous bus and resolve conflicts pairwise. An agent that loses any task
//! cancels its whole bundle and re-bids from scratch in the next round.
//!
//! Tables are indexed by task id through the sorted id list each belief carries,
//! which always matches the [`TaskTable`] the auction was started with.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::losses::{marginal_cost, path_cost, Loss, LossError, Path, TaskTable};
use crate::scenario::{EvaderState, ScenarioConfig};

pub type AgentId = usize;

/// One entry of the `y`/`z` tables: the best known bid and who placed it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Claim {
    pub cost: f64,
    pub winner: Option<AgentId>,
}

impl Claim {
    pub const UNCLAIMED: Claim = Claim {
        cost: f64::INFINITY,
        winner: None,
    };
}

impl Default for Claim {
    fn default() -> Self {
        Claim::UNCLAIMED
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AgentBelief {
    pub agent_id: AgentId,
    /// Tasks in acquisition order.
    pub bundle: Vec<u64>,
    /// Same tasks in execution order.
    pub path: Path,
    task_ids: Vec<u64>,
    claims: Vec<Claim>,
}

/// Snapshot of a sender's `y`/`z` tables.
#[derive(Debug, Clone, PartialEq)]
pub struct ConsensusMessage {
    pub sender_id: AgentId,
    pub claims: Vec<Claim>,
}

/// Which rule, if any, fired for one task during a consensus step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Action {
    Keep,
    Update,
    Reset,
}

impl AgentBelief {
    /// Empty bundle and path, every task unclaimed.
    pub fn fresh(agent_id: AgentId, tasks: &TaskTable) -> Self {
        let task_ids: Vec<u64> = tasks.ids().collect();
        let claims = vec![Claim::UNCLAIMED; task_ids.len()];
        Self {
            agent_id,
            bundle: Vec::new(),
            path: Path::new(),
            task_ids,
            claims,
        }
    }

    pub fn task_ids(&self) -> &[u64] {
        &self.task_ids
    }

    pub fn claims(&self) -> &[Claim] {
        &self.claims
    }

    fn slot(&self, id: u64) -> Option<usize> {
        self.task_ids.binary_search(&id).ok()
    }

    pub fn claim(&self, id: u64) -> Option<Claim> {
        self.slot(id).map(|s| self.claims[s])
    }

    /// Overwrites one table entry. Intended for constructing test fixtures.
    pub fn set_claim(&mut self, id: u64, claim: Claim) {
        if let Some(s) = self.slot(id) {
            self.claims[s] = claim;
        }
    }

    pub fn winners(&self) -> impl Iterator<Item = Option<AgentId>> + '_ {
        self.claims.iter().map(|c| c.winner)
    }

    pub fn message(&self) -> ConsensusMessage {
        ConsensusMessage {
            sender_id: self.agent_id,
            claims: self.claims.clone(),
        }
    }

    /// Checks the structural invariants: bundle and path hold the same tasks,
    /// every held task is claimed by this agent, and `y` is infinite exactly
    /// when `z` is empty.
    pub fn is_consistent(&self) -> bool {
        let bundle: BTreeSet<u64> = self.bundle.iter().copied().collect();
        let path: BTreeSet<u64> = self.path.ids().iter().copied().collect();
        bundle.len() == self.bundle.len()
            && path.len() == self.path.len()
            && bundle == path
            && self
                .bundle
                .iter()
                .all(|&id| self.claim(id).map(|c| c.winner) == Some(Some(self.agent_id)))
            && self
                .claims
                .iter()
                .all(|c| c.cost.is_infinite() == c.winner.is_none())
    }

    /// Bid attached to the most recently acquired task, or -inf for an empty bundle.
    fn last_bid(&self) -> f64 {
        self.bundle
            .last()
            .and_then(|&id| self.claim(id))
            .map_or(f64::NEG_INFINITY, |c| c.cost)
    }

    /// Greedy bundle construction. Returns whether anything was added.
    ///
    /// Bids never decrease along the bundle: a task's bid is the larger of its
    /// marginal cost and the previous bid. Insertion costs are not monotone in
    /// path length (they can go negative), so the floor is what keeps rounds
    /// from cycling.
    pub fn build_bundle(
        &mut self,
        evader: &EvaderState,
        tasks: &TaskTable,
        cfg: &ScenarioConfig,
    ) -> Result<bool, LossError> {
        let mut changed = false;
        loop {
            let floor = self.last_bid();
            let mut best: Option<(usize, f64, usize)> = None;
            for (slot, &id) in self.task_ids.iter().enumerate() {
                if self.bundle.contains(&id) {
                    continue;
                }
                let ins = marginal_cost(&self.path, evader, id, tasks, cfg)?;
                let (Loss::Finite(marginal), Some(index)) = (ins.cost, ins.index) else {
                    continue;
                };
                let cost = marginal.max(floor);
                let improving = cost < self.claims[slot].cost;
                if improving && best.is_none_or(|(_, c, _)| cost < c) {
                    best = Some((slot, cost, index));
                }
            }
            let Some((slot, cost, index)) = best else {
                return Ok(changed);
            };
            let id = self.task_ids[slot];
            self.path.insert(index, id);
            self.bundle.push(id);
            self.claims[slot] = Claim {
                cost,
                winner: Some(self.agent_id),
            };
            changed = true;
        }
    }

    /// Applies one peer's tables. Returns the bundle tasks this agent no longer wins.
    pub fn consensus_step(&mut self, msg: &ConsensusMessage) -> BTreeSet<u64> {
        let me = self.agent_id;
        let sender = msg.sender_id;
        let mut lost = BTreeSet::new();
        if sender == me {
            return lost;
        }
        for (slot, theirs) in msg.claims.iter().enumerate().take(self.claims.len()) {
            let mine = self.claims[slot];
            let action = match theirs.winner {
                Some(k) if k == sender => {
                    if mine.winner == Some(sender) {
                        Action::Update
                    } else if theirs.cost < mine.cost
                        || (theirs.cost == mine.cost && mine.winner.is_some_and(|w| sender < w))
                    {
                        Action::Update
                    } else {
                        Action::Keep
                    }
                }
                Some(k) if k == me => {
                    if mine.winner == Some(sender) {
                        Action::Reset
                    } else {
                        Action::Keep
                    }
                }
                Some(m) => {
                    if mine.winner != Some(m) && theirs.cost < mine.cost {
                        Action::Reset
                    } else {
                        Action::Keep
                    }
                }
                // The sender is authoritative about its own claims: if it no
                // longer holds a task we credited to it, forget that credit.
                None => {
                    if mine.winner == Some(sender) {
                        Action::Reset
                    } else {
                        Action::Keep
                    }
                }
            };
            let next = match action {
                Action::Keep => continue,
                Action::Update => *theirs,
                Action::Reset => Claim::UNCLAIMED,
            };
            if mine.winner == Some(me) && next.winner != Some(me) {
                lost.insert(self.task_ids[slot]);
            }
            self.claims[slot] = next;
        }
        lost
    }

    /// Cancels the entire bundle once any of it has been lost. Tasks this agent
    /// still believes it wins are returned to the auction; entries now
    /// attributed to other agents are kept.
    pub fn release_on_loss(&mut self, lost: &BTreeSet<u64>) {
        if lost.is_empty() {
            return;
        }
        for id in std::mem::take(&mut self.bundle) {
            if let Some(slot) = self.slot(id) {
                if self.claims[slot].winner == Some(self.agent_id) {
                    self.claims[slot] = Claim::UNCLAIMED;
                }
            }
        }
        self.path.clear();
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentPath {
    pub agent_id: AgentId,
    pub tasks: Vec<u64>,
}

/// Outcome of one auction: conflict-free paths and the task-to-agent map.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AllocationResult {
    pub paths: Vec<AgentPath>,
    /// Winner per task id, `None` when unassigned.
    pub assignment: BTreeMap<u64, Option<AgentId>>,
    pub rounds_used: usize,
    pub converged: bool,
}

impl AllocationResult {
    pub fn empty(evaders: &[EvaderState]) -> Self {
        Self {
            paths: evaders
                .iter()
                .map(|e| AgentPath {
                    agent_id: e.id,
                    tasks: Vec::new(),
                })
                .collect(),
            assignment: BTreeMap::new(),
            rounds_used: 0,
            converged: true,
        }
    }

    pub fn unassigned(&self) -> Vec<u64> {
        self.assignment
            .iter()
            .filter(|(_, w)| w.is_none())
            .map(|(&id, _)| id)
            .collect()
    }

    pub fn assigned_count(&self) -> usize {
        self.assignment.values().filter(|w| w.is_some()).count()
    }

    pub fn path_of(&self, agent: AgentId) -> Option<&[u64]> {
        self.paths
            .iter()
            .find(|p| p.agent_id == agent)
            .map(|p| p.tasks.as_slice())
    }

    /// Summed path cost of every agent's path.
    pub fn total_cost(
        &self,
        evaders: &[EvaderState],
        tasks: &TaskTable,
        cfg: &ScenarioConfig,
    ) -> Result<Loss, LossError> {
        let mut total = Loss::ZERO;
        for p in &self.paths {
            if let Some(e) = evaders.iter().find(|e| e.id == p.agent_id) {
                total = total + path_cost(&Path::from(p.tasks.clone()), e, tasks, cfg)?;
            }
        }
        Ok(total)
    }
}

/// Synchronous auction state for a fixed set of agents and tasks.
#[derive(Debug, Clone)]
pub struct Auction<'a> {
    evaders: &'a [EvaderState],
    tasks: &'a TaskTable,
    cfg: &'a ScenarioConfig,
    beliefs: Vec<AgentBelief>,
}

impl<'a> Auction<'a> {
    pub fn new(evaders: &'a [EvaderState], tasks: &'a TaskTable, cfg: &'a ScenarioConfig) -> Self {
        let beliefs = evaders
            .iter()
            .map(|e| AgentBelief::fresh(e.id, tasks))
            .collect();
        Self {
            evaders,
            tasks,
            cfg,
            beliefs,
        }
    }

    /// Starts from caller-supplied beliefs, one per evader in the same order.
    pub fn with_beliefs(
        evaders: &'a [EvaderState],
        tasks: &'a TaskTable,
        cfg: &'a ScenarioConfig,
        beliefs: Vec<AgentBelief>,
    ) -> Self {
        assert_eq!(evaders.len(), beliefs.len(), "one belief per evader");
        Self {
            evaders,
            tasks,
            cfg,
            beliefs,
        }
    }

    pub fn beliefs(&self) -> &[AgentBelief] {
        &self.beliefs
    }

    pub fn into_beliefs(self) -> Vec<AgentBelief> {
        self.beliefs
    }

    /// True when every agent holds the same winners and, for assigned tasks,
    /// the same winning costs.
    pub fn agreed(&self) -> bool {
        let Some(first) = self.beliefs.first() else {
            return true;
        };
        self.beliefs[1..].iter().all(|b| {
            b.claims
                .iter()
                .zip(&first.claims)
                .all(|(a, c)| a.winner == c.winner && (a.winner.is_none() || a.cost == c.cost))
        })
    }

    /// Bidding phase of a round. Returns whether any bundle grew.
    pub fn bid(&mut self) -> Result<bool, LossError> {
        let mut changed = false;
        for (belief, evader) in self.beliefs.iter_mut().zip(self.evaders) {
            changed |= belief.build_bundle(evader, self.tasks, self.cfg)?;
        }
        Ok(changed)
    }

    /// Broadcast and consensus phase of a round.
    pub fn exchange(&mut self) {
        let mut inbox: Vec<ConsensusMessage> =
            self.beliefs.iter().map(AgentBelief::message).collect();
        inbox.sort_by_key(|m| m.sender_id);
        for belief in &mut self.beliefs {
            let mut lost = BTreeSet::new();
            for msg in &inbox {
                if msg.sender_id != belief.agent_id {
                    lost.extend(belief.consensus_step(msg));
                }
            }
            belief.release_on_loss(&lost);
        }
    }

    /// Runs rounds until a round's bidding adds nothing while all agents agree,
    /// or until `max_rounds` bidding rounds have completed.
    pub fn run(
        mut self,
        max_rounds: usize,
    ) -> Result<(AllocationResult, Vec<AgentBelief>), LossError> {
        let mut rounds = 0;
        let mut converged = false;
        loop {
            let agreed_before = self.agreed();
            let grew = self.bid()?;
            if !grew && agreed_before {
                converged = true;
                break;
            }
            if rounds == max_rounds {
                break;
            }
            rounds += 1;
            self.exchange();
        }
        let result = self.allocation(rounds, converged)?;
        Ok((result, self.beliefs))
    }

    fn allocation(
        &self,
        rounds_used: usize,
        converged: bool,
    ) -> Result<AllocationResult, LossError> {
        let mut paths: Vec<AgentPath> = self
            .beliefs
            .iter()
            .map(|b| AgentPath {
                agent_id: b.agent_id,
                tasks: b.path.ids().to_vec(),
            })
            .collect();
        if !converged {
            self.repair(&mut paths)?;
        }
        let mut assignment: BTreeMap<u64, Option<AgentId>> =
            self.tasks.ids().map(|id| (id, None)).collect();
        for p in &paths {
            for &id in &p.tasks {
                assignment.insert(id, Some(p.agent_id));
            }
        }
        Ok(AllocationResult {
            paths,
            assignment,
            rounds_used,
            converged,
        })
    }

    /// Best-effort conflict removal for an unconverged auction: each contested
    /// task stays with the holder that bid lowest for it (lower id on ties),
    /// then tasks left infeasible by the removals are dropped.
    fn repair(&self, paths: &mut [AgentPath]) -> Result<(), LossError> {
        let mut keeper: BTreeMap<u64, (f64, AgentId)> = BTreeMap::new();
        for b in &self.beliefs {
            for &id in b.path.ids() {
                let own = b.claim(id).map_or(f64::INFINITY, |c| c.cost);
                let entry = keeper.entry(id).or_insert((own, b.agent_id));
                if (own, b.agent_id) < *entry {
                    *entry = (own, b.agent_id);
                }
            }
        }
        for (p, evader) in paths.iter_mut().zip(self.evaders) {
            p.tasks
                .retain(|id| keeper.get(id).map(|k| k.1) == Some(p.agent_id));
            let mut kept: Vec<u64> = Vec::with_capacity(p.tasks.len());
            for &id in &p.tasks {
                let mut trial = kept.clone();
                trial.push(id);
                if path_cost(&Path::from(trial), evader, self.tasks, self.cfg)?.is_feasible() {
                    kept.push(id);
                }
            }
            p.tasks = kept;
        }
        Ok(())
    }
}

/// Allocates `tasks` among `evaders` from fresh beliefs.
pub fn resolve(
    evaders: &[EvaderState],
    tasks: &TaskTable,
    cfg: &ScenarioConfig,
) -> Result<AllocationResult, LossError> {
    let cap = cfg.round_cap(evaders.len(), tasks.len());
    Auction::new(evaders, tasks, cfg).run(cap).map(|(r, _)| r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::losses::TaskEntry;
    use crate::scenario::{SpatioTemporalTask, Vec2};

    fn entry(id: u64, x: f64, y: f64, t: f64) -> TaskEntry {
        let p = Vec2::new(x, y);
        TaskEntry {
            task: SpatioTemporalTask {
                task_id: id,
                neutral_point: p,
                intrusion_time: t,
            },
            intruder_pos: p * (1.0 + 3.0 * t / p.norm()),
        }
    }

    fn evader(id: usize, x: f64, y: f64) -> EvaderState {
        EvaderState::new(id, Vec2::new(x, y), 4.5)
    }

    fn belief_with(
        agent: AgentId,
        tasks: &TaskTable,
        entries: &[(u64, f64, Option<AgentId>)],
    ) -> AgentBelief {
        let mut b = AgentBelief::fresh(agent, tasks);
        for &(id, cost, winner) in entries {
            b.set_claim(id, Claim { cost, winner });
            if winner == Some(agent) {
                b.bundle.push(id);
                b.path.insert(b.path.len(), id);
            }
        }
        b
    }

    #[test]
    fn single_candidate_auction() {
        let cfg = ScenarioConfig::default();
        let tasks = TaskTable::new(vec![entry(1, 100.0, 0.0, 40.0)]);
        let e = evader(0, 0.0, 100.0);
        let mut b = AgentBelief::fresh(0, &tasks);
        assert!(b.build_bundle(&e, &tasks, &cfg).unwrap());
        assert_eq!(b.bundle, vec![1]);
        assert_eq!(b.path.ids(), &[1]);
        let expected = marginal_cost(&Path::new(), &e, 1, &tasks, &cfg)
            .unwrap()
            .cost
            .finite()
            .unwrap();
        assert_eq!(
            b.claim(1),
            Some(Claim {
                cost: expected,
                winner: Some(0)
            })
        );
        assert!(b.is_consistent());
    }

    #[test]
    fn near_task_can_crowd_out_far_task() {
        let cfg = ScenarioConfig::default();
        // far alone is reachable (197.5 m in 50 s) but not after near (200 m in 40 s)
        let tasks = TaskTable::new(vec![
            entry(1, 100.0, 0.0, 10.0),
            entry(2, -100.0, 0.0, 50.0),
        ]);
        let e = evader(0, 95.0, 31.2);
        let mut b = AgentBelief::fresh(0, &tasks);
        b.build_bundle(&e, &tasks, &cfg).unwrap();
        assert_eq!(b.bundle, vec![1]);
        assert!(marginal_cost(&Path::new(), &e, 2, &tasks, &cfg)
            .unwrap()
            .cost
            .is_feasible());
        for n in 0..=1 {
            let trial = b.path.inserted(n, 2);
            assert!(!path_cost(&trial, &e, &tasks, &cfg).unwrap().is_feasible());
        }
    }

    #[test]
    fn all_infeasible_leaves_belief_untouched() {
        let cfg = ScenarioConfig::default();
        let tasks = TaskTable::new(vec![entry(1, -100.0, 0.0, 5.0), entry(2, 0.0, -100.0, 3.0)]);
        let e = evader(0, 100.0, 0.0);
        let mut b = AgentBelief::fresh(0, &tasks);
        let before = b.clone();
        assert!(!b.build_bundle(&e, &tasks, &cfg).unwrap());
        assert_eq!(b, before);
    }

    fn three_tasks() -> TaskTable {
        TaskTable::new(vec![
            entry(1, 100.0, 0.0, 40.0),
            entry(2, 0.0, 100.0, 60.0),
            entry(3, -100.0, 0.0, 80.0),
        ])
    }

    #[test]
    fn lower_bid_from_sender_wins() {
        let tasks = three_tasks();
        let mut receiver = belief_with(0, &tasks, &[(1, 100.0, Some(0))]);
        let sender = belief_with(1, &tasks, &[(1, 80.0, Some(1))]);
        let lost = receiver.consensus_step(&sender.message());
        assert_eq!(lost, BTreeSet::from([1]));
        assert_eq!(
            receiver.claim(1),
            Some(Claim {
                cost: 80.0,
                winner: Some(1)
            })
        );
    }

    #[test]
    fn higher_bid_from_sender_is_ignored() {
        let tasks = three_tasks();
        let mut receiver = belief_with(0, &tasks, &[(1, 80.0, Some(0))]);
        let sender = belief_with(1, &tasks, &[(1, 100.0, Some(1))]);
        assert!(receiver.consensus_step(&sender.message()).is_empty());
        assert_eq!(
            receiver.claim(1),
            Some(Claim {
                cost: 80.0,
                winner: Some(0)
            })
        );
    }

    #[test]
    fn equal_bids_go_to_lower_id() {
        let tasks = three_tasks();
        let mut high = belief_with(2, &tasks, &[(1, 50.0, Some(2))]);
        let mut low = belief_with(1, &tasks, &[(1, 50.0, Some(1))]);
        let from_low = low.message();
        let from_high = high.message();
        assert_eq!(high.consensus_step(&from_low), BTreeSet::from([1]));
        assert!(low.consensus_step(&from_high).is_empty());
        assert_eq!(high.claim(1).unwrap().winner, Some(1));
        assert_eq!(low.claim(1).unwrap().winner, Some(1));
    }

    #[test]
    fn sender_confirming_itself_refreshes_cost() {
        let tasks = three_tasks();
        let mut receiver = belief_with(0, &tasks, &[(2, 30.0, Some(1))]);
        let sender = belief_with(1, &tasks, &[(2, 45.0, Some(1))]);
        receiver.consensus_step(&sender.message());
        assert_eq!(
            receiver.claim(2),
            Some(Claim {
                cost: 45.0,
                winner: Some(1)
            })
        );
    }

    #[test]
    fn crossed_beliefs_reset() {
        let tasks = three_tasks();
        let mut receiver = belief_with(0, &tasks, &[(1, 70.0, Some(1))]);
        let sender = belief_with(1, &tasks, &[(1, 60.0, Some(0))]);
        assert!(receiver.consensus_step(&sender.message()).is_empty());
        assert_eq!(receiver.claim(1), Some(Claim::UNCLAIMED));
    }

    #[test]
    fn better_third_party_bid_resets() {
        let tasks = three_tasks();
        let mut receiver = belief_with(0, &tasks, &[(3, 90.0, Some(0))]);
        let sender = belief_with(1, &tasks, &[(3, 40.0, Some(2))]);
        assert_eq!(
            receiver.consensus_step(&sender.message()),
            BTreeSet::from([3])
        );
        assert_eq!(receiver.claim(3), Some(Claim::UNCLAIMED));

        let mut agrees = belief_with(0, &tasks, &[(3, 40.0, Some(2))]);
        assert!(agrees.consensus_step(&sender.message()).is_empty());
        assert_eq!(
            agrees.claim(3),
            Some(Claim {
                cost: 40.0,
                winner: Some(2)
            })
        );
    }

    #[test]
    fn withdrawn_claim_is_forgotten() {
        let tasks = three_tasks();
        let mut receiver = belief_with(0, &tasks, &[(2, 30.0, Some(1))]);
        let sender = AgentBelief::fresh(1, &tasks);
        receiver.consensus_step(&sender.message());
        assert_eq!(receiver.claim(2), Some(Claim::UNCLAIMED));
    }

    #[test]
    fn identical_tables_are_a_fixed_point() {
        let tasks = three_tasks();
        let mut receiver = belief_with(0, &tasks, &[(1, 10.0, Some(0)), (2, 20.0, Some(1))]);
        let mut sender = belief_with(1, &tasks, &[(2, 20.0, Some(1))]);
        sender.set_claim(
            1,
            Claim {
                cost: 10.0,
                winner: Some(0),
            },
        );
        let before = receiver.clone();
        assert!(receiver.consensus_step(&sender.message()).is_empty());
        assert_eq!(receiver, before);
    }

    #[test]
    fn release_is_noop_without_losses() {
        let tasks = three_tasks();
        let mut b = belief_with(0, &tasks, &[(1, 10.0, Some(0))]);
        let before = b.clone();
        b.release_on_loss(&BTreeSet::new());
        assert_eq!(b, before);
    }

    #[test]
    fn losing_one_task_cancels_the_whole_bundle() {
        let tasks = three_tasks();
        let mut b = belief_with(
            0,
            &tasks,
            &[(1, 10.0, Some(0)), (2, 20.0, Some(0)), (3, 30.0, Some(0))],
        );
        let rival = belief_with(1, &tasks, &[(2, 5.0, Some(1))]);
        let lost = b.consensus_step(&rival.message());
        assert_eq!(lost, BTreeSet::from([2]));
        b.release_on_loss(&lost);
        assert!(b.bundle.is_empty() && b.path.is_empty());
        assert_eq!(b.claim(1), Some(Claim::UNCLAIMED));
        assert_eq!(b.claim(3), Some(Claim::UNCLAIMED));
        assert_eq!(
            b.claim(2),
            Some(Claim {
                cost: 5.0,
                winner: Some(1)
            })
        );
        assert!(b.is_consistent());
    }

    #[test]
    fn lost_task_keeps_the_winners_values() {
        let tasks = three_tasks();
        let mut b = belief_with(0, &tasks, &[(1, 10.0, Some(0))]);
        let rival = belief_with(3, &tasks, &[(1, 7.5, Some(3))]);
        let lost = b.consensus_step(&rival.message());
        b.release_on_loss(&lost);
        assert!(b.bundle.is_empty());
        assert_eq!(b.claim(1), rival.claim(1));
    }

    #[test]
    fn resolve_single_agent_single_task() {
        let cfg = ScenarioConfig::default();
        let tasks = TaskTable::new(vec![entry(1, 100.0, 0.0, 40.0)]);
        let evaders = [evader(0, 0.0, 100.0)];
        let r = resolve(&evaders, &tasks, &cfg).unwrap();
        assert!(r.converged);
        assert_eq!(r.rounds_used, 1);
        assert_eq!(r.assignment[&1], Some(0));
        assert_eq!(r.path_of(0), Some(&[1u64][..]));
    }

    #[test]
    fn resolve_closer_agent_wins() {
        let cfg = ScenarioConfig::default();
        let tasks = TaskTable::new(vec![entry(1, 100.0, 0.0, 40.0)]);
        let evaders = [evader(0, 0.0, 100.0), evader(1, 0.0, -100.0)];
        let evaders_shifted = [evaders[0].clone(), evader(1, 10.0, -99.0)];
        let r = resolve(&evaders_shifted, &tasks, &cfg).unwrap();
        assert!(r.converged);
        assert_eq!(r.assignment[&1], Some(1));
        let c0 = marginal_cost(&Path::new(), &evaders_shifted[0], 1, &tasks, &cfg)
            .unwrap()
            .cost;
        let c1 = marginal_cost(&Path::new(), &evaders_shifted[1], 1, &tasks, &cfg)
            .unwrap()
            .cost;
        assert!(c1 < c0);

        // exact tie goes to the lower id
        let r = resolve(&evaders, &tasks, &cfg).unwrap();
        assert_eq!(r.assignment[&1], Some(0));
    }

    #[test]
    fn resolve_with_no_tasks() {
        let cfg = ScenarioConfig::default();
        let evaders = [evader(0, 100.0, 0.0), evader(1, -100.0, 0.0)];
        let r = resolve(&evaders, &TaskTable::default(), &cfg).unwrap();
        assert!(r.converged);
        assert_eq!(r.rounds_used, 0);
        assert!(r.assignment.is_empty());
        assert!(r.paths.iter().all(|p| p.tasks.is_empty()));
    }

    #[test]
    fn co_timed_tasks_exceeding_agents_leave_one_unassigned() {
        let cfg = ScenarioConfig::default();
        let evaders = [evader(0, 100.0, 0.0), evader(1, -100.0, 0.0)];
        let t = 30.0;
        let tasks = TaskTable::new(
            (0..3)
                .map(|k| {
                    let a = std::f64::consts::TAU * k as f64 / 3.0 + 0.3;
                    entry(k as u64 + 1, 100.0 * a.cos(), 100.0 * a.sin(), t)
                })
                .collect(),
        );
        let r = resolve(&evaders, &tasks, &cfg).unwrap();
        assert!(r.converged);
        assert!(!r.unassigned().is_empty());
    }
}
