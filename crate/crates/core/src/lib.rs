//! Airspace defense by decentralized spatio-temporal task allocation.
//!
//! Intruders flying toward a protected circle become tasks (a boundary point
//! and a time of arrival). Evaders split those tasks with a consensus-based
//! bundle auction whose bids are insertion costs under a composite
//! spatial-temporal loss. A kinematic simulator closes the loop and a
//! Monte-Carlo harness measures success rates.
//!
//! - [`scenario`]: configuration, world types, task generation, spawning
//! - [`losses`]: loss functions, path cost and insertion marginal cost
//! - [`cbba`]: bundle construction, consensus rules and the round driver
//! - [`simulator`]: world stepping, replanning and episodes
//! - [`harness`]: Monte-Carlo sweeps and the exhaustive oracle
//! - [`report`]: CSV, text and JSON-lines output

pub mod cbba;
pub mod harness;
pub mod losses;
pub mod report;
pub mod scenario;
pub mod simulator;

pub use cbba::{resolve, AgentBelief, AllocationResult, Auction, Claim};
pub use harness::{brute_force_oracle, run_montecarlo, OracleSolution, SweepConfig, SweepResult};
pub use losses::{composite_loss, marginal_cost, path_cost, Loss, Path, TaskTable};
pub use scenario::{load_scenario, ScenarioConfig, Vec2};
pub use simulator::{opening_scene, run_episode, Episode, EpochMetrics, SimEvent, WorldState};
