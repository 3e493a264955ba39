#![allow(dead_code)]

use airguard::losses::{TaskEntry, TaskTable};
use airguard::scenario::{
    neutralizing_point, time_of_intrusion, EvaderState, IntruderState, ScenarioConfig,
    SpatioTemporalTask, Vec2,
};
use rand::Rng;
use std::f64::consts::TAU;

/// Evaders scattered inside the airspace and intruders scattered in the
/// engagement ring, all derived from `rng`.
pub fn random_instance<R: Rng>(
    rng: &mut R,
    cfg: &ScenarioConfig,
    agents: usize,
    tasks: usize,
) -> (Vec<EvaderState>, TaskTable) {
    let r = cfg.airspace_radius;
    let evaders = (0..agents)
        .map(|i| {
            let pos = cfg.airspace_center
                + Vec2::from_polar(r * rng.gen_range(0.3..1.0), rng.gen_range(0.0..TAU));
            EvaderState::new(i, pos, cfg.evader_max_speed)
        })
        .collect();
    let entries = (0..tasks as u64)
        .map(|id| {
            let pos = cfg.airspace_center
                + Vec2::from_polar(rng.gen_range(1.1 * r..3.0 * r), rng.gen_range(0.0..TAU));
            task_entry(cfg, IntruderState::approaching(id, pos, cfg.intruder_speed))
        })
        .collect();
    (evaders, TaskTable::new(entries))
}

pub fn task_entry(cfg: &ScenarioConfig, intruder: IntruderState) -> TaskEntry {
    let point = neutralizing_point(&intruder, cfg).expect("intruder outside the airspace");
    let time = time_of_intrusion(&intruder, point).expect("moving intruder");
    TaskEntry {
        task: SpatioTemporalTask {
            task_id: intruder.id,
            neutral_point: point,
            intrusion_time: time,
        },
        intruder_pos: intruder.position,
    }
}

/// The task table restricted to `ids`.
pub fn subtable(tasks: &TaskTable, ids: &[u64]) -> TaskTable {
    TaskTable::new(
        tasks
            .entries()
            .iter()
            .filter(|e| ids.contains(&e.task.task_id))
            .cloned()
            .collect(),
    )
}

pub fn case_study_config() -> ScenarioConfig {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs/case_study.toml");
    let text = std::fs::read_to_string(path).expect("read case study config");
    airguard::load_scenario(&text).expect("valid case study config")
}
