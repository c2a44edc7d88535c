//! Scheduler interface and the comparison policies.

mod ga;
mod heuristics;

use thiserror::Error;

pub use ga::{magma_ga, Chromosome, GaOutcome, MagmaConfig, MagmaScheduler};
pub use heuristics::{
    fcfs_h, herald_lb, prema_h, FcfsH, HeraldLb, PremaConfig, PremaH, RandomScheduler,
};

use crate::cost::{CostTable, LayerCost};
use crate::model::{Cycles, Decision, MasConfig, SystemSnapshot};
use crate::sim::{Engine, SimError};

#[derive(Debug, Error)]
pub enum SchedError {
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error("policy: {0}")]
    Policy(String),
}

/// Everything a policy may consult besides the snapshot. The engine is
/// only read, e.g. to project candidate schedules.
pub struct SchedEnv<'a> {
    pub cfg: &'a MasConfig,
    pub table: &'a CostTable,
    pub engine: &'a Engine<'a>,
    pub period: Cycles,
}

pub trait Scheduler {
    fn name(&self) -> String;

    /// One decision per ready-queue entry, in queue order.
    fn schedule(
        &mut self,
        snapshot: &SystemSnapshot,
        env: &SchedEnv<'_>,
    ) -> Result<Vec<Decision>, SchedError>;
}

/// SA minimising `max(busy[m], ready) + c[m]`; ties go to the lowest index.
pub fn earliest_finish_sa(costs: &[LayerCost], busy: &[Cycles], ready: Cycles) -> usize {
    let mut best = 0;
    let mut best_finish = Cycles::MAX;
    for (m, cost) in costs.iter().enumerate() {
        let finish = busy[m].max(ready).saturating_add(cost.cycles);
        if finish < best_finish {
            best = m;
            best_finish = finish;
        }
    }
    best
}

/// Maps rank 0 (first) .. n-1 (last) affinely onto 1.0 .. -1.0.
pub fn rank_priority(rank: usize, n: usize) -> f64 {
    if n <= 1 {
        1.0
    } else {
        1.0 - 2.0 * rank as f64 / (n - 1) as f64
    }
}

/// List-scheduling pass: visits ready-queue indices in `order`, assigning
/// each to its earliest-finish SA against a virtual timeline that tracks
/// both SA horizons and the planned finish of each job's previous layer.
pub(crate) fn plan_earliest_finish(
    snapshot: &SystemSnapshot,
    table: &CostTable,
    order: &[usize],
) -> Vec<Decision> {
    use std::collections::HashMap;
    let n = snapshot.ready_queue.len();
    let mut busy = snapshot.busy_until.clone();
    let mut layer_finish: HashMap<(u64, usize), Cycles> = HashMap::new();
    let mut decisions = vec![Decision { priority: 0.0, sa: 0 }; n];
    for (rank, &i) in order.iter().enumerate() {
        let e = &snapshot.ready_queue[i];
        let ready = if e.layer == 0 {
            0
        } else {
            layer_finish.get(&(e.job_id, e.layer - 1)).copied().unwrap_or(0)
        };
        let costs = table.layer_costs(e.model_id, e.layer);
        let sa = earliest_finish_sa(costs, &busy, ready);
        let finish = busy[sa].max(ready) + costs[sa].cycles;
        busy[sa] = finish;
        layer_finish.insert((e.job_id, e.layer), finish);
        decisions[i] = Decision { priority: rank_priority(rank, n), sa };
    }
    decisions
}

/// Policy chosen by name on the command line.
pub fn scheduler_names() -> &'static [&'static str] {
    &["fcfs-h", "prema-h", "herald", "magma", "relmas", "random"]
}
