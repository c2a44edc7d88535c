use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cost::CostTable;
use crate::model::{Cycles, Decision, SystemSnapshot};

use super::{plan_earliest_finish, rank_priority, SchedEnv, SchedError, Scheduler};

/// First-come-first-served priorities (earliest arrival highest, then job
/// id, then layer) with earliest-finish SA selection.
pub fn fcfs_h(snapshot: &SystemSnapshot, table: &CostTable) -> Vec<Decision> {
    let mut order: Vec<usize> = (0..snapshot.ready_queue.len()).collect();
    order.sort_by_key(|&i| {
        let e = &snapshot.ready_queue[i];
        (e.arrival, e.job_id, e.layer)
    });
    plan_earliest_finish(snapshot, table, &order)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PremaConfig {
    pub base_priority: f64,
    pub slope: f64,
    pub threshold: f64,
}

impl Default for PremaConfig {
    fn default() -> Self {
        PremaConfig { base_priority: 1.0, slope: 2.0, threshold: 2.0 }
    }
}

impl PremaConfig {
    /// `base + slope * waiting / q`.
    pub fn token(&self, now: Cycles, arrival: Cycles, qos: Cycles) -> f64 {
        let waiting = now.saturating_sub(arrival) as f64;
        self.base_priority + self.slope * waiting / qos.max(1) as f64
    }
}

/// Token-gated shortest-job-first: jobs whose waiting-time token reaches
/// the threshold form the candidate set and go first; both groups are
/// ordered by shortest remaining contention-free latency.
pub fn prema_h(snapshot: &SystemSnapshot, table: &CostTable, cfg: &PremaConfig) -> Vec<Decision> {
    struct JobInfo {
        token: f64,
        remaining: Cycles,
        entries: Vec<usize>,
    }
    let mut jobs: BTreeMap<u64, JobInfo> = BTreeMap::new();
    for (i, e) in snapshot.ready_queue.iter().enumerate() {
        let min_c = table.layer_costs(e.model_id, e.layer).iter().map(|c| c.cycles).min().unwrap_or(0);
        let info = jobs.entry(e.job_id).or_insert_with(|| JobInfo {
            token: cfg.token(snapshot.now, e.arrival, e.qos_latency),
            remaining: 0,
            entries: Vec::new(),
        });
        info.remaining += min_c;
        info.entries.push(i);
    }
    let any_candidate = jobs.values().any(|j| j.token >= cfg.threshold);
    let mut ranked: Vec<(bool, Cycles, u64)> = jobs
        .iter()
        .map(|(&id, j)| {
            let candidate = !any_candidate || j.token >= cfg.threshold;
            (!candidate, j.remaining, id)
        })
        .collect();
    ranked.sort();
    let mut order = Vec::with_capacity(snapshot.ready_queue.len());
    for (_, _, id) in ranked {
        let mut entries = jobs[&id].entries.clone();
        entries.sort_by_key(|&i| snapshot.ready_queue[i].layer);
        order.extend(entries);
    }
    plan_earliest_finish(snapshot, table, &order)
}

/// Load balancing: in deadline order, each sub-job goes to the SA with the
/// smallest accumulated load after adding it.
pub fn herald_lb(snapshot: &SystemSnapshot, table: &CostTable) -> Vec<Decision> {
    let n = snapshot.ready_queue.len();
    let mut load: Vec<Cycles> = snapshot.busy_until.clone();
    snapshot
        .ready_queue
        .iter()
        .enumerate()
        .map(|(rank, e)| {
            let costs = table.layer_costs(e.model_id, e.layer);
            let mut best = 0;
            let mut best_load = Cycles::MAX;
            for (m, c) in costs.iter().enumerate() {
                let after = load[m].saturating_add(c.cycles);
                if after < best_load {
                    best = m;
                    best_load = after;
                }
            }
            load[best] = best_load;
            Decision { priority: rank_priority(rank, n), sa: best }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, Default)]
pub struct FcfsH;

impl Scheduler for FcfsH {
    fn name(&self) -> String {
        "fcfs-h".into()
    }

    fn schedule(&mut self, snapshot: &SystemSnapshot, env: &SchedEnv<'_>) -> Result<Vec<Decision>, SchedError> {
        Ok(fcfs_h(snapshot, env.table))
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct PremaH {
    pub cfg: PremaConfig,
}

impl Scheduler for PremaH {
    fn name(&self) -> String {
        "prema-h".into()
    }

    fn schedule(&mut self, snapshot: &SystemSnapshot, env: &SchedEnv<'_>) -> Result<Vec<Decision>, SchedError> {
        Ok(prema_h(snapshot, env.table, &self.cfg))
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct HeraldLb;

impl Scheduler for HeraldLb {
    fn name(&self) -> String {
        "herald".into()
    }

    fn schedule(&mut self, snapshot: &SystemSnapshot, env: &SchedEnv<'_>) -> Result<Vec<Decision>, SchedError> {
        Ok(herald_lb(snapshot, env.table))
    }
}

/// Uniformly random priorities and SAs.
#[derive(Debug, Clone)]
pub struct RandomScheduler {
    rng: ChaCha8Rng,
}

impl RandomScheduler {
    pub fn new(seed: u64) -> Self {
        RandomScheduler { rng: ChaCha8Rng::seed_from_u64(seed) }
    }
}

impl Scheduler for RandomScheduler {
    fn name(&self) -> String {
        "random".into()
    }

    fn schedule(&mut self, snapshot: &SystemSnapshot, env: &SchedEnv<'_>) -> Result<Vec<Decision>, SchedError> {
        let m = env.cfg.num_sas();
        Ok(snapshot
            .ready_queue
            .iter()
            .map(|_| Decision { priority: self.rng.random_range(-1.0..=1.0), sa: self.rng.random_range(0..m) })
            .collect())
    }
}
