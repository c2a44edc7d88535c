use std::collections::BTreeMap;

use num_traits::{One, Signed, Zero};

use crate::cost::CostTable;
use crate::model::{
    Cycles, Decision, Job, MasConfig, ReadyEntry, SubJobRef, SubJobState, SystemSnapshot,
};
use crate::rational::{self, Rational};

use super::contention::contention_rate;
use super::{SimError, SimEvent};

/// One sub-job occupying an SA.
#[derive(Debug, Clone)]
struct Slot {
    sj: SubJobRef,
    start: Cycles,
    /// Work left, in cycles at full rate. Always positive while running.
    remaining: Rational,
    bandwidth: Rational,
    energy_pj: f64,
}

#[derive(Debug, Clone)]
struct ActiveJob {
    job: Job,
    layers: Vec<SubJobState>,
    missed: bool,
}

impl ActiveJob {
    fn has_pending(&self) -> bool {
        self.layers.iter().any(|s| s.is_pending())
    }

    fn is_done(&self) -> bool {
        self.layers.iter().all(|s| s.is_terminal())
    }

    fn hit(&self) -> bool {
        !self.missed
            && matches!(self.layers.last(), Some(SubJobState::Finished { finish, .. })
                if *finish <= self.job.absolute_deadline())
    }

    fn is_ready(&self, layer: usize) -> bool {
        self.layers[layer].is_pending()
            && (layer == 0 || matches!(self.layers[layer - 1], SubJobState::Finished { .. }))
    }
}

#[derive(Debug, Clone, Copy)]
struct Queued {
    sj: SubJobRef,
    priority: f64,
    order: usize,
}

/// Mutable engine state; cheap enough to clone for projections.
#[derive(Debug, Clone)]
struct SimState {
    now: Cycles,
    running: Vec<Option<Slot>>,
    queues: Vec<Vec<Queued>>,
    jobs: BTreeMap<u64, ActiveJob>,
    /// Contention stall of the current period; `None` when not tracked.
    stall: Option<Rational>,
}

/// Outcome of one committed scheduling period.
#[derive(Debug, Clone, PartialEq)]
pub struct PeriodOutcome {
    /// Sub-jobs still unstarted at the period end, sorted by deadline.
    pub residual_rq: Vec<ReadyEntry>,
    pub finished: Vec<(SubJobRef, Cycles)>,
    pub dropped: Vec<SubJobRef>,
    /// Wall cycles lost to bandwidth contention, summed over SAs.
    pub stall_cycles_total: Rational,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProjectedOutcome {
    Finished(Cycles),
    Dropped,
}

impl ProjectedOutcome {
    pub fn finish(self) -> Option<Cycles> {
        match self {
            ProjectedOutcome::Finished(f) => Some(f),
            ProjectedOutcome::Dropped => None,
        }
    }
}

/// Per-entry projected outcome, aligned with the ready queue it was made
/// for.
#[derive(Debug, Clone, PartialEq)]
pub struct Projection {
    pub now: Cycles,
    pub ready_queue: Vec<ReadyEntry>,
    pub outcomes: Vec<ProjectedOutcome>,
}

/// Deterministic discrete-event engine. All events land on integer cycles:
/// a sub-job completes at the first cycle boundary where its integrated
/// progress reaches its contention-free latency.
#[derive(Debug, Clone)]
pub struct Engine<'a> {
    cfg: &'a MasConfig,
    table: &'a CostTable,
    state: SimState,
}

impl<'a> Engine<'a> {
    pub fn new(cfg: &'a MasConfig, table: &'a CostTable) -> Self {
        let m = cfg.num_sas();
        Engine {
            cfg,
            table,
            state: SimState {
                now: 0,
                running: vec![None; m],
                queues: vec![Vec::new(); m],
                jobs: BTreeMap::new(),
                stall: None,
            },
        }
    }

    pub fn cfg(&self) -> &'a MasConfig {
        self.cfg
    }

    pub fn table(&self) -> &'a CostTable {
        self.table
    }

    pub fn now(&self) -> Cycles {
        self.state.now
    }

    /// No running sub-job and no admitted job left.
    pub fn is_drained(&self) -> bool {
        self.state.jobs.is_empty()
    }

    /// Skips ahead while the system is empty.
    pub fn idle_until(&mut self, t: Cycles) {
        debug_assert!(self.is_drained());
        self.state.now = self.state.now.max(t);
    }

    /// Admits a job with all its layers pending. A job whose deadline has
    /// already passed is dropped immediately.
    pub fn admit(&mut self, job: Job, obs: &mut dyn FnMut(&SimEvent)) -> Result<(), SimError> {
        let layers = self
            .table
            .num_layers(job.model_id())
            .ok_or(SimError::UnknownModel(job.model_id()))?;
        if self.state.jobs.contains_key(&job.job_id()) {
            return Err(SimError::DuplicateJob(job.job_id()));
        }
        let id = job.job_id();
        self.state.jobs.insert(id, ActiveJob { job, layers: vec![SubJobState::Pending; layers], missed: false });
        self.state.drop_expired(obs);
        Ok(())
    }

    /// Pending sub-jobs sorted by (deadline, job, layer).
    pub fn ready_queue(&self) -> Vec<ReadyEntry> {
        self.state.ready_queue()
    }

    pub fn snapshot(&self) -> SystemSnapshot {
        SystemSnapshot {
            now: self.state.now,
            busy_until: self.busy_until(),
            ready_queue: self.ready_queue(),
        }
    }

    /// Wall cycles until each SA frees up at the current contention rate.
    pub fn busy_until(&self) -> Vec<Cycles> {
        let rate = self.state.rate(self.cfg.dram_bandwidth());
        self.state
            .running
            .iter()
            .map(|slot| match slot {
                Some(s) => rational::ceil_u64(&(&s.remaining / &rate)).unwrap_or(Cycles::MAX),
                None => 0,
            })
            .collect()
    }

    /// Commits `decisions` (aligned with [`Engine::ready_queue`]) and runs
    /// the MAS for `period` cycles.
    pub fn advance_period(
        &mut self,
        decisions: &[Decision],
        period: Cycles,
        obs: &mut dyn FnMut(&SimEvent),
    ) -> Result<PeriodOutcome, SimError> {
        if period == 0 {
            return Err(SimError::ZeroPeriod);
        }
        let rq = self.ready_queue();
        self.state.install(&rq, decisions, self.cfg.num_sas())?;
        let bandwidth = self.cfg.dram_bandwidth();
        let end = self.state.now.saturating_add(period);
        self.state.stall = Some(Rational::zero());
        let mut finished = Vec::new();
        let mut dropped = Vec::new();
        obs(&SimEvent::Period { t: self.state.now });
        {
            let mut tap = |ev: &SimEvent| {
                match ev {
                    SimEvent::Finish { t, job, layer, .. } => {
                        finished.push((SubJobRef { job: *job, layer: *layer }, *t))
                    }
                    SimEvent::Drop { job, layer, .. } => dropped.push(SubJobRef { job: *job, layer: *layer }),
                    _ => {}
                }
                obs(ev);
            };
            loop {
                self.state.drop_expired(&mut tap);
                self.state.dispatch(self.table, &mut tap);
                let rate = self.state.rate(bandwidth);
                let mut next = end;
                if let Some(t) = self.state.next_completion(&rate) {
                    next = next.min(t);
                }
                if let Some(t) = self.state.next_deadline() {
                    next = next.min(t);
                }
                self.state.advance_to(next, &rate, &mut tap);
                if next >= end {
                    self.state.drop_expired(&mut tap);
                    break;
                }
            }
        }
        Ok(PeriodOutcome {
            residual_rq: self.ready_queue(),
            finished,
            dropped,
            stall_cycles_total: self.state.stall.take().unwrap_or_default(),
        })
    }

    /// Runs `decisions` to completion on a copy of the engine with no
    /// further arrivals. The engine itself is untouched.
    pub fn project(&self, decisions: &[Decision]) -> Result<Projection, SimError> {
        let rq = self.ready_queue();
        let mut state = self.state.clone();
        state.stall = None;
        state.install(&rq, decisions, self.cfg.num_sas())?;
        let index: BTreeMap<SubJobRef, usize> =
            rq.iter().enumerate().map(|(i, e)| (e.sub_job(), i)).collect();
        let mut outcomes: Vec<Option<ProjectedOutcome>> = vec![None; rq.len()];
        let unresolved = std::cell::Cell::new(rq.len());
        let bandwidth = self.cfg.dram_bandwidth();
        let mut record = |ev: &SimEvent| {
            let (sj, outcome) = match ev {
                SimEvent::Finish { t, job, layer, .. } => {
                    (SubJobRef { job: *job, layer: *layer }, ProjectedOutcome::Finished(*t))
                }
                SimEvent::Drop { job, layer, .. } => {
                    (SubJobRef { job: *job, layer: *layer }, ProjectedOutcome::Dropped)
                }
                _ => return,
            };
            if let Some(&i) = index.get(&sj) {
                if outcomes[i].is_none() {
                    outcomes[i] = Some(outcome);
                    unresolved.set(unresolved.get() - 1);
                }
            }
        };
        loop {
            state.drop_expired(&mut record);
            state.dispatch(self.table, &mut record);
            if unresolved.get() == 0 {
                break;
            }
            let rate = state.rate(bandwidth);
            let next = match (state.next_completion(&rate), state.next_deadline()) {
                (Some(a), Some(b)) => a.min(b),
                (Some(a), None) | (None, Some(a)) => a,
                (None, None) => break,
            };
            state.advance_to(next, &rate, &mut record);
        }
        drop(record);
        Ok(Projection {
            now: self.state.now,
            outcomes: outcomes.into_iter().map(|o| o.unwrap_or(ProjectedOutcome::Dropped)).collect(),
            ready_queue: rq,
        })
    }
}

impl SimState {
    fn rate(&self, bandwidth: &Rational) -> Rational {
        contention_rate(self.running.iter().flatten().map(|s| &s.bandwidth), bandwidth)
    }

    fn ready_queue(&self) -> Vec<ReadyEntry> {
        let mut rq: Vec<ReadyEntry> = self
            .jobs
            .values()
            .flat_map(|aj| {
                aj.layers.iter().enumerate().filter(|(_, s)| s.is_pending()).map(move |(layer, _)| {
                    ReadyEntry {
                        job_id: aj.job.job_id(),
                        model_id: aj.job.model_id(),
                        layer,
                        arrival: aj.job.arrival(),
                        qos_latency: aj.job.qos_latency(),
                    }
                })
            })
            .collect();
        rq.sort_by_key(ReadyEntry::sort_key);
        rq
    }

    fn install(&mut self, rq: &[ReadyEntry], decisions: &[Decision], num_sas: usize) -> Result<(), SimError> {
        if decisions.len() != rq.len() {
            return Err(SimError::DecisionCount { expected: rq.len(), found: decisions.len() });
        }
        for queue in &mut self.queues {
            queue.clear();
        }
        for (order, (entry, d)) in rq.iter().zip(decisions).enumerate() {
            if d.sa >= num_sas {
                return Err(SimError::UnknownSa { index: order, sa: d.sa });
            }
            if !d.priority.is_finite() {
                return Err(SimError::BadPriority { index: order });
            }
            self.queues[d.sa].push(Queued { sj: entry.sub_job(), priority: d.priority, order });
        }
        for queue in &mut self.queues {
            queue.sort_by(|a, b| b.priority.total_cmp(&a.priority).then(a.order.cmp(&b.order)));
        }
        Ok(())
    }

    /// Every running sub-job progresses at the same rate, so the one with
    /// the least remaining work completes first.
    fn next_completion(&self, rate: &Rational) -> Option<Cycles> {
        let least = self.running.iter().flatten().map(|s| &s.remaining).min()?;
        let wall = rational::ceil_u64(&(least / rate)).unwrap_or(Cycles::MAX);
        Some(self.now.saturating_add(wall.max(1)))
    }

    fn next_deadline(&self) -> Option<Cycles> {
        self.jobs
            .values()
            .filter(|aj| aj.has_pending())
            .map(|aj| aj.job.absolute_deadline())
            .filter(|&d| d > self.now)
            .min()
    }

    /// Moves time forward to `t`; no completion may fall strictly before `t`.
    fn advance_to(&mut self, t: Cycles, rate: &Rational, obs: &mut dyn FnMut(&SimEvent)) {
        if t <= self.now {
            return;
        }
        let dt = rational::from_u64(t - self.now);
        let busy = self.running.iter().flatten().count();
        if let Some(stall) = self.stall.as_mut().filter(|_| busy > 0 && !rate.is_one()) {
            *stall += (Rational::one() - rate) * &dt * rational::from_u64(busy as u64);
        }
        let progress = rate * &dt;
        self.now = t;
        for sa in 0..self.running.len() {
            let done = match &mut self.running[sa] {
                Some(slot) => {
                    slot.remaining -= &progress;
                    !slot.remaining.is_positive()
                }
                None => false,
            };
            if done {
                let slot = self.running[sa].take().expect("slot present");
                self.complete(sa, slot, obs);
            }
        }
    }

    fn complete(&mut self, sa: usize, slot: Slot, obs: &mut dyn FnMut(&SimEvent)) {
        let now = self.now;
        let aj = self.jobs.get_mut(&slot.sj.job).expect("running sub-job belongs to an active job");
        let state = &mut aj.layers[slot.sj.layer];
        *state = state
            .transition(SubJobState::Finished { sa, start: slot.start, finish: now })
            .expect("running sub-job finishes");
        obs(&SimEvent::Finish {
            t: now,
            job: slot.sj.job,
            layer: slot.sj.layer,
            sa,
            start: slot.start,
            energy_pj: slot.energy_pj,
        });
        self.retire_if_done(slot.sj.job, obs);
    }

    fn retire_if_done(&mut self, job_id: u64, obs: &mut dyn FnMut(&SimEvent)) {
        if self.jobs.get(&job_id).is_some_and(ActiveJob::is_done) {
            let aj = self.jobs.remove(&job_id).expect("checked above");
            obs(&SimEvent::JobDone { t: self.now, job: job_id, hit: aj.hit() });
        }
    }

    /// Drops every pending layer of jobs whose deadline is at or before now.
    fn drop_expired(&mut self, obs: &mut dyn FnMut(&SimEvent)) {
        let now = self.now;
        let expired: Vec<u64> = self
            .jobs
            .values()
            .filter(|aj| aj.job.absolute_deadline() <= now && aj.has_pending())
            .map(|aj| aj.job.job_id())
            .collect();
        for job_id in expired {
            let aj = self.jobs.get_mut(&job_id).expect("collected above");
            aj.missed = true;
            for (layer, state) in aj.layers.iter_mut().enumerate() {
                if state.is_pending() {
                    *state = state.transition(SubJobState::Dropped).expect("pending drops");
                    obs(&SimEvent::Drop { t: now, job: job_id, layer });
                }
            }
            self.retire_if_done(job_id, obs);
        }
    }

    /// Starts, on every idle SA, its highest-priority dependency-ready
    /// queued sub-job. Blocked entries are skipped.
    fn dispatch(&mut self, table: &CostTable, obs: &mut dyn FnMut(&SimEvent)) {
        let now = self.now;
        for sa in 0..self.running.len() {
            if self.running[sa].is_some() {
                continue;
            }
            let jobs = &self.jobs;
            self.queues[sa].retain(|q| jobs.get(&q.sj.job).is_some_and(|aj| aj.layers[q.sj.layer].is_pending()));
            let pick = self.queues[sa]
                .iter()
                .position(|q| jobs.get(&q.sj.job).is_some_and(|aj| aj.is_ready(q.sj.layer)));
            let Some(pos) = pick else { continue };
            let sj = self.queues[sa].remove(pos).sj;
            let aj = self.jobs.get_mut(&sj.job).expect("queued sub-job is active");
            let state = &mut aj.layers[sj.layer];
            *state = state.transition(SubJobState::Running { sa, start: now }).expect("pending starts");
            let cost = table.get(aj.job.model_id(), sj.layer, sa);
            self.running[sa] = Some(Slot {
                sj,
                start: now,
                remaining: rational::from_u64(cost.cycles),
                bandwidth: cost.bandwidth(),
                energy_pj: cost.energy_pj,
            });
            obs(&SimEvent::Start { t: now, job: sj.job, layer: sj.layer, sa });
        }
    }
}
