//! Discrete-event execution of schedules on the MAS.
//!
//! The engine models per-SA non-preemptive execution, linear layer
//! precedence within a job, shared DRAM bandwidth contention and deadline
//! drops. Scheduling is periodic: every `period` cycles the residual ready
//! queue plus newly arrived jobs is handed to a [`Scheduler`].

mod contention;
mod engine;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use contention::contention_rate;
pub use engine::{Engine, PeriodOutcome, ProjectedOutcome, Projection};

use crate::cost::CostTable;
use crate::model::{Cycles, MasConfig};
use crate::sched::{SchedEnv, SchedError, Scheduler};
use crate::workload::RequestTrace;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SimError {
    #[error("expected {expected} decisions, scheduler returned {found}")]
    DecisionCount { expected: usize, found: usize },
    #[error("decision {index} targets unknown SA {sa}")]
    UnknownSa { index: usize, sa: usize },
    #[error("decision {index} has a non-finite priority")]
    BadPriority { index: usize },
    #[error("scheduling period must be at least one cycle")]
    ZeroPeriod,
    #[error("unknown model id {0}")]
    UnknownModel(usize),
    #[error("job {0} admitted twice")]
    DuplicateJob(u64),
}

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error("scheduler `{name}`: {source}")]
    Scheduler { name: String, source: SchedError },
}

#[derive(Debug, Clone, PartialEq)]
pub enum SimEvent {
    Start { t: Cycles, job: u64, layer: usize, sa: usize },
    Finish { t: Cycles, job: u64, layer: usize, sa: usize, start: Cycles, energy_pj: f64 },
    Drop { t: Cycles, job: u64, layer: usize },
    Period { t: Cycles },
    JobDone { t: Cycles, job: u64, hit: bool },
}

/// One line of the JSON-lines event log.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventRecord {
    pub t: Cycles,
    pub event: String,
    pub job: Option<u64>,
    pub layer: Option<usize>,
    pub sa: Option<usize>,
}

impl EventRecord {
    pub fn from_event(ev: &SimEvent) -> Option<Self> {
        let rec = |t, event: &str, job, layer, sa| EventRecord { t, event: event.to_string(), job, layer, sa };
        match *ev {
            SimEvent::Start { t, job, layer, sa } => Some(rec(t, "start", Some(job), Some(layer), Some(sa))),
            SimEvent::Finish { t, job, layer, sa, .. } => {
                Some(rec(t, "finish", Some(job), Some(layer), Some(sa)))
            }
            SimEvent::Drop { t, job, layer } => Some(rec(t, "drop", Some(job), Some(layer), None)),
            SimEvent::Period { t } => Some(rec(t, "period", None, None, None)),
            SimEvent::JobDone { .. } => None,
        }
    }
}

pub fn event_log_jsonl(log: &[EventRecord]) -> String {
    let mut out = String::new();
    for rec in log {
        out.push_str(&serde_json::to_string(rec).expect("event record serializes"));
        out.push('\n');
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub jobs_total: u64,
    pub jobs_hit: u64,
    /// Number of tardy jobs (U).
    pub jobs_missed: u64,
    pub sla_satisfaction_rate: f64,
    /// Set when no job was observed and the rate is the vacuous 1.0.
    pub vacuous: bool,
    pub total_energy_pj: f64,
    pub sa_busy_fraction: Vec<f64>,
    pub makespan: Cycles,
}

/// `hits / (hits + misses)`, or 1.0 for an empty run.
pub fn sla_satisfaction_rate(hits: u64, misses: u64) -> f64 {
    let total = hits + misses;
    if total == 0 {
        1.0
    } else {
        hits as f64 / total as f64
    }
}

/// Folds engine events into [`Metrics`].
#[derive(Debug, Clone)]
pub struct MetricsCollector {
    hits: u64,
    misses: u64,
    energy_pj: f64,
    busy: Vec<Cycles>,
    makespan: Cycles,
}

impl MetricsCollector {
    pub fn new(num_sas: usize) -> Self {
        MetricsCollector { hits: 0, misses: 0, energy_pj: 0.0, busy: vec![0; num_sas], makespan: 0 }
    }

    pub fn observe(&mut self, ev: &SimEvent) {
        match *ev {
            SimEvent::Finish { t, sa, start, energy_pj, .. } => {
                self.energy_pj += energy_pj;
                self.busy[sa] += t - start;
                self.makespan = self.makespan.max(t);
            }
            SimEvent::JobDone { hit: true, .. } => self.hits += 1,
            SimEvent::JobDone { hit: false, .. } => self.misses += 1,
            _ => {}
        }
    }

    pub fn finish(&self) -> Metrics {
        let total = self.hits + self.misses;
        Metrics {
            jobs_total: total,
            jobs_hit: self.hits,
            jobs_missed: self.misses,
            sla_satisfaction_rate: sla_satisfaction_rate(self.hits, self.misses),
            vacuous: total == 0,
            total_energy_pj: self.energy_pj,
            sa_busy_fraction: self
                .busy
                .iter()
                .map(|&b| if self.makespan == 0 { 0.0 } else { b as f64 / self.makespan as f64 })
                .collect(),
            makespan: self.makespan,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub record_log: bool,
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub metrics: Metrics,
    pub log: Vec<EventRecord>,
    /// Ready-queue length at every scheduler invocation.
    pub rq_lengths: Vec<usize>,
}

/// Runs `trace` to completion under `scheduler`, invoking it every
/// `period` cycles on the merged residual + newly arrived ready queue.
pub fn run_trace(
    cfg: &MasConfig,
    table: &CostTable,
    trace: &RequestTrace,
    scheduler: &mut dyn Scheduler,
    period: Cycles,
    options: &RunOptions,
) -> Result<RunResult, RunError> {
    if period == 0 {
        return Err(SimError::ZeroPeriod.into());
    }
    let mut engine = Engine::new(cfg, table);
    let mut collector = MetricsCollector::new(cfg.num_sas());
    let mut log = Vec::new();
    let mut rq_lengths = Vec::new();
    let mut obs = |ev: &SimEvent| {
        collector.observe(ev);
        if options.record_log {
            if let Some(rec) = EventRecord::from_event(ev) {
                log.push(rec);
            }
        }
    };
    let mut jobs = trace.jobs.clone();
    jobs.sort_by_key(|j| (j.arrival(), j.job_id()));
    let mut next = 0;
    loop {
        while next < jobs.len() && jobs[next].arrival() <= engine.now() {
            engine.admit(jobs[next].clone(), &mut obs)?;
            next += 1;
        }
        if engine.is_drained() {
            let Some(job) = jobs.get(next) else { break };
            let boundary = job.arrival().div_ceil(period).saturating_mul(period);
            engine.idle_until(boundary);
            continue;
        }
        let snapshot = engine.snapshot();
        let decisions = if snapshot.ready_queue.is_empty() {
            Vec::new()
        } else {
            rq_lengths.push(snapshot.ready_queue.len());
            let env = SchedEnv { cfg, table, engine: &engine, period };
            scheduler
                .schedule(&snapshot, &env)
                .map_err(|source| RunError::Scheduler { name: scheduler.name(), source })?
        };
        engine.advance_period(&decisions, period, &mut obs)?;
    }
    drop(obs);
    Ok(RunResult { metrics: collector.finish(), log, rq_lengths })
}
