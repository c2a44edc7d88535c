//! Multi-tenant request traces: Pareto inter-arrival times, uniformly chosen
//! models, deadlines from a QoS factor on each model's minimum latency.

use std::collections::HashSet;
use std::fmt;

use rand::distr::{Distribution, weighted::WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Pareto;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cost::{min_job_latency, CostError, CostTable};
use crate::model::{Cycles, Job, ModelError, QosLevel};

#[derive(Debug, Error)]
pub enum WorkloadError {
    #[error("workload set is empty")]
    EmptyWorkload,
    #[error("unknown workload `{0}`")]
    UnknownWorkload(String),
    #[error("model `{0}` is not in the cost table")]
    UnknownModel(String),
    #[error("invalid trace parameters: {0}")]
    Params(String),
    #[error("trace line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Cost(#[from] CostError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WorkloadKind {
    Light,
    Heavy,
    Mixed,
    /// Every model in the cost table.
    All,
}

impl WorkloadKind {
    pub fn parse(name: &str) -> Result<Self, WorkloadError> {
        match name.to_ascii_lowercase().as_str() {
            "light" => Ok(WorkloadKind::Light),
            "heavy" => Ok(WorkloadKind::Heavy),
            "mixed" => Ok(WorkloadKind::Mixed),
            "all" => Ok(WorkloadKind::All),
            _ => Err(WorkloadError::UnknownWorkload(name.to_string())),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            WorkloadKind::Light => "light",
            WorkloadKind::Heavy => "heavy",
            WorkloadKind::Mixed => "mixed",
            WorkloadKind::All => "all",
        }
    }

    pub fn model_names(self) -> &'static [&'static str] {
        const LIGHT: &[&str] = &["squeezenet", "yolo-lite", "kws"];
        const HEAVY: &[&str] = &["alexnet", "inception-v3", "resnet50", "yolo-v2"];
        const MIXED: &[&str] =
            &["squeezenet", "yolo-lite", "kws", "alexnet", "inception-v3", "resnet50", "yolo-v2"];
        match self {
            WorkloadKind::Light => LIGHT,
            WorkloadKind::Heavy => HEAVY,
            WorkloadKind::Mixed => MIXED,
            WorkloadKind::All => &[],
        }
    }
}

impl fmt::Display for WorkloadKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WorkloadSet {
    pub kind: WorkloadKind,
    pub model_ids: Vec<usize>,
}

impl WorkloadSet {
    /// Resolves the kind's model names against `table`.
    pub fn resolve(kind: WorkloadKind, table: &CostTable) -> Result<Self, WorkloadError> {
        let model_ids = match kind {
            WorkloadKind::All => (0..table.num_models()).collect(),
            _ => kind
                .model_names()
                .iter()
                .map(|name| {
                    table.model_id(name).ok_or_else(|| WorkloadError::UnknownModel(name.to_string()))
                })
                .collect::<Result<Vec<_>, _>>()?,
        };
        if model_ids.is_empty() {
            return Err(WorkloadError::EmptyWorkload);
        }
        Ok(WorkloadSet { kind, model_ids })
    }
}

/// Relative weights of the three QoS levels in a trace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QosMix {
    pub low: f64,
    pub medium: f64,
    pub high: f64,
}

impl QosMix {
    pub fn only(level: QosLevel) -> Self {
        let mut mix = QosMix { low: 0.0, medium: 0.0, high: 0.0 };
        match level {
            QosLevel::Low => mix.low = 1.0,
            QosLevel::Medium => mix.medium = 1.0,
            QosLevel::High => mix.high = 1.0,
        }
        mix
    }

    pub fn uniform() -> Self {
        QosMix { low: 1.0, medium: 1.0, high: 1.0 }
    }

    fn weights(&self) -> [f64; 3] {
        [self.low, self.medium, self.high]
    }
}

impl Default for QosMix {
    fn default() -> Self {
        QosMix::only(QosLevel::Medium)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceParams {
    pub workload: WorkloadSet,
    pub duration_cycles: Cycles,
    pub pareto_shape: f64,
    pub pareto_scale_cycles: f64,
    pub qos_medium_factor: f64,
    pub qos_mix: QosMix,
    pub seed: u64,
}

impl TraceParams {
    pub fn validate(&self) -> Result<(), WorkloadError> {
        if self.workload.model_ids.is_empty() {
            return Err(WorkloadError::EmptyWorkload);
        }
        if !(self.pareto_shape > 0.0 && self.pareto_shape.is_finite()) {
            return Err(WorkloadError::Params("pareto shape must be positive".into()));
        }
        if !(self.pareto_scale_cycles > 0.0 && self.pareto_scale_cycles.is_finite()) {
            return Err(WorkloadError::Params("pareto scale must be positive".into()));
        }
        if !(self.qos_medium_factor > 1.0 && self.qos_medium_factor.is_finite()) {
            return Err(WorkloadError::Params("QoS-medium factor must exceed 1".into()));
        }
        let w = self.qos_mix.weights();
        if w.iter().any(|x| !(*x >= 0.0 && x.is_finite())) || w.iter().sum::<f64>() <= 0.0 {
            return Err(WorkloadError::Params("QoS mix needs non-negative weights".into()));
        }
        Ok(())
    }
}

/// Pareto scale giving average load `load` on `num_sas` SAs: the mean
/// inter-arrival time is `mean_job_latency / (load * num_sas)`.
pub fn pareto_scale_for_load(
    load: f64,
    shape: f64,
    workload: &WorkloadSet,
    table: &CostTable,
    num_sas: usize,
) -> Result<f64, WorkloadError> {
    if !(load > 0.0) || !(shape > 1.0) || num_sas == 0 {
        return Err(WorkloadError::Params("load calibration needs load > 0 and shape > 1".into()));
    }
    let mut total = 0.0;
    for &m in &workload.model_ids {
        total += min_job_latency(m, table)? as f64;
    }
    let mean_latency = total / workload.model_ids.len() as f64;
    let mean_gap = mean_latency / (load * num_sas as f64);
    Ok(mean_gap * (shape - 1.0) / shape)
}

/// Deadline multiplier of a QoS level relative to the QoS-medium factor.
pub fn qos_factor(level: QosLevel, medium_factor: f64) -> f64 {
    match level {
        QosLevel::Low => 1.2 * medium_factor,
        QosLevel::Medium => medium_factor,
        QosLevel::High => 0.8 * medium_factor,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct RequestTrace {
    pub jobs: Vec<Job>,
}

impl RequestTrace {
    pub fn len(&self) -> usize {
        self.jobs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.jobs.is_empty()
    }

    /// One JSON object per job.
    pub fn to_jsonl(&self, table: &CostTable) -> String {
        let mut out = String::new();
        for job in &self.jobs {
            let line = TraceLine {
                job_id: job.job_id(),
                model: table.model_name(job.model_id()).unwrap_or("?").to_string(),
                arrival: job.arrival(),
                qos_cycles: job.qos_latency(),
                qos_level: job.qos_level(),
            };
            out.push_str(&serde_json::to_string(&line).expect("trace line serializes"));
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TraceLine {
    job_id: u64,
    model: String,
    arrival: Cycles,
    qos_cycles: Cycles,
    qos_level: QosLevel,
}

/// Parses a JSON-lines trace. Blank lines and objects carrying a
/// `provenance` key are skipped.
pub fn parse_trace_jsonl(text: &str, table: &CostTable) -> Result<RequestTrace, WorkloadError> {
    let mut jobs = Vec::new();
    let mut ids = HashSet::new();
    let mut last_arrival = 0;
    for (index, raw) in text.lines().enumerate() {
        let line = index + 1;
        let raw = raw.trim();
        if raw.is_empty() {
            continue;
        }
        let err = |message: String| WorkloadError::Parse { line, message };
        let value: serde_json::Value = serde_json::from_str(raw).map_err(|e| err(e.to_string()))?;
        if value.get("provenance").is_some() {
            continue;
        }
        let entry: TraceLine = serde_json::from_value(value).map_err(|e| err(e.to_string()))?;
        let model_id =
            table.model_id(&entry.model).ok_or_else(|| err(format!("unknown model `{}`", entry.model)))?;
        if entry.arrival < last_arrival {
            return Err(err("arrival times must be non-decreasing".into()));
        }
        if !ids.insert(entry.job_id) {
            return Err(err(format!("duplicate job id {}", entry.job_id)));
        }
        last_arrival = entry.arrival;
        let job = Job::new(entry.job_id, model_id, entry.arrival, entry.qos_cycles, entry.qos_level)
            .map_err(|e| err(e.to_string()))?;
        jobs.push(job);
    }
    Ok(RequestTrace { jobs })
}

/// Pure function of `(params, table)`.
pub fn generate_trace(params: &TraceParams, table: &CostTable) -> Result<RequestTrace, WorkloadError> {
    params.validate()?;
    let mut min_latency = Vec::with_capacity(params.workload.model_ids.len());
    for &m in &params.workload.model_ids {
        min_latency.push(min_job_latency(m, table)?);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let gaps = Pareto::new(params.pareto_scale_cycles, params.pareto_shape)
        .map_err(|e| WorkloadError::Params(e.to_string()))?;
    let levels = WeightedIndex::new(params.qos_mix.weights())
        .map_err(|e| WorkloadError::Params(e.to_string()))?;

    let mut jobs = Vec::new();
    let mut clock = 0.0f64;
    loop {
        clock += gaps.sample(&mut rng);
        let arrival = clock.floor();
        if arrival >= params.duration_cycles as f64 {
            break;
        }
        let pick = rng.random_range(0..params.workload.model_ids.len());
        let level = QosLevel::ALL[levels.sample(&mut rng)];
        let factor = qos_factor(level, params.qos_medium_factor);
        let qos = ((factor * min_latency[pick] as f64).ceil() as Cycles).max(1);
        let job_id = jobs.len() as u64;
        jobs.push(Job::new(job_id, params.workload.model_ids[pick], arrival as Cycles, qos, level)?);
    }
    Ok(RequestTrace { jobs })
}
