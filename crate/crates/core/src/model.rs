//! Domain types shared by every other module.
//!
//! Time is measured in clock cycles of the single MAS clock domain.

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cost::CostParams;
use crate::rational::{self, Rational};

pub type Cycles = u64;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("sub-accelerator `{name}`: {what} must be at least 1")]
    ZeroResource { name: String, what: &'static str },
    #[error("sub-accelerator `{name}` runs at {found} Hz but the MAS clock is {expected} Hz")]
    ClockMismatch { name: String, expected: u64, found: u64 },
    #[error("sub-accelerator at position {position} declares id {id}")]
    SaIdOrder { position: usize, id: usize },
    #[error("a MAS needs at least one sub-accelerator")]
    NoSubAccelerators,
    #[error("DRAM bandwidth must be positive")]
    NonPositiveBandwidth,
    #[error("invalid DRAM bandwidth literal `{0}`")]
    BadBandwidth(String),
    #[error("job {job_id}: QoS latency must be positive")]
    ZeroQos { job_id: u64 },
    #[error("model `{0}` has no layers")]
    EmptyModel(String),
    #[error("model `{model}` layer {layer}: MAC count must be positive")]
    ZeroMacs { model: String, layer: usize },
    #[error("model description: {0}")]
    Json(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Dataflow {
    RowStationary,
    WeightStationary,
}

/// One sub-accelerator (SA) of the MAS.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SaSpec {
    #[serde(default)]
    pub id: usize,
    pub name: String,
    pub dataflow: Dataflow,
    pub num_pes: u32,
    pub macs_per_pe: u32,
    pub global_buffer_bytes: u64,
    pub pe_buffer_bytes: u64,
    #[serde(default = "default_frequency")]
    pub frequency_hz: u64,
}

fn default_frequency() -> u64 {
    1_000_000_000
}

impl SaSpec {
    pub fn new(
        id: usize,
        name: impl Into<String>,
        dataflow: Dataflow,
        num_pes: u32,
        macs_per_pe: u32,
        global_buffer_bytes: u64,
        pe_buffer_bytes: u64,
    ) -> Result<Self, ModelError> {
        let sa = SaSpec {
            id,
            name: name.into(),
            dataflow,
            num_pes,
            macs_per_pe,
            global_buffer_bytes,
            pe_buffer_bytes,
            frequency_hz: default_frequency(),
        };
        sa.validate()?;
        Ok(sa)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if self.num_pes == 0 {
            return Err(ModelError::ZeroResource { name: self.name.clone(), what: "num_pes" });
        }
        if self.macs_per_pe == 0 {
            return Err(ModelError::ZeroResource { name: self.name.clone(), what: "macs_per_pe" });
        }
        Ok(())
    }

    pub fn peak_macs_per_cycle(&self) -> u64 {
        u64::from(self.num_pes) * u64::from(self.macs_per_pe)
    }
}

/// The multi-accelerator system: an ordered list of SAs sharing one DRAM
/// channel of `dram_bandwidth` bytes per cycle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MasConfigFile", into = "MasConfigFile")]
pub struct MasConfig {
    sas: Vec<SaSpec>,
    dram_bandwidth: Rational,
    nop_energy_pj_per_bit: f64,
    cost: CostParams,
}

#[derive(Serialize, Deserialize)]
struct MasConfigFile {
    sas: Vec<SaSpec>,
    dram_bandwidth_bytes_per_cycle: serde_json::Value,
    #[serde(default = "default_nop_energy")]
    nop_energy_pj_per_bit: f64,
    #[serde(default)]
    cost_params: CostParams,
}

fn default_nop_energy() -> f64 {
    1.3
}

impl TryFrom<MasConfigFile> for MasConfig {
    type Error = ModelError;

    fn try_from(file: MasConfigFile) -> Result<Self, Self::Error> {
        let literal = match &file.dram_bandwidth_bytes_per_cycle {
            serde_json::Value::Number(n) => n.to_string(),
            serde_json::Value::String(s) => s.clone(),
            other => return Err(ModelError::BadBandwidth(other.to_string())),
        };
        let bandwidth = parse_bandwidth(&literal)?;
        let mut sas = file.sas;
        // Ids default to the list position when omitted.
        for (position, sa) in sas.iter_mut().enumerate() {
            if sa.id == 0 {
                sa.id = position;
            }
        }
        MasConfig::new(sas, bandwidth, file.nop_energy_pj_per_bit, file.cost_params)
    }
}

impl From<MasConfig> for MasConfigFile {
    fn from(cfg: MasConfig) -> Self {
        MasConfigFile {
            sas: cfg.sas,
            dram_bandwidth_bytes_per_cycle: serde_json::Value::String(cfg.dram_bandwidth.to_string()),
            nop_energy_pj_per_bit: cfg.nop_energy_pj_per_bit,
            cost_params: cfg.cost,
        }
    }
}

/// Accepts `16`, `12.5` or `25/2`.
pub fn parse_bandwidth(literal: &str) -> Result<Rational, ModelError> {
    let value = match literal.split_once('/') {
        Some((n, d)) => {
            let n = rational::parse_decimal(n);
            let d = rational::parse_decimal(d);
            match (n, d) {
                (Some(n), Some(d)) if d != rational::from_u64(0) => Some(n / d),
                _ => None,
            }
        }
        None => rational::parse_decimal(literal),
    };
    let value = value.ok_or_else(|| ModelError::BadBandwidth(literal.to_string()))?;
    if value <= rational::from_u64(0) {
        return Err(ModelError::NonPositiveBandwidth);
    }
    Ok(value)
}

impl MasConfig {
    pub fn new(
        sas: Vec<SaSpec>,
        dram_bandwidth: Rational,
        nop_energy_pj_per_bit: f64,
        cost: CostParams,
    ) -> Result<Self, ModelError> {
        if sas.is_empty() {
            return Err(ModelError::NoSubAccelerators);
        }
        if dram_bandwidth <= rational::from_u64(0) {
            return Err(ModelError::NonPositiveBandwidth);
        }
        let clock = sas[0].frequency_hz;
        for (position, sa) in sas.iter().enumerate() {
            sa.validate()?;
            if sa.id != position {
                return Err(ModelError::SaIdOrder { position, id: sa.id });
            }
            if sa.frequency_hz != clock {
                return Err(ModelError::ClockMismatch {
                    name: sa.name.clone(),
                    expected: clock,
                    found: sa.frequency_hz,
                });
            }
        }
        Ok(MasConfig { sas, dram_bandwidth, nop_energy_pj_per_bit, cost })
    }

    /// Six SAs built from the Eyeriss-like (row stationary) and Simba-like
    /// (weight stationary) classes, two small and one large of each, at
    /// 16 GB/s DRAM bandwidth and 1 GHz.
    pub fn reference() -> Self {
        use Dataflow::*;
        let kib = 1024;
        let classes = [
            ("eyeriss-small-0", RowStationary, 256, 1, 64 * kib, 220),
            ("eyeriss-small-1", RowStationary, 256, 1, 64 * kib, 220),
            ("eyeriss-large", RowStationary, 512, 1, 64 * kib, 220),
            ("simba-small-0", WeightStationary, 16, 16, 32 * kib, 24 * kib),
            ("simba-small-1", WeightStationary, 16, 16, 32 * kib, 24 * kib),
            ("simba-large", WeightStationary, 32, 16, 64 * kib, 24 * kib),
        ];
        let sas = classes
            .iter()
            .enumerate()
            .map(|(id, &(name, df, pes, macs, gb, pb))| {
                SaSpec::new(id, name, df, pes, macs, gb, pb).expect("reference SA is valid")
            })
            .collect();
        MasConfig::new(sas, rational::from_u64(16), 1.3, CostParams::default())
            .expect("reference MAS is valid")
    }

    pub fn sas(&self) -> &[SaSpec] {
        &self.sas
    }

    pub fn num_sas(&self) -> usize {
        self.sas.len()
    }

    pub fn dram_bandwidth(&self) -> &Rational {
        &self.dram_bandwidth
    }

    pub fn nop_energy_pj_per_bit(&self) -> f64 {
        self.nop_energy_pj_per_bit
    }

    pub fn cost_params(&self) -> &CostParams {
        &self.cost
    }

    pub fn with_bandwidth(&self, bandwidth: Rational) -> Result<Self, ModelError> {
        MasConfig::new(self.sas.clone(), bandwidth, self.nop_energy_pj_per_bit, self.cost.clone())
    }

    pub fn with_cost_params(&self, cost: CostParams) -> Self {
        MasConfig { cost, ..self.clone() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerDesc {
    #[serde(skip)]
    pub layer_id: usize,
    pub macs: u64,
    pub input_bytes: u64,
    pub weight_bytes: u64,
    pub output_bytes: u64,
}

impl LayerDesc {
    pub fn total_bytes(&self) -> u64 {
        self.input_bytes.saturating_add(self.weight_bytes).saturating_add(self.output_bytes)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DnnModelDesc {
    #[serde(skip)]
    pub model_id: usize,
    pub name: String,
    pub layers: Vec<LayerDesc>,
}

impl DnnModelDesc {
    pub fn validate(&self) -> Result<(), ModelError> {
        if self.layers.is_empty() {
            return Err(ModelError::EmptyModel(self.name.clone()));
        }
        for (s, layer) in self.layers.iter().enumerate() {
            if layer.macs == 0 {
                return Err(ModelError::ZeroMacs { model: self.name.clone(), layer: s });
            }
        }
        Ok(())
    }
}

/// Parses one model description `{"name", "layers": [...]}`.
pub fn parse_model_json(text: &str, model_id: usize) -> Result<DnnModelDesc, ModelError> {
    let mut model: DnnModelDesc =
        serde_json::from_str(text).map_err(|e| ModelError::Json(e.to_string()))?;
    finish_model(&mut model, model_id)?;
    Ok(model)
}

fn finish_model(model: &mut DnnModelDesc, model_id: usize) -> Result<(), ModelError> {
    model.model_id = model_id;
    for (s, layer) in model.layers.iter_mut().enumerate() {
        layer.layer_id = s;
    }
    model.validate()
}

/// The set of DNN models the system knows about, indexed by `model_id`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelZoo {
    models: Vec<DnnModelDesc>,
}

const BUNDLED_MODELS: &str = include_str!("../data/models.json");

impl ModelZoo {
    pub fn new(mut models: Vec<DnnModelDesc>) -> Result<Self, ModelError> {
        let mut names = HashSet::new();
        for (id, model) in models.iter_mut().enumerate() {
            finish_model(model, id)?;
            if !names.insert(model.name.clone()) {
                return Err(ModelError::Json(format!("duplicate model name `{}`", model.name)));
            }
        }
        Ok(ModelZoo { models })
    }

    /// Parses a JSON array of model descriptions.
    pub fn from_json(text: &str) -> Result<Self, ModelError> {
        let models: Vec<DnnModelDesc> =
            serde_json::from_str(text).map_err(|e| ModelError::Json(e.to_string()))?;
        ModelZoo::new(models)
    }

    /// Seven synthetic models sized after the light (SqueezeNet, YOLO-Lite,
    /// keyword spotting) and heavy (AlexNet, InceptionV3, ResNet50, YOLOv2)
    /// benchmark classes.
    pub fn bundled() -> Self {
        ModelZoo::from_json(BUNDLED_MODELS).expect("bundled models are valid")
    }

    pub fn models(&self) -> &[DnnModelDesc] {
        &self.models
    }

    pub fn len(&self) -> usize {
        self.models.len()
    }

    pub fn is_empty(&self) -> bool {
        self.models.is_empty()
    }

    pub fn get(&self, model_id: usize) -> Option<&DnnModelDesc> {
        self.models.get(model_id)
    }

    pub fn by_name(&self, name: &str) -> Option<&DnnModelDesc> {
        self.models.iter().find(|m| m.name.eq_ignore_ascii_case(name))
    }

    pub fn max_layers(&self) -> usize {
        self.models.iter().map(|m| m.layers.len()).max().unwrap_or(0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum QosLevel {
    Low,
    Medium,
    High,
}

impl QosLevel {
    pub const ALL: [QosLevel; 3] = [QosLevel::Low, QosLevel::Medium, QosLevel::High];

    pub fn as_str(self) -> &'static str {
        match self {
            QosLevel::Low => "low",
            QosLevel::Medium => "medium",
            QosLevel::High => "high",
        }
    }

    pub fn parse(text: &str) -> Option<Self> {
        match text.to_ascii_lowercase().as_str() {
            "low" => Some(QosLevel::Low),
            "medium" => Some(QosLevel::Medium),
            "high" => Some(QosLevel::High),
            _ => None,
        }
    }
}

impl fmt::Display for QosLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A tenant inference request for a whole model.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Job {
    job_id: u64,
    model_id: usize,
    arrival: Cycles,
    qos_latency: Cycles,
    qos_level: QosLevel,
}

impl Job {
    pub fn new(
        job_id: u64,
        model_id: usize,
        arrival: Cycles,
        qos_latency: Cycles,
        qos_level: QosLevel,
    ) -> Result<Self, ModelError> {
        if qos_latency == 0 {
            return Err(ModelError::ZeroQos { job_id });
        }
        Ok(Job { job_id, model_id, arrival, qos_latency, qos_level })
    }

    pub fn job_id(&self) -> u64 {
        self.job_id
    }
    pub fn model_id(&self) -> usize {
        self.model_id
    }
    pub fn arrival(&self) -> Cycles {
        self.arrival
    }
    pub fn qos_latency(&self) -> Cycles {
        self.qos_latency
    }
    pub fn qos_level(&self) -> QosLevel {
        self.qos_level
    }

    pub fn absolute_deadline(&self) -> Cycles {
        absolute_deadline(self)
    }
}

pub fn absolute_deadline(job: &Job) -> Cycles {
    job.arrival.saturating_add(job.qos_latency)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SubJobRef {
    pub job: u64,
    pub layer: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SubJobState {
    Pending,
    Running { sa: usize, start: Cycles },
    Finished { sa: usize, start: Cycles, finish: Cycles },
    Dropped,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("illegal sub-job transition {from:?} -> {to:?}")]
pub struct TransitionError {
    pub from: SubJobState,
    pub to: SubJobState,
}

impl SubJobState {
    /// Pending -> Running -> Finished, or Pending -> Dropped.
    pub fn transition(self, to: SubJobState) -> Result<SubJobState, TransitionError> {
        use SubJobState::*;
        match (self, to) {
            (Pending, Running { .. }) | (Pending, Dropped) => Ok(to),
            (Running { sa, start }, Finished { sa: sa2, start: s2, finish })
                if sa == sa2 && start == s2 && finish > start =>
            {
                Ok(to)
            }
            _ => Err(TransitionError { from: self, to }),
        }
    }

    pub fn is_pending(self) -> bool {
        matches!(self, SubJobState::Pending)
    }

    pub fn is_terminal(self) -> bool {
        matches!(self, SubJobState::Finished { .. } | SubJobState::Dropped)
    }
}

/// One ready-queue entry: a pending sub-job together with the owning
/// job's timing data.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ReadyEntry {
    pub job_id: u64,
    pub model_id: usize,
    pub layer: usize,
    pub arrival: Cycles,
    pub qos_latency: Cycles,
}

impl ReadyEntry {
    pub fn deadline(&self) -> Cycles {
        self.arrival.saturating_add(self.qos_latency)
    }

    pub fn sub_job(&self) -> SubJobRef {
        SubJobRef { job: self.job_id, layer: self.layer }
    }

    /// Total order used everywhere a ready queue is sorted.
    pub fn sort_key(&self) -> (Cycles, u64, usize) {
        (self.deadline(), self.job_id, self.layer)
    }
}

/// Scheduler input at one invocation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SystemSnapshot {
    pub now: Cycles,
    /// Cycles remaining before each SA becomes free.
    pub busy_until: Vec<Cycles>,
    pub ready_queue: Vec<ReadyEntry>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SnapshotViolation {
    Unsorted { index: usize },
    Duplicate { job: u64, layer: usize },
    Expired { job: u64, layer: usize },
}

impl fmt::Display for SnapshotViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SnapshotViolation::Unsorted { index } => write!(f, "unsorted at index {index}"),
            SnapshotViolation::Duplicate { job, layer } => {
                write!(f, "duplicate entry for job {job} layer {layer}")
            }
            SnapshotViolation::Expired { job, layer } => {
                write!(f, "expired entry for job {job} layer {layer}")
            }
        }
    }
}

/// Reports every invariant breach in `snapshot`; an empty list means ok.
pub fn validate_snapshot(snapshot: &SystemSnapshot) -> Vec<SnapshotViolation> {
    let mut violations = Vec::new();
    let mut seen = HashSet::new();
    for (index, entry) in snapshot.ready_queue.iter().enumerate() {
        if index > 0 && snapshot.ready_queue[index - 1].sort_key() > entry.sort_key() {
            violations.push(SnapshotViolation::Unsorted { index });
        }
        if !seen.insert(entry.sub_job()) {
            violations.push(SnapshotViolation::Duplicate { job: entry.job_id, layer: entry.layer });
        }
        if entry.deadline() < snapshot.now {
            violations.push(SnapshotViolation::Expired { job: entry.job_id, layer: entry.layer });
        }
    }
    violations
}

/// Per-sub-job scheduler output.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Decision {
    /// Temporal priority in [-1, 1]; higher runs first.
    pub priority: f64,
    pub sa: usize,
}
