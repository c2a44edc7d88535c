use serde::{Deserialize, Serialize};

use crate::cost::CostTable;
use crate::model::{Cycles, Decision, MasConfig, SubJobRef, SystemSnapshot};
use crate::rational;

use super::AgentError;

/// Normalisation constants of the state encoding. They are stored with a
/// trained policy so inference sees the same scaling.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureNorms {
    /// Divisor of every time-like feature, in cycles.
    pub time_scale: f64,
    /// Upper clip of normalised time features.
    pub cap: f64,
    pub num_models: usize,
    pub max_layers: usize,
}

impl FeatureNorms {
    pub fn new(time_scale: Cycles, cap: f64, table: &CostTable) -> Self {
        FeatureNorms {
            time_scale: time_scale.max(1) as f64,
            cap,
            num_models: table.num_models(),
            max_layers: table.max_layers(),
        }
    }

    fn time(&self, cycles: Cycles) -> f64 {
        (cycles as f64 / self.time_scale).min(self.cap)
    }
}

/// Features per sub-job: model id, layer id, deadline, waiting time, then
/// one latency and one bandwidth slot per SA.
pub fn state_width(num_sas: usize) -> usize {
    4 + 2 * num_sas
}

/// Priority followed by one preference score per SA.
pub fn action_width(num_sas: usize) -> usize {
    1 + num_sas
}

/// Primer step followed by one step per ready-queue entry.
#[derive(Debug, Clone, PartialEq)]
pub struct StateEncoding {
    pub steps: Vec<Vec<f64>>,
    pub entries: Vec<SubJobRef>,
}

impl StateEncoding {
    /// Number of ready-queue entries (excludes the primer).
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// One action vector per ready-queue entry, values in [-1, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct ActionEncoding {
    pub steps: Vec<Vec<f64>>,
}

pub fn encode_state(
    snapshot: &SystemSnapshot,
    table: &CostTable,
    cfg: &MasConfig,
    norms: &FeatureNorms,
) -> Result<StateEncoding, AgentError> {
    let m = cfg.num_sas();
    let width = state_width(m);
    let bandwidth = rational::to_f64(cfg.dram_bandwidth());
    let mut steps = Vec::with_capacity(snapshot.ready_queue.len() + 1);
    let mut primer = vec![0.0; width];
    for (sa, &busy) in snapshot.busy_until.iter().enumerate().take(m) {
        primer[4 + sa] = norms.time(busy);
    }
    steps.push(primer);
    let mut entries = Vec::with_capacity(snapshot.ready_queue.len());
    for e in &snapshot.ready_queue {
        let mut v = Vec::with_capacity(width);
        v.push(e.model_id as f64 / norms.num_models.max(1) as f64);
        v.push(e.layer as f64 / norms.max_layers.max(1) as f64);
        v.push(norms.time(e.deadline().saturating_sub(snapshot.now)));
        v.push(norms.time(snapshot.now.saturating_sub(e.arrival)));
        let mut bws = Vec::with_capacity(m);
        for sa in 0..m {
            let cost = table
                .try_get(e.model_id, e.layer, sa)
                .ok_or(AgentError::MissingCost { model: e.model_id, layer: e.layer, sa })?;
            v.push(norms.time(cost.cycles));
            bws.push(cost.bandwidth_f64() / bandwidth);
        }
        v.extend(bws);
        steps.push(v);
        entries.push(e.sub_job());
    }
    Ok(StateEncoding { steps, entries })
}

/// Priority is the first element; the SA is the argmax of the remaining
/// scores, ties to the lowest index.
pub fn decode_action(action: &ActionEncoding) -> Vec<Decision> {
    action
        .steps
        .iter()
        .map(|v| {
            let mut sa = 0;
            for m in 1..v.len().saturating_sub(1) {
                if v[1 + m] > v[1 + sa] {
                    sa = m;
                }
            }
            Decision { priority: v.first().copied().unwrap_or(0.0), sa }
        })
        .collect()
}
